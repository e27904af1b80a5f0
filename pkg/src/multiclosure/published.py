"""Published reference values and the tolerances used when comparing against them."""

# (mean, tolerance) of the replicated weighted closure coefficient, plus the
# required share of replications significant at p < 0.001.
SYNTHETIC = {
    ("random_complete", "weighted_sp"): {"mean": -0.09, "tol": 0.15, "sd": 0.34, "min": -1.55, "max": 0.73,
                                          "significant": ("<", 0.05)},
    ("triangles", "weighted_sp"): {"mean": 1.16, "tol": 0.10, "sd": 0.09, "min": 0.88, "max": 1.55,
                                    "significant": (">", 0.95)},
    ("mixed", "weighted_sp"): {"mean": 1.81, "tol": 0.15, "sd": 0.20, "min": 0.94, "max": 2.44,
                                "significant": (">", 0.95)},
    # single published run (0.08, SE 0.20, p = 0.694); criterion: > 80% non-significant
    ("mixed", "unweighted_sp"): {"mean": 0.08, "tol": 0.30, "significant": ("<", 0.20)},
}

KARATE = {
    "weighted_sp": {"estimate": -0.160, "std_err": 0.086, "tol": 0.15, "significant": False, "sign": -1},
    "match:faction": {"estimate": 1.090, "std_err": 0.104, "tol": 0.30, "significant": True, "sign": 1},
    "aic": 674.7,
    "null_aic": 869.1,
}

HIGHSCHOOL = {
    "weighted_sp": {"estimate": 0.819, "std_err": 0.003, "tol": 0.05, "significant": True, "sign": 1},
    "match:class": {"estimate": 0.879, "std_err": 0.005, "tol": 0.05, "significant": True, "sign": 1},
    "aic": 593853.5,
    "null_aic": 1346750.0,
}

SIGNIFICANCE = 0.001
