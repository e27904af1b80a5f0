"""Compare replication summaries and case-study fits against published values."""
from __future__ import annotations

from dataclasses import dataclass

from . import published


@dataclass
class Row:
    section: str
    item: str
    published: str
    computed: str
    criterion: str
    status: str  # pass | fail | skipped


def _flag(ok: bool) -> str:
    return "pass" if ok else "fail"


def _cmp(op: str, value: float, bound: float) -> bool:
    return value < bound if op == "<" else value > bound


def replication_rows(summary: dict) -> list[Row]:
    kind = summary["spec"]["kind"]
    cov = summary["covariate"]
    ref = published.SYNTHETIC.get((kind, cov))
    section = f"synthetic {kind} / {cov}"
    if ref is None:
        return [Row(section, "mean", "-", f"{summary['mean']:.3f}", "no published value", "skipped")]
    rows = [
        Row(section, "mean coefficient", f"{ref['mean']:.2f}", f"{summary['mean']:.3f}",
            f"within +/-{ref['tol']}", _flag(abs(summary["mean"] - ref["mean"]) <= ref["tol"])),
    ]
    op, bound = ref["significant"]
    rows.append(Row(section, "share p < 0.001", "-", f"{summary['significant_fraction']:.2f}",
                    f"{op} {bound}", _flag(_cmp(op, summary["significant_fraction"], bound))))
    for key in ("sd", "min", "max"):
        if key in ref:
            rows.append(Row(section, key, f"{ref[key]:.2f}", f"{summary[key]:.3f}", "informational", "skipped"))
    return rows


def case_rows(name: str, fit: dict | None, ref: dict) -> list[Row]:
    section = f"case study {name}"
    terms = [k for k in ref if isinstance(ref[k], dict)]
    if fit is None:
        return [Row(section, t, f"{ref[t]['estimate']:.3f}", "-", "-", "skipped") for t in terms]
    coefs = {c["name"]: c for c in fit["coefficients"]}
    rows = []
    for t in terms:
        r = ref[t]
        c = coefs.get(t)
        if c is None:
            rows.append(Row(section, t, f"{r['estimate']:.3f}", "missing", "-", "fail"))
            continue
        p = c["p_value"] if c["p_value"] is not None else float("nan")
        sig = p < published.SIGNIFICANCE
        pattern = (c["estimate"] * r["sign"] > 0) and (sig == r["significant"])
        rows.append(Row(section, f"{t} sign/significance",
                        f"{'+' if r['sign'] > 0 else '-'}, {'p<0.001' if r['significant'] else 'p>=0.001'}",
                        f"{c['estimate']:+.3f}, p={p:.3g}", "sign and significance", _flag(pattern)))
        rows.append(Row(section, f"{t} estimate", f"{r['estimate']:.3f} ({r['std_err']})",
                        f"{c['estimate']:.3f} ({c['std_err']:.3f})", f"within +/-{r['tol']}",
                        _flag(abs(c["estimate"] - r["estimate"]) <= r["tol"])))
    ok = fit["aic"] < fit["null_aic"]
    if name == "highschool":
        ok = ok and fit["null_aic"] >= 2 * fit["aic"]
    rows.append(Row(section, "AIC vs null AIC", f"{ref['aic']} vs {ref['null_aic']}",
                    f"{fit['aic']:.1f} vs {fit['null_aic']:.1f}",
                    "null >= 2 x fitted" if name == "highschool" else "fitted < null", _flag(ok)))
    return rows


def render(rows: list[Row]) -> str:
    lines = ["# Closure inference report", ""]
    section = None
    for r in rows:
        if r.section != section:
            section = r.section
            lines += ["", f"## {section}", "", "| item | published | computed | criterion | status |",
                      "|---|---|---|---|---|"]
        lines.append(f"| {r.item} | {r.published} | {r.computed} | {r.criterion} | {r.status} |")
    counts = {s: sum(r.status == s for r in rows) for s in ("pass", "fail", "skipped")}
    lines += ["", f"Summary: {counts['pass']} pass, {counts['fail']} fail, {counts['skipped']} skipped", ""]
    return "\n".join(lines)


def build(replications: list[dict], karate: dict | None, highschool: dict | None) -> list[Row]:
    rows: list[Row] = []
    for s in replications:
        rows += replication_rows(s)
    rows += case_rows("karate", karate, published.KARATE)
    rows += case_rows("highschool", highschool, published.HIGHSCHOOL)
    return rows
