"""Command-line interface: ``multiclosure {stats,fit,synth,replicate,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import countmodel, ghype, report, statistics
from .mle import FitError
from .multigraph import NetworkInputError, karate_club, read_contact_records, read_network, write_edge_csv
from .synth import KINDS, GeneratorError, GeneratorSpec, generate, replicate

PROG = "multiclosure"
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one machine-parsable line instead of argparse's usage dump
        sys.stderr.write(f"{PROG}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _statistic_name(value: str) -> str:
    if value in ("weighted_sp", "unweighted_sp", "degree") or (value.startswith("match:") and len(value) > 6):
        return value
    raise argparse.ArgumentTypeError(
        f"unknown covariate {value!r} (choose weighted_sp, unweighted_sp, degree, match:<attr>)"
    )


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _positive(value: str) -> int:
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return v


def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--edges", type=Path, help="edge-list CSV with header source,target[,count]")
    g.add_argument("--attrs", type=Path, help="node-attribute CSV with header node,<attr>...")
    g.add_argument("--contacts", type=Path, help="raw 't i j Ci Cj' contact records (one edge per record)")
    g.add_argument("--metadata", type=Path, help="'node class ...' metadata accompanying --contacts")
    g.add_argument("--dataset", choices=["karate"], help="use a bundled dataset instead of files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Triadic closure statistics and inference for multi-edge networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="compute dyad statistic matrices and their R^2 against edge counts")
    _add_input(p)
    p.add_argument("--stat", nargs="+", type=_statistic_name, default=["weighted_sp"], metavar="NAME")
    p.add_argument("--out", type=Path, help="output directory (one file per statistic)")
    p.add_argument("--format", choices=["csv", "tsv"], default="csv",
                   help="csv: dense labelled matrix; tsv: long node_i, node_j, value")

    p = sub.add_parser("fit", help="fit a gHypEG or count model")
    _add_input(p)
    p.add_argument("--covariate", nargs="+", type=_statistic_name, required=True, metavar="NAME")
    p.add_argument("--model", choices=["ghype", "count"], default="ghype")
    p.add_argument("--xi", choices=["config", "meandeg"], default="config")
    p.add_argument("--likelihood", choices=["auto", "exact", "multinomial"], default="auto")
    p.add_argument("--nonzero", action="store_true", help="count model: include the nonzero term")
    p.add_argument("--out", type=Path, help="write the fit here (stdout when omitted)")
    p.add_argument("--format", choices=["json", "tsv"], default="json")

    def generator_args(p):
        p.add_argument("--kind", choices=KINDS, required=True)
        p.add_argument("--n", type=_positive, default=34)
        p.add_argument("--m", type=_positive, default=None, help="edges (default 1000; 2000 for mixed)")
        p.add_argument("--n-tri", type=_positive, default=26)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--complete-baseline", action="store_true",
                       help="seed every dyad of the random part with one edge (binary density 1)")

    p = sub.add_parser("synth", help="generate one synthetic network as an edge list")
    generator_args(p)
    p.add_argument("--out", type=Path, help="edge CSV path (stdout when omitted)")

    p = sub.add_parser("replicate", help="fit the closure coefficient over many generated networks")
    generator_args(p)
    p.add_argument("--reps", type=_positive, default=100)
    p.add_argument("--covariate", choices=["weighted_sp", "unweighted_sp"], default="weighted_sp")
    p.add_argument("--xi", choices=["config", "meandeg"], default="meandeg")
    p.add_argument("--likelihood", choices=["auto", "exact", "multinomial"], default="auto")
    p.add_argument("--threads", type=_positive, default=os.cpu_count() or 1)
    p.add_argument("--out", type=Path, help="output prefix: writes PREFIX.json and PREFIX.tsv")
    p.add_argument("--format", choices=["json", "tsv"], default="json", help="stdout format without --out")

    p = sub.add_parser("report", help="markdown comparison with published values")
    p.add_argument("--replication", type=Path, nargs="*", default=[], help="replicate JSON outputs")
    p.add_argument("--karate", type=Path, help="fit JSON for the karate club case study")
    p.add_argument("--highschool", type=Path, help="fit JSON for the high-school case study")
    p.add_argument("--out", type=Path, help="markdown path (stdout when omitted)")
    return parser


def _load_network(args):
    sources = [args.edges is not None, args.contacts is not None, args.dataset is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --edges, --contacts or --dataset")
    if args.dataset == "karate":
        return karate_club()
    if args.contacts is not None:
        for path in (args.contacts, args.metadata):
            if path is not None and not path.exists():
                raise NetworkInputError(f"{path}: no such file")
        return read_contact_records(args.contacts, args.metadata)
    for path in (args.edges, args.attrs):
        if path is not None and not path.exists():
            raise NetworkInputError(f"{path}: no such file")
    return read_network(args.edges, args.attrs)


def _statistics(net, names):
    out = []
    for name in names:
        try:
            out.append(statistics.compute(net, name))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    return out


def cmd_stats(args) -> int:
    net = _load_network(args)
    stats = _statistics(net, args.stat)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    for s in stats:
        r2 = statistics.variance_explained(net, s) if net.n >= 3 else 0.0
        print(f"{s.name}\tR2={r2:.6f}")
        if args.out is not None:
            safe = s.name.replace(":", "_")
            if args.format == "csv":
                statistics.write_dense_csv(s, net.labels, args.out / f"{safe}.csv")
            else:
                statistics.write_long_tsv(s, net.labels, args.out / f"{safe}.tsv")
    return 0


def _fit_tsv(result) -> str:
    lines = ["name\testimate\tstd_err\tp_value\tstars"]
    for n in result.names:
        r = result.row(n)
        lines.append(f"{n}\t{r['estimate']!r}\t{r['std_err']!r}\t{r['p_value']!r}\t{r['stars']}")
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    net = _load_network(args)
    covs = _statistics(net, args.covariate)
    if args.model == "ghype":
        result = ghype.fit(net, covs, degree_corrected=args.xi == "config", likelihood=args.likelihood)
    else:
        result = countmodel.fit(net, covs, include_nonzero=args.nonzero)
    text = result.to_json() if args.format == "json" else _fit_tsv(result)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
        print(result.table())
    else:
        sys.stdout.write(text)
        print(result.table(), file=sys.stderr)
    return 0


def _spec(args) -> GeneratorSpec:
    m = args.m if args.m is not None else (2000 if args.kind == "mixed" else 1000)
    return GeneratorSpec(args.kind, args.n, m, args.n_tri, args.seed, args.complete_baseline)


def cmd_synth(args) -> int:
    net = generate(_spec(args))
    if args.out is not None:
        write_edge_csv(net, args.out)
    else:
        sys.stdout.write("source,target,count\n")
        for a, b, c in net.edge_rows():
            sys.stdout.write(f"{a},{b},{c}\n")
    return 0


def cmd_replicate(args) -> int:
    summary = replicate(_spec(args), args.reps, covariate=args.covariate, degree_corrected=args.xi == "config",
                        likelihood=args.likelihood, threads=args.threads)
    if args.out is not None:
        prefix = str(args.out)
        Path(prefix + ".json").write_text(summary.to_json(), encoding="utf-8")
        summary.write_tsv(prefix + ".tsv")
        d = summary.to_dict()
        print(f"{d['spec']['kind']} {d['covariate']}: mean={d['mean']:.4f} sd={d['sd']:.4f} "
              f"min={d['min']:.4f} max={d['max']:.4f} significant={d['significant_fraction']:.2f} "
              f"failures={d['failures']}")
    elif args.format == "json":
        sys.stdout.write(summary.to_json())
    else:
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "reps.tsv"
            summary.write_tsv(path)
            sys.stdout.write(path.read_text(encoding="utf-8"))
    return 0


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise NetworkInputError(f"{path}: no such file")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise NetworkInputError(f"{path}: invalid JSON ({exc})") from None


def cmd_report(args) -> int:
    if not args.replication and args.karate is None and args.highschool is None:
        raise FitError("nothing to report: pass --replication, --karate and/or --highschool outputs")
    missing = [str(p) for p in [*args.replication, args.karate, args.highschool] if p is not None and not p.exists()]
    if missing:
        raise NetworkInputError(f"missing inputs: {', '.join(missing)}")
    reps = [_read_json(p) for p in args.replication]
    karate = _read_json(args.karate) if args.karate else None
    hs = _read_json(args.highschool) if args.highschool else None
    text = report.render(report.build(reps, karate, hs))
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "fit": cmd_fit,
    "synth": cmd_synth,
    "replicate": cmd_replicate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format=f"{PROG}: %(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"{PROG}: error: {exc}\n")
        return EXIT_USAGE
    except (NetworkInputError, GeneratorError, FitError, ValueError, KeyError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        sys.stderr.write(f"{PROG}: error: {msg}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
