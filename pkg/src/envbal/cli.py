"""envbal command line.

Exit codes: 0 ok, 2 unreadable/invalid input data, 3 invalid configuration or
method precondition, 4 generation failure, 5 a hold-out split lost a class.
Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import Dataset, Scaler, class_stats, load
from .envelope import plan_layers
from .errors import ConfigError, DataError, EnvbalError, GenerationError
from .harness import Classifier, HoldoutProtocol, compare_methods, holdout_evaluate, read_report, write_report
from .sampler import BalanceConfig, balance

log = logging.getLogger("envbal")

METRIC_ALIASES = {"acc": "acc", "auc": "auc", "f": "f_measure", "f_measure": "f_measure", "g": "g_mean", "g_mean": "g_mean"}


def _add_input(p):
    p.add_argument("--format", choices=("csv", "keel"), help="input format (default: by suffix, .dat = keel)")
    p.add_argument("--label", default="-1", help="CSV label column name or index (default: last)")


def _add_sampler(p, methods):
    p.add_argument("--method", default="mifc-idmd", choices=methods)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=float, default=2.0, help="layer size = ceil(layer input / t)")
    p.add_argument("--layer-cap", type=int, default=9)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--bandwidth", type=float, default=None, help="rbf bandwidth (default: median heuristic)")
    p.add_argument("--correct-toward", choices=("layer", "original"), default="layer")
    p.add_argument("--m", type=float, default=2.0, help="fuzzification coefficient")
    p.add_argument("--eps", type=float, default=1e-5, help="FCM objective-change threshold")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--raw", action="store_true", help="skip min-max normalization")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envbal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"envbal {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="dataset summary and the layer plan balance would use")
    p.add_argument("input")
    _add_input(p)
    p.add_argument("--t", type=float, default=2.0)
    p.add_argument("--layer-cap", type=int, default=9)

    p = sub.add_parser("balance", help="write a balanced copy of a dataset")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--provenance", action="store_true", help="append a provenance column")
    _add_input(p)
    _add_sampler(p, ("mifc-idmd", "mifcm", "smote", "random"))

    p = sub.add_parser("evaluate", help="repeated hold-out evaluation")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--report", required=True)
    p.add_argument("--classifier", choices=("knn", "linear-hinge"), default="knn")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--jobs", type=int, default=1, help="repeats evaluated concurrently")
    _add_input(p)
    _add_sampler(p, ("none", "mifc-idmd", "mifcm", "smote", "random"))

    p = sub.add_parser("compare", help="Friedman test and Holm post-hoc over evaluation reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--metric", default="auc", choices=sorted(METRIC_ALIASES))
    p.add_argument("--alpha", type=float, default=0.05)
    return parser


def _load(args, path) -> Dataset:
    return load(path, args.format, args.label)


def _balance_config(args) -> BalanceConfig:
    return BalanceConfig(
        method=args.method,
        t=args.t,
        layer_cap=args.layer_cap,
        kernel=args.kernel,
        bandwidth=args.bandwidth,
        correction_target=args.correct_toward,
        m=args.m,
        epsilon=args.eps,
        max_iterations=args.max_iter,
        smote_k=args.smote_k,
        seed=args.seed,
    )


def cmd_inspect(args) -> int:
    ds = _load(args, args.input)
    st = class_stats(ds)
    print(f"dataset={ds.name} n={ds.n} d={ds.d} {st} minority={st.minority_label} majority={st.majority_label}")
    if st.maj_count > st.min_count and st.min_count >= 2:
        try:
            plan = plan_layers(st.min_count, st.maj_count, args.t, args.layer_cap)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        print(f"plan {plan}")
    else:
        print("plan none (nothing to generate)")
    return 0


def _fmt(v) -> str:
    return repr(float(v))


def cmd_balance(args) -> int:
    ds = _load(args, args.input)
    cfg = _balance_config(args)
    print("config: " + json.dumps({**cfg.as_dict(), "normalize": not args.raw}, sort_keys=True), file=sys.stderr)
    scaler = None if args.raw else Scaler.fit(ds.features)
    work = ds if scaler is None else scaler.apply(ds)
    try:
        bal = balance(work, cfg)
    except EnvbalError:
        raise
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise GenerationError(f"generation failed: {exc}") from exc

    # original rows are written from the input verbatim, generated rows mapped back
    gen = bal.generated_mask
    X = np.array(bal.dataset.features)
    X[~gen] = ds.features
    if scaler is not None and gen.any():
        X[gen] = scaler.inverse_transform(X[gen])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, ds.label_name] + (["provenance"] if args.provenance else []))
        for i in range(X.shape[0]):
            row = [_fmt(v) for v in X[i]] + [bal.dataset.labels[i]]
            w.writerow(row + ([bal.provenance[i]] if args.provenance else []))

    st = class_stats(bal.dataset)
    print(f"wrote {args.out}: n={bal.dataset.n} {st.minority_label}={st.min_count} {st.majority_label}={st.maj_count} generated={int(gen.sum())}")
    if bal.plan is not None:
        print(f"plan {bal.plan}")
    if bal.envelope is not None:
        for layer in bal.envelope.layers:
            print(f"layer {layer.index}: c={layer.size} input={layer.input_size} mmd_before={layer.mmd_before:.6g} mmd_after={layer.mmd_after:.6g}")
    for note in bal.notes:
        print(note, file=sys.stderr)
    return 0


def format_table(reports) -> str:
    head = f"{'dataset':<24} {'method':<10} {'Acc':>15} {'AUC':>15} {'F-M':>15} {'G-M':>15}"
    lines = [head]
    for r in reports:
        cells = [f"{r.mean(m):.4f}±{r.std(m):.4f}" for m in ("acc", "auc", "f_measure", "g_mean")]
        lines.append(f"{r.dataset:<24} {r.method:<10} " + " ".join(f"{c:>15}" for c in cells))
    return "\n".join(lines)


def cmd_evaluate(args) -> int:
    cfg = None if args.method == "none" else _balance_config(args)
    clf = Classifier(kind=args.classifier, knn_k=args.knn_k)
    proto = HoldoutProtocol(args.repeats, args.train_fraction, args.seed, normalize=not args.raw)
    reports = []
    for path in args.inputs:
        ds = _load(args, path)
        try:
            reports.append(holdout_evaluate(ds, cfg, clf, proto, n_jobs=args.jobs))
        except EnvbalError:
            raise
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            raise GenerationError(f"{path}: {exc}") from exc
    write_report(args.report, reports, label=args.method)
    print(format_table(reports))
    return 0


def cmd_compare(args) -> int:
    grouped: dict[str, list] = {}
    for path in args.reports:
        try:
            label, reports = read_report(path)
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read report {path}: {exc}") from None
        if label in grouped:
            label = f"{label}@{Path(path).stem}"
        grouped[label] = reports
    summary = compare_methods(grouped, METRIC_ALIASES[args.metric], args.alpha)
    print(f"metric={summary['metric']} datasets={len(summary['datasets'])} methods={len(summary['methods'])}")
    print("mean ranks:")
    for m, r in sorted(summary["mean_ranks"].items(), key=lambda kv: (kv[1], kv[0])):
        print(f"  {m:<24} {r:.4f}")
    print(f"friedman statistic={summary['friedman_statistic']:.6f} p={summary['friedman_p']:.6g}")
    print(f"holm vs best ({summary['best']}), alpha={summary['alpha']}:")
    for row in summary["holm"]:
        verdict = "reject" if row["reject"] else "keep"
        print(f"  {row['method']:<24} z={row['z']:.4f} p={row['p']:.6g} {verdict}")
    return 0


COMMANDS = {"inspect": cmd_inspect, "balance": cmd_balance, "evaluate": cmd_evaluate, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except EnvbalError as exc:
        print(f"envbal: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"envbal: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
