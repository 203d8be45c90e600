"""Command-line front end.

Exit codes: 0 success (also when no release is feasible), 2 usage or
validation error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .anonymizer import basic_anonymization, identity_release, load_release, write_release
from .data import (
    Dataset,
    ValidationError,
    column_matrix,
    fit_normalization,
    load_dataset,
    load_schema,
    write_dataset,
)
from .fred import (
    QUASI_BASELINE,
    RELEASE_ONLY_BASELINE,
    CandidateRecord,
    FredConfig,
    fred_anonymize,
    select_optimal,
    sweep,
)
from .fuzzy import fuse, parse_fis
from .metrics import SCALAR, TRACE, ObjectiveConfig, dissimilarity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3

PLOT_FILES = {
    "before": "before.csv",
    "after": "after.csv",
    "gain": "gain.csv",
    "utility": "utility.csv",
    "objective": "objective.csv",
}

# flags that never enter the config echo
_NOT_ECHOED = {"--out", "--stamp"}


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _echo_argv(argv: list[str]) -> list[str]:
    out, skip = [], False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        name = tok.split("=", 1)[0]
        if name in _NOT_ECHOED:
            skip = name == "--out" and "=" not in tok
            continue
        out.append(tok)
    return out


def _meta(args, argv, inputs: dict[str, str]) -> dict:
    meta = {
        "tool": {"name": "fredanon", "version": __version__},
        "command": args.command,
        "argv": _echo_argv(argv),
        "inputs": {k: {"path": str(v), "sha256": _digest(v)} for k, v in inputs.items() if v is not None},
    }
    if getattr(args, "stamp", False):
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _write_xy(path: Path, ks, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "value"])
        for k, v in zip(ks, values):
            w.writerow([k, repr(float(v))])


def _write_plots(out: Path, rows) -> None:
    ks = [r.k for r in rows]
    _write_xy(out / PLOT_FILES["before"], ks, [r.before for r in rows])
    _write_xy(out / PLOT_FILES["after"], ks, [r.after for r in rows])
    _write_xy(out / PLOT_FILES["gain"], ks, [r.gain for r in rows])
    _write_xy(out / PLOT_FILES["utility"], ks, [r.utility for r in rows])
    _write_xy(out / PLOT_FILES["objective"], ks, [r.objective for r in rows])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _objective(args) -> ObjectiveConfig:
    return ObjectiveConfig(w1=args.w1, w2=args.w2, tp=args.tp, tu=args.tu, mode=args.mode)


def _load_inputs(args):
    schema = load_schema(args.schema)
    p = load_dataset(args.data, schema.primary())
    q = load_dataset(args.aux, schema.auxiliary()) if getattr(args, "aux", None) else None
    fis = parse_fis(args.fis, schema) if getattr(args, "fis", None) else None
    return schema, p, q, fis


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_anonymize(args, argv) -> int:
    schema = load_schema(args.schema)
    p = load_dataset(args.data, schema.primary())
    release = identity_release(p) if args.identity else basic_anonymization(p, args.level)
    out = _out_dir(args)
    csv_path, side = write_release(release, out / "release.csv")
    print(f"wrote {csv_path} and {side} (k={release.k}, classes={len(release.partition.classes)})")
    return EXIT_OK


def cmd_attack(args, argv) -> int:
    schema = load_schema(args.schema)
    release = load_release(args.release, schema)
    aux = load_dataset(args.aux, schema.auxiliary())
    fis = parse_fis(args.fis, schema)
    est = fuse(fis, release, aux)
    target = fis.output.name
    ident = schema.identifier
    out = _out_dir(args)
    estimates = Dataset(schema.select([target]), {ident: release.dataset.ids, target: est[:, 0]})
    write_dataset(estimates, out / "estimates.csv")
    summary = {"meta": _meta(args, argv, {"release": args.release, "aux": args.aux, "fis": args.fis,
                                          "schema": args.schema, "truth": args.truth}),
               "target": target, "records": release.m}
    print(f"wrote {out / 'estimates.csv'} ({release.m} estimates of {target!r})")
    if args.truth:
        truth = load_dataset(args.truth, schema.primary())
        if list(truth.ids) != list(release.dataset.ids):
            raise ValidationError("truth file must list the release identifiers in the same order")
        params = fit_normalization(truth, schema.normalize)
        t = column_matrix(truth, [target])
        after = dissimilarity(params.scale_matrix(t, [target]), params.scale_matrix(est, [target]), [target])
        errors = np.abs(t[:, 0] - est[:, 0])
        summary["dissimilarity_after"] = after.value
        summary["abs_errors"] = {str(i): float(e) for i, e in zip(release.dataset.ids, errors)}
        print(f"dissimilarity-after: {after.value!r}")
        for i, e in zip(release.dataset.ids, errors):
            print(f"  {i}: |error| = {float(e)!r}")
    _write_json(out / "attack.json", summary)
    return EXIT_OK


def _sweep_report(args, argv, rows, cfg: FredConfig, params, inputs, extra=None) -> dict:
    doc = {
        "meta": _meta(args, argv, inputs),
        "config": cfg.to_dict(),
        "normalization": params.to_dict(),
        "rows": [r.to_dict() for r in rows],
    }
    if extra:
        doc.update(extra)
    return doc


def cmd_sweep(args, argv) -> int:
    schema, p, q, fis = _load_inputs(args)
    if not 2 <= args.kmin <= args.kmax <= p.m:
        raise ValidationError(f"need 2 <= kmin <= kmax <= m (got kmin={args.kmin}, kmax={args.kmax}, m={p.m})")
    cfg = FredConfig(objective=_objective(args), parallel=args.parallel, baseline=args.baseline)
    levels = range(args.kmin - 2, args.kmax - 1)
    releases, rows, _ = sweep(p, q, fis, levels, cfg)
    candidates = []
    for rel, ms in zip(releases, rows):
        if ms.feasible_protection:
            candidates.append(CandidateRecord(len(candidates), rel.level, rel, ms))
    best = select_optimal(candidates, cfg.objective.tu)
    params = fit_normalization(p, schema.normalize)
    inputs = {"data": args.data, "aux": args.aux, "fis": args.fis, "schema": args.schema}
    optimum = None if best is None else {"level": best.level, **best.metrics.to_dict()}
    doc = _sweep_report(args, argv, rows, cfg, params, inputs, {"optimum": optimum})
    out = _out_dir(args)
    _write_json(out / "report.json", doc)
    _write_plots(out, rows)
    print(f"swept k={args.kmin}..{args.kmax}: wrote {out / 'report.json'} and {len(PLOT_FILES)} plot files")
    return EXIT_OK


def cmd_optimize(args, argv) -> int:
    schema, p, q, fis = _load_inputs(args)
    cap = None if args.kmax is None else args.kmax - 2
    cfg = FredConfig(objective=_objective(args), level_cap=cap, parallel=args.parallel, baseline=args.baseline)
    result = fred_anonymize(p, q, fis, cfg)
    opt = result.optimum
    if opt is not None:
        m = opt.metrics
        if not (m.after >= cfg.objective.tp and m.utility >= cfg.objective.tu):
            raise InvariantError("selected release violates a threshold")
    params = fit_normalization(p, schema.normalize)
    inputs = {"data": args.data, "aux": args.aux, "fis": args.fis, "schema": args.schema}
    res = result.to_dict()
    doc = _sweep_report(args, argv, result.all_levels, cfg, params, inputs, {
        "candidates": res["candidates"],
        "optimum": res["optimum"],
        "termination": res["termination"],
    })
    out = _out_dir(args)
    _write_json(out / "report.json", doc)
    _write_plots(out, result.all_levels)
    if opt is None:
        print(f"no feasible release: {len(result.candidates)} candidates passed protection, "
              f"none met utility (termination: {result.termination})")
    else:
        write_release(opt.release, out / "release.csv")
        print(f"optimum k={opt.metrics.k} (level {opt.level}), H={opt.metrics.objective!r}; "
              f"wrote {out / 'release.csv'}")
    return EXIT_OK


def _fixture(name: str) -> Path:
    return Path(str(resources.files("fredanon") / "fixtures" / name))


def cmd_demo(args, argv) -> int:
    schema = load_schema(_fixture("demo_schema.json"))
    p = load_dataset(_fixture("demo_private.csv"), schema.primary())
    q = load_dataset(_fixture("demo_aux.csv"), schema.auxiliary())
    fis = parse_fis(_fixture("demo_fis.json"), schema)
    release = basic_anonymization(p, 0)
    est = fuse(fis, release, q)[:, 0]
    qi = release.quasi_identifiers
    print(f"k = {release.k}; equivalence classes:")
    for members, cent in zip(release.partition.classes, release.partition.centroids):
        names = ", ".join(str(release.dataset.ids[i]) for i in members)
        print(f"  {{{names}}} -> " + ", ".join(f"{n}={v:g}" for n, v in zip(qi, cent)))
    print("Income estimates after fusing the release with web data:")
    income = p["Income"]
    for name, true, guess in zip(p.ids, income, est):
        print(f"  {name:<10} true {true:>9,.0f}   estimated {guess:>9,.0f}   |error| {abs(true - guess):>8,.0f}")
    robert = float(est[list(p.ids).index("Robert")])
    print(f"Robert's estimated income: {robert:,.0f} (worked-example figure: 95,000)")
    if args.out:
        out = _out_dir(args)
        write_release(release, out / "release.csv")
        ident = schema.identifier
        write_dataset(Dataset(schema.select(["Income"]), {ident: p.ids, "Income": est}), out / "estimates.csv")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fredanon",
        description="Microaggregation anonymization, fuzzy fusion-attack simulation and FRED level selection.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def objective_flags(sp):
        sp.add_argument("--tp", type=float, default=0.0, help="protection threshold T_p (normalized units)")
        sp.add_argument("--tu", type=float, default=0.0, help="utility threshold T_u")
        sp.add_argument("--w1", type=float, default=0.5, help="protection weight")
        sp.add_argument("--w2", type=float, default=0.5, help="utility weight")
        sp.add_argument("--mode", choices=[SCALAR, TRACE], default=SCALAR)
        sp.add_argument("--baseline", choices=[QUASI_BASELINE, RELEASE_ONLY_BASELINE], default=QUASI_BASELINE,
                        help="what the before-fusion dissimilarity compares")
        sp.add_argument("--parallel", action="store_true")

    sp = sub.add_parser("anonymize", help="k-anonymize one level")
    sp.add_argument("--data", required=True)
    sp.add_argument("--schema", required=True)
    sp.add_argument("--level", type=_nonneg_int, default=0, help="anonymization level (k = level + 2)")
    sp.add_argument("--identity", action="store_true", help="emit the unanonymized k=1 baseline instead")
    sp.add_argument("--out", required=True)
    sp.add_argument("--stamp", action="store_true")
    sp.set_defaults(func=cmd_anonymize)

    sp = sub.add_parser("attack", help="simulate the fusion attack on a release")
    sp.add_argument("--release", required=True, help="release CSV (sidecar JSON alongside)")
    sp.add_argument("--aux", required=True)
    sp.add_argument("--fis", required=True)
    sp.add_argument("--schema", required=True)
    sp.add_argument("--truth", help="original private data, to score the estimates")
    sp.add_argument("--out", required=True)
    sp.add_argument("--stamp", action="store_true")
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("sweep", help="metrics for every k in a range")
    for flag in ("--data", "--aux", "--fis", "--schema"):
        sp.add_argument(flag, required=True)
    sp.add_argument("--kmin", type=int, required=True)
    sp.add_argument("--kmax", type=int, required=True)
    objective_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--stamp", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("optimize", help="run FRED and write the selected release")
    for flag in ("--data", "--aux", "--fis", "--schema"):
        sp.add_argument(flag, required=True)
    sp.add_argument("--kmax", type=int, default=None, help="largest k to consider")
    objective_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--stamp", action="store_true")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("demo", help="anonymize and attack the four-customer example")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except ValidationError as exc:
        print(f"fredanon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"fredanon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, AssertionError) as exc:
        print(f"fredanon: internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
