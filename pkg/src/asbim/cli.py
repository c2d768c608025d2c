"""Command-line interface: ``asbim synth | gradcheck | train | cv | report``.

Settings are layered: command-line flags override values from ``--config``
(a ``key = value`` file), which override the built-in defaults. Each command
writes into a run directory ``<out>/<timestamp>-<command>-seed<seed>`` (or
``--run-dir``) together with ``config.txt``, the effective settings.

Exit codes: 0 success, 1 I/O or unexpected error, 2 configuration,
3 ingestion, 4 numerical, 5 acceptance check failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import __version__, kernels, seeding
from .configfile import coerce_fields, dump_config, read_config
from .errors import AcceptanceFailure, AsbimError, ConfigurationError

EXIT_OK, EXIT_IO = 0, 1

CV_KEYS = {"k": 5, "m_imputations": 10, "jobs": 1, "models": "asbim,t1_carry,two_stage"}


def _run_dir(args, command: str, seed: int) -> Path:
    if args.run_dir:
        path = Path(args.run_dir)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        path = Path(args.out) / f"{stamp}-{command}-seed{seed}"
        n = 1
        while path.exists():
            n += 1
            path = Path(args.out) / f"{stamp}-{command}-seed{seed}-{n}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _file_values(args) -> dict[str, str]:
    return read_config(args.config) if getattr(args, "config", None) else {}


def _flag_values(args, mapping: dict[str, str]) -> dict:
    out = {}
    for flag, key in mapping.items():
        v = getattr(args, flag, None)
        if v is not None:
            out[key] = v
    return out


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value settings file (flags take precedence)")
    p.add_argument("--out", default="runs", help="parent directory for run directories (default: runs)")
    p.add_argument("--run-dir", help="write into this directory instead of a timestamped one")


def _add_data(p: argparse.ArgumentParser):
    p.add_argument("data", nargs="?", help="directory holding sequences.csv and dyads.csv")
    p.add_argument("--sequences", help="per-interval CSV (dyad_id,t,maut,cdef)")
    p.add_argument("--dyads", help="per-dyad CSV (dyad_id,gender,ext_t1,ext_t2,inhibitory_control)")


TRAIN_FLAGS = {"seed": "seed", "epochs": "epochs", "lr": "learning_rate", "l2": "l2_coef",
               "q": "q", "h": "h", "max_len": "max_len", "variant": "variant"}


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--l2", type=float, help="L2 coefficient on weights")
    p.add_argument("--q", type=int, help="embedding size")
    p.add_argument("--h", type=int, help="attention projection size")
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--variant", help="base or plus_d")
    p.add_argument("--backend", choices=["python", "cython"], help="kernel backend (default: fastest available)")


def _load(args):
    from .data import load_dataset

    if args.sequences:
        return load_dataset(args.sequences, args.dyads), [args.sequences, args.dyads]
    if not args.data:
        raise ConfigurationError("no dataset given: pass a directory or --sequences/--dyads")
    return load_dataset(args.data), [args.data]


def _train_config(args, file_values: dict):
    from .train import TrainConfig

    values = coerce_fields(TrainConfig, file_values, ignore_unknown=True)
    values.update(_flag_values(args, TRAIN_FLAGS))
    return TrainConfig(**values)


def _write_config(run_dir: Path, values: dict) -> Path:
    path = run_dir / "config.txt"
    path.write_text(f"# asbim {__version__} effective configuration\n" + dump_config(values), encoding="utf-8")
    return path


# --------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    from .data import SyntheticConfig, generate_synthetic, strong_signal_config, write_dataset

    base = strong_signal_config() if args.preset == "strong" else SyntheticConfig()
    values = dataclasses.asdict(base)
    values.update(coerce_fields(SyntheticConfig, _file_values(args)))
    values.update(_flag_values(args, {"seed": "rng_seed", "n_dyads": "n_dyads", "seq_len": "seq_len"}))
    config = SyntheticConfig(**values)
    run_dir = _run_dir(args, "synth", config.rng_seed)
    seq, dy = write_dataset(generate_synthetic(config), run_dir)
    _write_config(run_dir, dataclasses.asdict(config))
    print(f"wrote {config.n_dyads} dyads to {seq} and {dy}")
    print(f"run directory: {run_dir}")
    return EXIT_OK


# ----------------------------------------------------------------- gradcheck

def cmd_gradcheck(args) -> int:
    from .diagnostics import GRADCHECK_TOL, run_gradcheck

    seeds = range(args.seed, args.seed + args.seeds)
    worst_by_group: dict[str, float] = {}
    worst = (0.0, None, None)
    t0 = time.perf_counter()
    for s in seeds:
        res = run_gradcheck(s, q=args.q, h=args.h, variant=args.variant, backend=args.backend,
                            corrupt=args.corrupt_gradient)
        for g, e in res.by_group.items():
            worst_by_group[g] = max(worst_by_group.get(g, 0.0), e)
        if res.max_relative_error >= worst[0]:
            worst = (res.max_relative_error, s, res.worst)
    elapsed = time.perf_counter() - t0
    backend = args.backend or kernels.BACKEND
    print(f"gradcheck backend={backend} variant={args.variant} q={args.q} h={args.h} "
          f"seeds={args.seed}..{args.seed + args.seeds - 1}")
    for g, e in worst_by_group.items():
        print(f"  {g:<28s} {e:.3e}  {'ok' if e < GRADCHECK_TOL else 'FAIL'}")
    ok = worst[0] < GRADCHECK_TOL
    where = f" at {worst[2][0]}{list(int(i) for i in worst[2][1])} seed {worst[1]}" if worst[2] else ""
    print(f"max relative error {worst[0]:.3e}{where} (threshold {GRADCHECK_TOL:g}) "
          f"-> {'PASS' if ok else 'FAIL'} in {elapsed:.1f}s")
    if not ok:
        raise AcceptanceFailure("gradient check failed")
    return EXIT_OK


# --------------------------------------------------------------------- train

def cmd_train(args) -> int:
    from .data import impute_outcomes, preprocess
    from .model.params import save_checkpoint
    from .train import train

    file_values = _file_values(args)
    config = _train_config(args, file_values)
    raw, sources = _load(args)
    dataset = preprocess(raw, config.max_len)
    dataset = impute_outcomes(dataset, m=1, rng=seeding.stream(config.seed, seeding.IMPUTE))[0]
    run_dir = _run_dir(args, "train", config.seed)
    params, history = train(dataset, config, backend=args.backend)
    echo = {**config.to_dict(), "data": sources, "backend": args.backend or kernels.BACKEND}
    ckpt = save_checkpoint(params, run_dir / "checkpoint.json", extra={"config": echo})
    hist = history.write_csv(run_dir / "history.csv", seed=config.seed)
    _write_config(run_dir, echo)
    print(f"trained {config.variant.value} on {len(dataset)} dyads for {config.epochs} epochs")
    print(f"loss {history.losses[0]:.6g} -> {history.final_loss:.6g}, gamma {history.final_gamma:.4f}")
    print(f"checkpoint: {ckpt}\nhistory: {hist}")
    return EXIT_OK


# ------------------------------------------------------------------------ cv

def _cv_settings(args, file_values: dict) -> dict:
    settings = dict(CV_KEYS)
    for key in CV_KEYS:
        if key in file_values:
            settings[key] = file_values[key] if key == "models" else int(file_values[key])
    for flag, key in (("k", "k"), ("m", "m_imputations"), ("jobs", "jobs"), ("models", "models")):
        v = getattr(args, flag, None)
        if v is not None:
            settings[key] = v
    models = [m.strip() for m in str(settings["models"]).split(",") if m.strip()]
    if args.plus_d:
        models += ["asbim_d", "two_stage_d"]
    if args.baselines_only:
        models = [m for m in models if not m.startswith("asbim")] or ["t1_carry", "two_stage"]
    settings["models"] = list(dict.fromkeys(models))
    return settings


def cmd_cv(args) -> int:
    from .evaluate import cross_validate, write_report

    file_values = _file_values(args)
    config = _train_config(args, file_values)
    settings = _cv_settings(args, file_values)
    raw, sources = _load(args)
    run_dir = _run_dir(args, "cv", config.seed)
    report = cross_validate(raw, config, m_imputations=settings["m_imputations"], k=settings["k"],
                            seed=config.seed, models=settings["models"], jobs=settings["jobs"],
                            backend=args.backend)
    report.config["data"] = sources
    paths = write_report(report, run_dir)
    _write_config(run_dir, {**config.to_dict(), **settings, "data": sources,
                            "backend": args.backend or kernels.BACKEND})
    print(f"{'model':<12s} {'mean MSE':>9s} {'min':>8s} {'max':>8s} {'mean r':>8s} {'gamma':>7s}")
    for m in report.models:
        agg = report.aggregate(m)
        fmt = lambda v, w=8: f"{v:{w}.4f}" if v is not None else " " * (w - 2) + "NA"
        print(f"{m:<12s} {fmt(agg['mse']['mean'], 9)} {fmt(agg['mse']['min'])} {fmt(agg['mse']['max'])} "
              f"{fmt(agg['r']['mean'])} {fmt(agg['gamma']['mean'], 7)}")
    print(f"report: {paths['report.json']}")
    return EXIT_OK


# -------------------------------------------------------------------- report

def cmd_report(args) -> int:
    from .data import compare_to_reference, descriptives

    raw, sources = _load(args)
    desc = descriptives(raw)
    seed = 0
    run_dir = _run_dir(args, "report", seed)
    doc = {"config": {"data": sources, "seed": seed}, **desc.to_dict()}
    print(f"{'variable':<20s} {'n':>4s} {'mean':>7s} {'sd':>7s} {'min':>7s} {'max':>7s}")
    for name, s in desc.variables.items():
        f = lambda v: f"{v:7.3f}" if v is not None else "     NA"
        print(f"{name:<20s} {s.n:4d} {f(s.mean)} {f(s.sd)} {f(s.min)} {f(s.max)}")
    failed = False
    if args.check_reference:
        rows = compare_to_reference(desc, tol=args.tol)
        doc["reference_check"] = rows
        for r in rows:
            obs = "NA" if r["observed"] is None else f"{r['observed']:.3f}"
            print(f"check {r['variable']} {r['stat']}: {obs} vs {r['reference']:.2f} "
                  f"(tol {args.tol}) {'ok' if r['ok'] else 'FAIL'}")
        failed = not all(r["ok"] for r in rows)
    (run_dir / "descriptives.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(f"descriptives: {run_dir / 'descriptives.json'}")
    if failed:
        raise AcceptanceFailure("descriptives differ from the reference values")
    return EXIT_OK


# ---------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asbim", description=__doc__.split("\n\n")[0],
        epilog="Precedence: command-line flags > --config file > defaults.")
    parser.add_argument("--version", action="version", version=f"asbim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--seed", type=int, help="generator seed (rng_seed)")
    p.add_argument("--n-dyads", dest="n_dyads", type=int)
    p.add_argument("--seq-len", dest="seq_len", type=int)
    p.add_argument("--preset", choices=["default", "strong"], default="default",
                   help="starting values before --config and flags (strong: outcome driven by the lag)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradients")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--q", type=int, default=8)
    p.add_argument("--h", type=int, default=8)
    p.add_argument("--variant", default="plus_d")
    p.add_argument("--backend", choices=["python", "cython"])
    p.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train on a full dataset (outcomes imputed once)")
    _add_common(p)
    _add_data(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="cross-validate over multiply imputed datasets")
    _add_common(p)
    _add_data(p)
    _add_train_flags(p)
    p.add_argument("--k", type=int, help="folds (default 5)")
    p.add_argument("--m", type=int, help="imputed datasets (default 10)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--models", help="comma list from asbim,asbim_d,t1_carry,two_stage,two_stage_d")
    p.add_argument("--plus-d", action="store_true", help="also run the inhibitory-control variants")
    p.add_argument("--baselines-only", action="store_true", help="skip the neural models")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("report", help="between-person descriptive statistics")
    _add_common(p)
    _add_data(p)
    p.add_argument("--check-reference", action="store_true",
                   help="compare means/SDs with the published sample values; exit 5 on mismatch")
    p.add_argument("--tol", type=float, default=0.01)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AsbimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
