"""Command-line entry point: ``bslab <experiment> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from bslab.config import EXPERIMENTS, ConfigError, build_config, load_config_file
from bslab.experiments import CSV_COLUMNS, ExperimentResult, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_AUDIT = 0, 2, 3, 4


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("config_hash",) + CSV_COLUMNS)
        h = result.config.config_hash
        for r in result.rows:
            w.writerow([h] + [_cell(getattr(r, c)) for c in CSV_COLUMNS])


def result_document(result: ExperimentResult) -> dict:
    return _clean({
        "experiment": result.experiment,
        "provenance": result.provenance,
        "config": json.loads(result.config.canonical_json()),
        "summary": result.summary,
        "fits": result.fits,
        "nonconverged_fits": result.nonconverged,
        "unexpected_logical_faults": result.unexpected_logical,
    })


def write_outputs(result: ExperimentResult, out_dir: Path, plot: bool = True) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = [out_dir / "result.csv", out_dir / "result.json"]
    write_csv(result, files[0])
    files[1].write_text(json.dumps(result_document(result), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if result.audits:
        doc = {"provenance": result.provenance, "audits": [a.to_dict() for a in result.audits]}
        files.append(out_dir / "audit.json")
        files[-1].write_text(json.dumps(_clean(doc), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if plot:
        from bslab.plotting import render
        files += render(result, out_dir)
    return files


def exit_code(result: ExperimentResult) -> int:
    if result.unexpected_logical:
        return EXIT_AUDIT
    if result.nonconverged:
        return EXIT_FIT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bslab", description="Seeded Monte Carlo experiments on the Bacon-Shor code.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="JSON config file (defaults are used when omitted)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--shots", type=int, help="override the shot count per condition")
    p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.experiment, raw, seed=args.seed, shots=args.shots,
                           plot=False if args.no_plot else None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_experiment(cfg)
    files = write_outputs(result, args.out, plot=cfg.plot)
    for a in result.audits:
        print(a.table())
    if result.experiment != "ft-audit":
        print(json.dumps(_clean(result.summary), indent=1, sort_keys=True))
    for name in result.nonconverged:
        print(f"warning: fit {name} did not converge", file=sys.stderr)
    for name in result.unexpected_logical:
        print(f"error: {name} has single-fault logical failures but is expected to be FT", file=sys.stderr)
    print(f"wrote {len(files)} files to {args.out} (config {cfg.config_hash[:12]})")
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
