"""Command line: ``lab <scenario> --config <file.json> --out <dir> [--seed N] [--threads N]``.

Exit codes: 0 success; 2 usage or configuration error (nothing written);
3 solver, mesh or convergence failure (partial outputs and the record are
written); 4 I/O error; 5 resource budget exceeded.
"""
import argparse
import sys
from pathlib import Path

from ..errors import BudgetError, ConfigError, DomainError, LabError
from .config import SCENARIOS, load_config
from .runner import Output, RunRecord, dumps
from .scenarios import SCENARIOS as RUNNERS

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO, EXIT_BUDGET = 0, 2, 3, 4, 5


def build_parser():
    ap = argparse.ArgumentParser(prog="lab", description="Spectral experiments on hyperbolic surfaces.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, type=Path, help="JSON config file")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for samples")
    return ap


def _err(msg):
    print(f"lab: error: {msg}", file=sys.stderr)


def run(scenario, config, out_dir, seed=None, threads=1):
    """Run one scenario; returns (exit code, RunRecord or None)."""
    try:
        cfg = load_config(config, scenario)
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg.seed = seed
        if threads < 1:
            raise ConfigError("threads must be >= 1")
    except (ConfigError, DomainError) as e:
        _err(e)
        return EXIT_USAGE, None

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        _err(f"cannot create output directory {out_dir}: {e.strerror or e}")
        return EXIT_IO, None
    rec = RunRecord(cfg.scenario, cfg.hash(), cfg.seed)
    out = Output(out_dir)
    code = EXIT_OK
    try:
        out.json("config.json", {"schema_version": 1, "scenario": cfg.scenario,
                                 "seed": cfg.seed, "params": cfg.params})
        with rec.stage("total"):
            RUNNERS[cfg.scenario](cfg, out, rec, threads)
        rec.status = "ok"
    except BudgetError as e:
        rec.status, rec.error, code = "budget exceeded", str(e), EXIT_BUDGET
    except (ConfigError, DomainError) as e:
        rec.status, rec.error, code = "invalid input", str(e), EXIT_USAGE
    except LabError as e:
        rec.status, rec.error, code = "solver failure", f"{type(e).__name__}: {e}", EXIT_SOLVER
    except OSError as e:
        rec.status, rec.error, code = "i/o error", str(e), EXIT_IO
    try:
        rec.files = sorted(out.flush() + ["record.json"])
        (out_dir / "record.json").write_text(dumps(rec.to_dict()))
    except OSError as e:
        _err(f"cannot write results: {e}")
        return EXIT_IO, rec
    if code:
        _err(f"{rec.status}: {rec.error}")
    return code, rec


def main(argv=None):
    args = build_parser().parse_args(argv)
    code, _ = run(args.scenario, args.config, args.out, args.seed, args.threads)
    return code


if __name__ == "__main__":
    sys.exit(main())
