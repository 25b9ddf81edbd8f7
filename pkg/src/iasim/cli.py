"""Command-line entry point: ``simulate --config <file> [overrides...]``."""

import argparse
import sys

from .harness import ConfigError, parse_config, parse_config_text, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Seeded Monte Carlo experiments for limited-feedback "
                    "interference alignment; flags override config-file values.",
    )
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--experiment", help="convergence | se-vs-snr | scaling-vs-B | "
                                        "lemma-battery | bound-check")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--snr-db", dest="snr_db",
                   help="comma-separated SNR list in dB, e.g. 0,10,20")
    p.add_argument("--bits", help="comma-separated feedback bits; `inf` bypasses "
                                  "the quantizer")
    p.add_argument("--iters", help="iteration count (or comma list for se-vs-snr)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--threads", type=int, help="worker processes (SIM_THREADS fallback)")
    return p


def _overrides(args):
    from .harness import _parse_scalar  # same parsing rules as the config file

    out = {}
    for key in ("experiment", "seed", "trials", "out", "threads"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    for key in ("snr_db", "bits", "iters"):
        raw = getattr(args, key)
        if raw is not None:
            out[key] = _parse_scalar(key, raw, 0)
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = _overrides(args)
        if args.config:
            spec = parse_config(args.config, overrides)
        else:
            spec = parse_config_text("", overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_experiment(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{spec.experiment}: {len(rows)} rows -> {spec.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
