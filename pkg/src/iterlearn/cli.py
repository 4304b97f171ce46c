"""Command-line entry point: ``iterlearn run|validate|version``.

Errors are reported on stderr as a single JSON line,
``{"status": ..., "exit_code": ..., "reason": ...}``.
"""

import argparse
import json
import logging
import sys

from . import __version__
from .errors import BudgetError, ConfigError
from .runner import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, load_spec, prepare, run


def _seed(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None


def _parser():
    p = argparse.ArgumentParser(prog="iterlearn", description="Run iterated-learning experiments from JSON configs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment and write CSV results plus manifest.json")
    r.add_argument("config", help="experiment JSON file")
    r.add_argument("--seed", type=_seed, default=None, help="override the config seed (unsigned 64-bit)")
    r.add_argument("--out", default=None, help="output directory")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    sub.add_parser("version", help="print the package version")
    return p


def _fail(status, code, exc):
    print(json.dumps({"status": status, "exit_code": code, "reason": str(exc)}), file=sys.stderr)
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        if args.command == "validate":
            prepare(load_spec(args.config))
            print(json.dumps({"status": "valid", "exit_code": EXIT_OK}))
            return EXIT_OK
        manifest = run(load_spec(args.config, seed=args.seed, out=args.out), out=args.out)
    except ConfigError as exc:
        return _fail("config-error", EXIT_CONFIG, exc)
    except BudgetError as exc:
        return _fail("budget-exceeded", EXIT_BUDGET, exc)
    summary = manifest.to_dict()
    line = {"status": summary["status"], "exit_code": summary["exit_code"], "outputs": summary["outputs"]}
    failed = [k for k, v in manifest.invariants.items() if not v["pass"]]
    if failed:
        line["reason"] = "invariant failure: " + ", ".join(failed)
        print(json.dumps(line), file=sys.stderr)
    else:
        print(json.dumps(line))
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
