"""Command-line front end.

    jctriangle <subcommand> [--config FILE] [--preset NAME] [--set key=value ...]
               [--out DIR] [--threads N] [--json]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors
are reported on stderr as a one-line JSON record.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import spectral
from ..errors import JCTriangleError
from ..ep import CLASSIFY_TOL
from .commands import COMMANDS
from .config import PRESETS, SUBCOMMANDS, ConfigError, load_config
from .table import base_meta, write_tables

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

__all__ = ["main", "run", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser():
    p = _Parser(prog="jctriangle", description="Spectra, exceptional points and dynamics of the JC triangle.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="INI file with [params], [sweep], ... sections")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="[SECTION.]KEY=VALUE")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json", action="store_true", help="also write a JSON mirror of every table")
    return p


def run(argv=None):
    """Parse arguments, run, write tables.  Returns the written paths."""
    args = _parser().parse_args(argv)
    text = None
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    cfg = load_config(
        args.subcommand,
        config_text=text,
        preset=args.preset,
        overrides=args.overrides,
        threads=args.threads,
        origin=str(args.config),
    )
    tables = COMMANDS[args.subcommand](cfg)
    tolerances = {
        "classify": cfg.tolerance("classify", CLASSIFY_TOL),
        "defect": cfg.tolerance("defect", spectral.DEFECT_TOL),
    }
    meta = base_meta(cfg.digest(), args.subcommand, tolerances)
    return write_tables(tables, args.out, meta, as_json=args.json)


def _report(kind, exc, code):
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        for path in run(argv):
            print(path)
    except ConfigError as exc:
        return _report("config", exc, EXIT_CONFIG)
    except (JCTriangleError, ArithmeticError, ValueError) as exc:
        return _report("numeric", exc, EXIT_NUMERIC)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
