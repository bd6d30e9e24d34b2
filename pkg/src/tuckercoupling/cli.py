"""Command-line entry point.

Precedence of settings: built-in preset < ``--config`` JSON < command-line
flags.  The worker count falls back to ``$TUCKERCOUPLING_WORKERS``.

Exit codes: 0 success, 2 config or input error, 3 capacity error,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import experiments as ex
from .errors import CapacityError, ContractViolation, FormatError, SceneError, SingularityError

log = logging.getLogger("tuckercoupling")

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_NUMERIC = 0, 2, 3, 4

COMMANDS = {
    "distance-sweep": "distance",
    "frequency-sweep": "frequency",
    "mesh-sweep": "mesh",
    "tolerance-sweep": "tolerance",
    "compress": "compress",
    "matvec-bench": "matvec-bench",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="tuckercoupling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON document with ExperimentConfig keys")
        p.add_argument("--out", help="output path (CSV for sweeps, container for compress, JSON for bench)")
        p.add_argument("--workers", type=int)
        p.add_argument("--mem-cap-bytes", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--eps", type=float)
        if name == "compress":
            p.add_argument("--method", choices=["tucker", "aca"])
        if name == "matvec-bench":
            p.add_argument("input", help="CTC1 or CTA1 file")
            p.add_argument("--save-products", help="write Y and Psi to this .npz file")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args):
    kind = COMMANDS[args.command]
    file_values = ex.load_config_file(args.config) if args.config else {}
    overrides = {
        "out": args.out, "workers": args.workers, "mem_cap_bytes": args.mem_cap_bytes,
        "seed": args.seed, "eps": args.eps,
        "method": getattr(args, "method", None), "input": getattr(args, "input", None),
    }
    if args.workers is None and "workers" not in file_values:
        overrides["workers"] = ex.default_workers()
    return ex.make_config(kind, file_values, overrides)


def _meta_path(out):
    return out + ".json"


def run(args):
    cfg = _config(args)
    t0 = time.perf_counter()
    if cfg.kind in ex.SWEEPS:
        rows = ex.SWEEPS[cfg.kind](cfg)
        extra = {"rows": len(rows)}
        if cfg.kind == "frequency" and len(rows) >= 2:
            extra["memory_linear_fit_r2"] = ex.linear_fit_r2(
                [r["f_mhz"] for r in rows], [r["compressed_bytes"] for r in rows])
        if cfg.out:
            ex.write_csv(rows, cfg.out, cfg.kind)
            ex.write_json(ex.metadata(cfg, time.perf_counter() - t0, extra), _meta_path(cfg.out))
        else:
            ex.write_csv(rows, "/dev/stdout", cfg.kind)
    elif cfg.kind == "compress":
        _, summary = ex.run_compress(cfg)
        meta = ex.metadata(cfg, time.perf_counter() - t0, {"summary": summary})
        if cfg.out:
            ex.write_json(meta, _meta_path(cfg.out))
        print(summary)
    else:
        products, report = ex.run_matvec_bench(cfg)
        if args.save_products:
            np.savez(args.save_products, **products)
        meta = ex.metadata(cfg, time.perf_counter() - t0, {"report": report})
        if cfg.out:
            ex.write_json(meta, cfg.out)
        print(report)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except CapacityError as exc:
        log.error("%s", exc)
        return EXIT_CAPACITY
    except (SingularityError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (ContractViolation, SceneError, FormatError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
