"""Configuration-driven command line for solves, convergence/stability
sweeps and embedding studies, with CSV output.

Config files are INI-style with a single [study] section; every key can be
overridden by a command-line flag.  Identical configurations produce
byte-identical CSV files (timing is reported only when requested).
"""

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import convergence_orders
from .errors import DivergenceError, SolverError, UnsupportedDegreeError
from .problems import BUILTIN_EXAMPLES
from .spaces import SUPPORTED_DEGREES
from .timestepper import RunConfig, run

MODES = ("solve", "convergence", "stability", "embedding")

CSV_HEADER = (
    "M,tau,r,err_u_L2,err_sigma_L2,order_u,order_sigma,dg_norm,"
    "ratio_p2,ratio_p3,ratio_p4,ratio_p6,wall_time_s"
)

THREADS_ENV = "RTMIXED_THREADS"


class ConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    """Validated study description driving the CLI."""

    mode: str
    example: str
    dim: int
    r: int
    M_list: list
    tau_rule: str = "coupled"
    tau: float = None
    T: float = 1.0
    output_path: str = None
    vtk_stride: int = None
    p_list: tuple = (2, 3, 4, 6)
    threads: int = 1
    report_timing: bool = False


def _parse_int_list(text):
    return [int(tok) for tok in text.replace(",", " ").split()]


def load_config(path):
    """Parse an INI config file into an (unvalidated) StudyConfig."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "study" not in parser:
        raise ConfigError("config file must contain a [study] section")
    sec = parser["study"]
    try:
        cfg = StudyConfig(
            mode=sec.get("mode", "solve"),
            example=sec.get("example", ""),
            dim=sec.getint("dim", 0),
            r=sec.getint("r", 0),
            M_list=_parse_int_list(sec.get("m_list", sec.get("M_list", ""))),
            tau_rule=sec.get("tau_rule", "coupled"),
            tau=sec.getfloat("tau", None),
            T=sec.getfloat("t", sec.getfloat("T", 1.0)),
            output_path=sec.get("output", None),
            vtk_stride=sec.getint("vtk_stride", 0) or None,
            p_list=tuple(_parse_int_list(sec.get("p_list", "2 3 4 6"))),
            threads=sec.getint("threads", 0),
            report_timing=sec.getboolean("report_timing", False),
        )
    except ValueError as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    return cfg


def validate_config(cfg):
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.example == "custom":
        raise ConfigError(
            "example=custom requires user callbacks and is available through the "
            "Python API (rtmixed.timestepper.run), not the CLI"
        )
    if cfg.example not in BUILTIN_EXAMPLES:
        raise ConfigError(
            f"unknown example {cfg.example!r}; built-ins: {sorted(BUILTIN_EXAMPLES)}"
        )
    example_dim = BUILTIN_EXAMPLES[cfg.example]()[2]
    if cfg.dim == 0:
        cfg.dim = example_dim
    elif cfg.dim != example_dim:
        raise ConfigError(f"example {cfg.example} is {example_dim}D but dim={cfg.dim}")
    if (cfg.dim, cfg.r) not in SUPPORTED_DEGREES:
        supported = ", ".join(f"({d}D, r={rr})" for d, rr in SUPPORTED_DEGREES)
        raise ConfigError(f"unsupported degree r={cfg.r} in {cfg.dim}D; available: {supported}")
    if not cfg.M_list:
        raise ConfigError("M_list must contain at least one resolution")
    if any(m < 1 for m in cfg.M_list):
        raise ConfigError("all M values must be positive")
    if any(b <= a for a, b in zip(cfg.M_list, cfg.M_list[1:])):
        raise ConfigError("M_list must be strictly increasing")
    if cfg.mode == "convergence":
        if len(cfg.M_list) < 2 or any(b != 2 * a for a, b in zip(cfg.M_list, cfg.M_list[1:])):
            raise ConfigError("convergence mode needs an M_list of consecutive doublings")
    if cfg.tau_rule not in ("coupled", "fixed"):
        raise ConfigError(f"tau_rule must be 'coupled' or 'fixed', got {cfg.tau_rule!r}")
    if cfg.tau_rule == "fixed" and not cfg.tau:
        raise ConfigError("tau_rule=fixed requires a tau value")
    if cfg.mode == "stability" and cfg.tau_rule != "fixed":
        raise ConfigError("stability mode sweeps the mesh under a fixed tau (tau_rule=fixed)")
    if not cfg.T > 0:
        raise ConfigError(f"T must be positive, got {cfg.T}")
    if any(p not in (2, 3, 4, 6) for p in cfg.p_list):
        raise ConfigError(f"p_list entries must be in (2, 3, 4, 6), got {cfg.p_list}")
    if cfg.threads == 0:
        cfg.threads = int(os.environ.get(THREADS_ENV, "1"))
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    if cfg.output_path is None:
        cfg.output_path = f"{cfg.mode}.csv"
    return cfg


def make_run_config(cfg, M):
    exact, fspec, _ = BUILTIN_EXAMPLES[cfg.example]()
    tau = (1.0 / M) ** (cfg.r + 1) if cfg.tau_rule == "coupled" else cfg.tau
    return RunConfig(
        dim=cfg.dim,
        M=M,
        r=cfg.r,
        tau=tau,
        T=cfg.T,
        nonlinearity=fspec,
        exact=exact,
        label=cfg.example,
        p_list=cfg.p_list,
        vtk_stride=cfg.vtk_stride,
        vtk_dir=os.path.dirname(cfg.output_path) or ".",
    )


def _run_one(run_config):
    return run(run_config)[1]


def execute_study(cfg):
    """Run every resolution of the study; returns the record list."""
    M_list = cfg.M_list if cfg.mode != "solve" else cfg.M_list[:1]
    run_configs = [make_run_config(cfg, M) for M in M_list]
    if cfg.threads > 1 and len(run_configs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(_run_one, run_configs))
    else:
        records = [_run_one(rc) for rc in run_configs]
    return records


def _fmt(value):
    return "" if value is None else f"{value:.6e}"


def write_csv(cfg, records, path=None):
    """Write study records under the fixed CSV schema."""
    path = path or cfg.output_path
    lines = [CSV_HEADER]
    prev = None
    for rec in records:
        order_u = order_s = None
        if prev is not None and rec.M == 2 * prev.M:
            if rec.err_u_L2 and prev.err_u_L2:
                order_u = np.log2(prev.err_u_L2 / rec.err_u_L2)
            if rec.err_sigma_L2 and prev.err_sigma_L2:
                order_s = np.log2(prev.err_sigma_L2 / rec.err_sigma_L2)
        wall = rec.wall_time if cfg.report_timing else 0.0
        cells = [
            str(rec.M),
            f"{rec.tau:.6e}",
            str(rec.r),
            _fmt(rec.err_u_L2),
            _fmt(rec.err_sigma_L2),
            _fmt(order_u),
            _fmt(order_s),
            _fmt(rec.dg_norm),
            _fmt(rec.embed_ratio.get(2)),
            _fmt(rec.embed_ratio.get(3)),
            _fmt(rec.embed_ratio.get(4)),
            _fmt(rec.embed_ratio.get(6)),
            f"{wall:.6e}",
        ]
        lines.append(",".join(cells))
        prev = rec
    out_dir = os.path.dirname(path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def build_arg_parser():
    parser = argparse.ArgumentParser(
        prog="rtmixed",
        description="Mixed RT finite element studies for nonlinear parabolic problems",
    )
    parser.add_argument("--config", required=True, help="INI config file with a [study] section")
    parser.add_argument("--mode", choices=MODES, help="override the config mode")
    parser.add_argument("--out", help="override the CSV output path")
    parser.add_argument("--threads", type=int, help="parallel runs across resolutions")
    parser.add_argument("--vtk-stride", type=int, dest="vtk_stride", help="snapshot stride")
    return parser


def run_cli(argv):
    """Parse arguments, run the study, write CSV; returns the exit code."""
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        if args.mode:
            cfg.mode = args.mode
        if args.out:
            cfg.output_path = args.out
        if args.threads is not None:
            cfg.threads = args.threads
        if args.vtk_stride is not None:
            cfg.vtk_stride = args.vtk_stride or None
        validate_config(cfg)
    except (ConfigError, UnsupportedDegreeError, ValueError) as exc:
        print(f"rtmixed: config error: {exc}", file=sys.stderr)
        return 2
    try:
        records = execute_study(cfg)
        path = write_csv(cfg, records)
    except (DivergenceError, SolverError) as exc:
        print(f"rtmixed: numerical failure: {exc}", file=sys.stderr)
        return 3
    if cfg.mode == "convergence":
        report = convergence_orders(records)
        for col, data in report.orders.items():
            print(f"{col}: finest order {data['finest']:.4f}, lsq {data['lsq']:.4f}")
    print(f"wrote {path}")
    return 0


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
