"""
Điểm vào dòng lệnh của spinline:
- Đọc cấu hình YAML, dựng logging (console + file xoay vòng), gộp cờ dòng lệnh vào mục của lệnh.
- Chạy một lệnh: ed-thermo, mf-phase, resonance, transmit, synthesize, normalize-fit.

Cách chạy:
    python -m spinline.run_spinline mf-phase --config spinline/config/app.yaml --out out --jobs 4
    python -m spinline.run_spinline --config spinline/config/app.yaml --jobs 4 resonance
    python -m spinline.run_spinline synthesize --seed 7 --noise 0.0
    python -m spinline.run_spinline normalize-fit --dB 0.05 --window-MHz 200

Mã thoát: 0 khi mọi ô thành công, 1 khi có ô lỗi (liệt kê trên stderr), 2 khi cấu hình sai.
"""
from __future__ import annotations

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .cli.commands import COMMAND_DEFAULTS, COMMANDS, RunConfig
from .errors import SpinlineError, ValidationError
from .runtime.pool import resolve_jobs

DEFAULT_CONFIG = Path(__file__).resolve().parent / "config" / "app.yaml"


def setup_logging(log_file: str = "spinline.log", console_level: int = logging.INFO,
                  file_level: int = logging.DEBUG, max_mb: float = 2, backups: int = 3) -> logging.Logger:
    """Configure logging to both console and rotating file."""
    logger = logging.getLogger("spinline")
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    # Clear existing handlers to avoid duplicates on repeated runs
    for h in list(logger.handlers):
        logger.removeHandler(h)
        h.close()

    fmt = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    ch = logging.StreamHandler()
    ch.setLevel(console_level)
    ch.setFormatter(fmt)
    logger.addHandler(ch)

    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    fh = RotatingFileHandler(log_file, maxBytes=int(max_mb * 1024 * 1024), backupCount=int(backups),
                             encoding="utf-8")
    fh.setLevel(file_level)
    fh.setFormatter(fmt)
    logger.addHandler(fh)
    return logger


def _yaml_value(text: str) -> Any:
    """Flag values use YAML syntax, so lists and grid mappings work on the command line."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise argparse.ArgumentTypeError(f"not a YAML value: {text!r}") from exc


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    """--config/--out/--jobs/--seed; on subcommands they only override what came before the name."""
    defaults = {"config": str(DEFAULT_CONFIG), "out": None, "jobs": None, "seed": None}
    if suppress:
        defaults = dict.fromkeys(defaults, argparse.SUPPRESS)
    parser.add_argument("--config", type=str, default=defaults["config"], help="Path to app config YAML")
    parser.add_argument("--out", type=str, default=defaults["out"], help="Output directory for CSV tables")
    parser.add_argument("--jobs", type=int, default=defaults["jobs"], help="Worker threads (fallback: SPINLINE_JOBS)")
    parser.add_argument("--seed", type=int, default=defaults["seed"], help="Random seed for stochastic outputs")


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)

    parser = argparse.ArgumentParser(description="Spin-chain waveguide QED simulations and fits")
    _add_global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        section = name.replace("-", "_")
        p = sub.add_parser(name, parents=[common], allow_abbrev=False, help=f"run {name}")
        for key in COMMAND_DEFAULTS[section]:
            p.add_argument(f"--{key.replace('_', '-')}", dest=f"opt_{key}", type=_yaml_value, default=None,
                           metavar="VALUE", help=f"{section}.{key}")
    return parser.parse_args(argv)


def _load_config(path: str) -> Dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file {p} not found")
    with open(p, "r", encoding="utf-8") as f:
        cfg = yaml.safe_load(f) or {}
    if not isinstance(cfg, dict):
        raise ValidationError(f"config file {p} must hold a mapping")
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    try:
        cfg = _load_config(args.config)
    except (SpinlineError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    runtime = cfg.get("runtime", {}) or {}
    out = Path(args.out or runtime.get("out", "out"))
    log_cfg = cfg.get("logging", {}) or {}
    log_path = Path(log_cfg.get("file_path", "spinline.log"))
    app_logger = setup_logging(
        str(log_path if log_path.is_absolute() else out / log_path),
        console_level=getattr(logging, str(log_cfg.get("console_level", "INFO")).upper(), logging.INFO),
        file_level=getattr(logging, str(log_cfg.get("file_level", "DEBUG")).upper(), logging.DEBUG),
        max_mb=float(log_cfg.get("file_max_mb", 2)),
        backups=int(log_cfg.get("file_backups", 3)),
    )

    section = args.command.replace("-", "_")
    overrides = {section: {key: getattr(args, f"opt_{key}") for key in COMMAND_DEFAULTS[section]}}
    try:
        run = RunConfig.build(cfg, overrides, out=str(out),
                              jobs=resolve_jobs(args.jobs, int(runtime.get("jobs", 1))), seed=args.seed)
        app_logger.info("running %s (jobs=%d, seed=%s, out=%s)", args.command, run.jobs, run.seed, run.out)
        outcome = COMMANDS[args.command](run)
    except SpinlineError as exc:
        app_logger.error("%s aborted: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for path in outcome.paths:
        app_logger.info("table %s", path)
    if outcome.failures:
        print(f"{len(outcome.failures)} failing cell(s):", file=sys.stderr)
        for msg in outcome.failures:
            print(f"  {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
