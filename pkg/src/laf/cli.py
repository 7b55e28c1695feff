"""Command-line runner: ``laf run | list | rho-table | smooth-grid | density``.

Settings come from (lowest to highest priority) a key=value config file,
LAF_* environment variables, and command-line flags.

Exit status: 0 ok (also when corrupt cache files were recovered), 1 if an
embedded check failed, 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import density, dickman, experiments, smooth
from .segcache import SegmentCache
from .sieve import DEFAULT_SEGMENT_SIZE, GLOBAL_LIMIT

log = logging.getLogger("laf")

KEYS = ("experiments", "x_max", "x_samples", "segment_size", "cache_dir", "threads", "out")
DEFAULTS = {
    "experiments": "all",
    "x_max": str(10**7),
    "x_samples": "",
    "segment_size": str(DEFAULT_SEGMENT_SIZE),
    "cache_dir": "",
    "threads": "1",
    "out": "results",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    x_max: int
    x_samples: list[int]
    segment_size: int
    cache_dir: Path | None
    threads: int
    experiment_ids: list[str]
    output_dir: Path


def parse_int(s: str, what: str) -> int:
    """Accepts 1000000, 1e6, 10**6."""
    s = str(s).strip().replace("_", "")
    try:
        if "**" in s:
            b, e = s.split("**")
            return int(b) ** int(e)
        if "e" in s.lower():
            v = float(s)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(s)
    except ValueError:
        raise ConfigError(f"{what}: not an integer: {s!r}") from None


def parse_samples(text: str, x_max: int) -> list[int]:
    """start:ratio:count -> round(start * ratio^i), i < count."""
    if not text:
        xs = [10**j for j in range(4, 20) if 10**j <= x_max]
        return xs or [x_max]
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"x_samples must be start:ratio:count, got {text!r}")
    start = parse_int(parts[0], "x_samples start")
    try:
        ratio = float(parts[1])
    except ValueError:
        raise ConfigError(f"x_samples ratio: {parts[1]!r}") from None
    count = parse_int(parts[2], "x_samples count")
    if start < 1 or ratio <= 1 or count < 1:
        raise ConfigError("x_samples needs start >= 1, ratio > 1, count >= 1")
    xs = sorted({round(start * ratio**i) for i in range(count)})
    if xs[-1] > x_max:
        raise ConfigError(f"x_samples up to {xs[-1]} exceed x_max = {x_max}")
    return xs


def read_config_file(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in KEYS:
            raise ConfigError(f"{path}:{i}: unknown key {k!r}")
        out[k] = v
    return out


def merge_settings(args, environ=os.environ) -> dict[str, str]:
    s = dict(DEFAULTS)
    if getattr(args, "config", None):
        s.update(read_config_file(args.config))
    for k in KEYS:
        v = environ.get("LAF_" + k.upper())
        if v is not None:
            s[k] = v
    for k in KEYS:
        v = getattr(args, k, None)
        if v is not None:
            s[k] = str(v)
    return s


def build_config(s: dict[str, str]) -> RunConfig:
    x_max = parse_int(s["x_max"], "x_max")
    if not 1 <= x_max <= GLOBAL_LIMIT:
        raise ConfigError(f"x_max must be in [1, {GLOBAL_LIMIT}]")
    seg = parse_int(s["segment_size"], "segment_size")
    if seg < 1:
        raise ConfigError("segment_size must be positive")
    threads = parse_int(s["threads"], "threads")
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    ids = [t.strip() for t in s["experiments"].split(",") if t.strip()]
    if ids == ["all"]:
        ids = list(experiments.REGISTRY)
    unknown = [i for i in ids if i not in experiments.REGISTRY]
    if unknown or not ids:
        raise ConfigError(f"unknown experiment id(s): {', '.join(unknown) or '(none given)'}")
    return RunConfig(
        x_max=x_max,
        x_samples=parse_samples(s["x_samples"], x_max),
        segment_size=seg,
        cache_dir=Path(s["cache_dir"]) if s["cache_dir"] else None,
        threads=threads,
        experiment_ids=ids,
        output_dir=Path(s["out"]),
    )


def run(cfg: RunConfig, out=sys.stdout) -> int:
    cache = SegmentCache(cfg.cache_dir) if cfg.cache_dir else None
    ctx = experiments.Context(cfg.x_max, cfg.x_samples, cfg.segment_size, cfg.threads, cache)
    reports = []
    for eid in cfg.experiment_ids:
        t0 = time.perf_counter()
        rep = experiments.REGISTRY[eid].run(ctx)
        rep.metadata.setdefault("anchor", experiments.REGISTRY[eid].anchor)
        reports.append(rep)
        status = "ok" if rep.passed else "FAILED"
        print(f"{eid:20s} {status:6s} trend={rep.trend:12s} {time.perf_counter() - t0:7.2f}s", file=out)
        for c in rep.checks:
            if not c.passed:
                print(f"    check failed: {c.name} {c.detail}", file=out)
    for rep in reports:
        rep.write(cfg.output_dir, cfg.x_max)
    if cache is not None and cache.recovered:
        log.warning("recovered %d corrupt cache file(s) in %s", cache.recovered, cfg.cache_dir)
    return 0 if all(r.passed for r in reports) else 1


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laf", description="Largest-prime-factor experiments.")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run experiments and write CSV/JSON reports")
    r.add_argument("--experiments", help="comma-separated ids, or 'all'")
    r.add_argument("--x-max", dest="x_max")
    r.add_argument("--x-samples", dest="x_samples", help="start:ratio:count (default: decades from 1e4)")
    r.add_argument("--segment-size", dest="segment_size")
    r.add_argument("--cache-dir", dest="cache_dir")
    r.add_argument("--threads")
    r.add_argument("--out")
    r.add_argument("--config", help="key=value file")

    sub.add_parser("list", help="list experiment ids")

    t = sub.add_parser("rho-table", help="write the rho grid as CSV")
    t.add_argument("--u-max", type=float, default=20.0)
    t.add_argument("--out", default="rho_table.csv")

    g = sub.add_parser("smooth-grid", help="psi(x, y) against x rho(u) and Lambda(x, y)")
    g.add_argument("--x-max", default="1e6")
    g.add_argument("--out", default="smooth_grid.csv")

    d = sub.add_parser("density", help="exact local densities d_k")
    d.add_argument("--k-max", type=int, default=50)
    d.add_argument("--out", default="density.csv")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "list":
            for eid, anchor in experiments.catalog():
                print(f"{eid}\t{anchor}")
            return 0
        if args.cmd == "rho-table":
            if not args.u_max > 0:
                raise ConfigError("u-max must be positive")
            dickman.export_table(args.out, args.u_max)
            return 0
        if args.cmd == "smooth-grid":
            top = parse_int(args.x_max, "x-max")
            xs = [10**j for j in range(2, 19) if 10**j <= top] or [top]
            res = smooth.smooth_grid(xs, experiments.SMOOTH_YS)
            _write_csv(args.out, smooth.GRID_HEADER, smooth.grid_rows(res))
            return 0
        if args.cmd == "density":
            if args.k_max < 0:
                raise ConfigError("k-max must be >= 0")
            d = density.density_series(args.k_max)
            _write_csv(args.out, ["k", "d_k"], [[k, float(v)] for k, v in enumerate(d)])
            return 0
        cfg = build_config(merge_settings(args))
    except ConfigError as exc:
        print(f"laf: error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
