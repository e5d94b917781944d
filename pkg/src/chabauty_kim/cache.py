"""On-disk JSON cache of a constructed :class:`PolylogFamily`.

p-adic numbers are stored as base-p digit strings with their valuation and
absolute precision, and integer arrays (the g_k fit) as base-p strings, so a
reload reproduces the family digit for digit.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .padic import PadicContext, PadicNumber, from_base, to_base
from .polylog import ColemanFunction, GFunction, PolylogFamily, build_family
from .series import DiskSeries

FORMAT_VERSION = 1
CACHE_ENV = "KIM_VERIFY_CACHE_DIR"


class CacheError(RuntimeError):
    pass


class CacheVersionError(CacheError):
    pass


def default_cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None


def cache_filename(p: int, N_work: int, kmax: int) -> str:
    return f"polylog-p{p}-N{N_work}-k{kmax}.json"


def _series_to_json(f: DiskSeries) -> dict:
    return {"base": f.base, "growth": f.growth, "coeffs": [c.to_json() for c in f.coeffs]}


def _series_from_json(ctx: PadicContext, center: PadicNumber, data: dict) -> DiskSeries:
    coeffs = tuple(PadicNumber.from_json(ctx, c) for c in data["coeffs"])
    return DiskSeries(center, coeffs, data["base"], data["growth"])


def _function_to_json(f: ColemanFunction) -> dict:
    return {"name": f.name, "disks": {str(a): _series_to_json(s) for a, s in sorted(f.pieces.items())}}


def _function_from_json(ctx, centers, data) -> ColemanFunction:
    pieces = {int(a): _series_from_json(ctx, centers[int(a)], s) for a, s in data["disks"].items()}
    return ColemanFunction(ctx, pieces, data["name"])


def family_to_json(fam: PolylogFamily) -> dict:
    p = fam.p
    return {
        "format_version": FORMAT_VERSION,
        "p": p,
        "N_work": fam.ctx.N,
        "kmax": fam.kmax,
        "T": fam.T,
        "centers": {str(a): c.to_json() for a, c in sorted(fam.centers.items())},
        "functions": {
            "logz": _function_to_json(fam.logz),
            "log1mz": _function_to_json(fam.log1mz),
            **{f"Li{k}": _function_to_json(f) for k, f in sorted(fam.li.items())},
        },
        "ml": {
            str(k): {
                "d": [to_base(x, p) for x in g.ml_coeffs],
                "y": [to_base(x, p) for x in g.y_coeffs],
                "report": g.report,
            }
            for k, g in sorted(fam.g.items())
        },
        "zeta": {str(k): z.to_json() for k, z in sorted(fam.zeta.items())},
    }


def family_from_json(data: dict) -> PolylogFamily:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise CacheVersionError(f"cache format {version!r} is not supported (expected {FORMAT_VERSION})")
    p, N = data["p"], data["N_work"]
    ctx = PadicContext(p, N)
    centers = {int(a): PadicNumber.from_json(ctx, c) for a, c in data["centers"].items()}
    funcs = {name: _function_from_json(ctx, centers, f) for name, f in data["functions"].items()}
    kmax = data["kmax"]
    li = {k: funcs[f"Li{k}"] for k in range(1, kmax + 1)}
    gs = {
        int(k): GFunction(
            ctx,
            int(k),
            tuple(from_base(x, p) for x in g["d"]),
            tuple(from_base(x, p) for x in g["y"]),
            g.get("report", {}),
        )
        for k, g in data["ml"].items()
    }
    zeta = {int(k): PadicNumber.from_json(ctx, z) for k, z in data["zeta"].items()}
    return PolylogFamily(ctx, kmax, data["T"], funcs["logz"], funcs["log1mz"], li, gs, zeta, centers)


def save_family(fam: PolylogFamily, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_text(json.dumps(family_to_json(fam), separators=(",", ":")))
        tmp.replace(path)
    except OSError as exc:
        raise CacheError(f"cannot write cache {path}: {exc}") from exc
    return path


def load_family(path: Path) -> PolylogFamily:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from exc
    return family_from_json(data)


def cached_family(ctx: PadicContext, kmax: int, cache_dir: Path | None) -> tuple:
    """Load the family from ``cache_dir`` if present, else build (and store) it.

    Returns (family, hit) where ``hit`` tells whether the cache was used.
    """
    if cache_dir is None:
        return build_family(ctx, kmax), False
    path = Path(cache_dir) / cache_filename(ctx.p, ctx.N, kmax)
    if path.exists():
        fam = load_family(path)
        if fam.ctx.p == ctx.p and fam.ctx.N == ctx.N and fam.kmax == kmax:
            return fam, True
    fam = build_family(ctx, kmax)
    save_family(fam, path)
    return fam, False
