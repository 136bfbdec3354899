"""Volume/area-law fits, critical-point crossing and finite-size data collapse.

The collapse maps every (N, p, E_max) point to

    x = (p - p_c) * N**(1/nu),    y = E_max / log(N)

and scores a candidate (p_c, nu) by how far each point sits from the
piecewise-linear curves of the *other* sizes, interpolated at its own x
(a parameter-free master-curve residual). The log base only rescales y and so
does not move the optimum.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

PARITIES = ("all", "mod4-0", "mod4-2")


class NoCrossingError(ValueError):
    pass


class CollapseError(ValueError):
    pass


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residual_norm: float

    @property
    def c1(self) -> float:
        return self.intercept


@dataclass(frozen=True)
class PcEstimate:
    p_c: float
    spread: float
    crossings: tuple = ()  # (N_small, N_large, p_cross)


@dataclass
class CollapseFit:
    p_c: float
    nu: float
    quality: float
    mode: str
    log_base: float
    grid: dict = field(default_factory=dict)
    on_boundary: bool = False
    bootstrap: dict | None = None

    def scaled(self, summaries) -> list[tuple[int, float, float, float]]:
        return collapse_points(summaries, self.p_c, self.nu, self.log_base)

    def to_json(self) -> dict:
        return {
            "p_c": self.p_c,
            "nu": self.nu,
            "quality": self.quality,
            "mode": self.mode,
            "log_base": self.log_base,
            "abscissa": "(p - p_c) * N**(1/nu)",
            "ordinate": "emax / log(N)",
            "grid": self.grid,
            "on_boundary": self.on_boundary,
            "bootstrap": self.bootstrap,
        }


def _as_points(summaries, parity: str = "all"):
    """Accept EmaxSummary objects or (N, p, emax) tuples; returns three arrays."""
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    rows = []
    for s in summaries:
        if hasattr(s, "emax"):
            rows.append((s.num_qubits, s.error_rate, s.emax))
        else:
            rows.append(tuple(s)[:3])
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    n = arr[:, 0].astype(int)
    keep = np.ones(len(n), bool)
    if parity == "mod4-0":
        keep = n % 4 == 0
    elif parity == "mod4-2":
        keep = n % 4 == 2
    return n[keep], arr[keep, 1], arr[keep, 2]


def fit_linear_volume_law(points) -> LinearFit:
    """Ordinary least squares of E_max against N over ``(N, E_max)`` pairs."""
    pts = np.asarray(
        [(s.num_qubits, s.emax) if hasattr(s, "emax") else tuple(s) for s in points], dtype=float
    )
    if pts.ndim != 2 or len(np.unique(pts[:, 0])) < 2:
        raise ValueError("need at least two distinct system sizes for a linear fit")
    a = np.column_stack([pts[:, 0], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(a, pts[:, 1], rcond=None)
    resid = float(np.linalg.norm(a @ coef - pts[:, 1]))
    return LinearFit(float(coef[0]), float(coef[1]), resid)


def _curves(n, p, e, log_base):
    out = {}
    for size in np.unique(n):
        m = n == size
        order = np.argsort(p[m])
        out[int(size)] = (p[m][order], e[m][order] / (math.log(size) / math.log(log_base)))
    return out


def _first_crossing(grid, diff):
    """Root of ``diff`` where it goes from positive to non-positive, else any sign change."""
    for want_down in (True, False):
        for k in range(len(grid) - 1):
            d0, d1 = diff[k], diff[k + 1]
            if want_down and not (d0 > 0 and d1 <= 0):
                continue
            if not want_down and not (d0 < 0 and d1 >= 0):
                continue
            if d1 == 0:
                return grid[k + 1]
            return grid[k] + d0 * (grid[k + 1] - grid[k]) / (d0 - d1)
    return None


def estimate_pc_crossing(summaries, *, log_base: float = 2.0, parity: str = "all") -> PcEstimate:
    """Median crossing of E_max/log(N) between adjacent system sizes.

    Curves are interpolated piecewise-linearly in p on the union of both p grids.
    """
    n, p, e = _as_points(summaries, parity)
    curves = _curves(n, p, e, log_base)
    sizes = sorted(curves)
    if len(sizes) < 2:
        raise ValueError("need at least two system sizes to locate a crossing")
    crossings = []
    for small, large in zip(sizes, sizes[1:]):
        ps, ys = curves[small]
        pl, yl = curves[large]
        lo, hi = max(ps[0], pl[0]), min(ps[-1], pl[-1])
        grid = np.union1d(ps, pl)
        grid = grid[(grid >= lo) & (grid <= hi)]
        if len(grid) < 2:
            continue
        diff = np.interp(grid, pl, yl) - np.interp(grid, ps, ys)
        # round-off between coincident curves is not a crossing
        diff[np.abs(diff) <= 1e-12 * max(1.0, np.abs(ys).max(), np.abs(yl).max())] = 0.0
        root = _first_crossing(grid, diff)
        if root is not None:
            crossings.append((small, large, float(root)))
    if not crossings:
        raise NoCrossingError(f"curves for sizes {sizes} do not cross in the sampled p range")
    roots = np.array([c[2] for c in crossings])
    return PcEstimate(
        p_c=float(np.median(roots)),
        spread=float((roots.max() - roots.min()) / 2),
        crossings=tuple(crossings),
    )


def collapse_points(summaries, p_c: float, nu: float, log_base: float = 2.0, parity: str = "all"):
    n, p, e = _as_points(summaries, parity)
    x = (p - p_c) * n.astype(float) ** (1.0 / nu)
    y = e / (np.log(n) / math.log(log_base))
    return [(int(a), float(b), float(c), float(d)) for a, b, c, d in zip(n, p, x, y)]


class _Objective:
    def __init__(self, n, p, e, log_base):
        self.sizes = np.unique(n)
        self.groups = []
        for size in self.sizes:
            m = n == size
            order = np.argsort(p[m])
            y = e[m][order] / (math.log(size) / math.log(log_base))
            self.groups.append((float(size), p[m][order], y))

    def __call__(self, p_c: float, nu: float) -> float:
        xs = [(p - p_c) * size ** (1.0 / nu) for size, p, _ in self.groups]
        total, count = 0.0, 0
        for i, (_, _, yi) in enumerate(self.groups):
            for k, (_, _, yk) in enumerate(self.groups):
                if i == k:
                    continue
                xk = xs[k]
                inside = (xs[i] >= xk[0]) & (xs[i] <= xk[-1])
                if not inside.any():
                    continue
                r = yi[inside] - np.interp(xs[i][inside], xk, yk)
                total += float(r @ r)
                count += int(inside.sum())
        return total / count if count else math.inf


def _grid(lo, hi, step):
    k = int(round((hi - lo) / step))
    return lo + step * np.arange(k + 1)


def collapse_fit(
    summaries,
    p_c_range=(0.0, 0.15),
    nu_range=(0.5, 3.0),
    *,
    p_c: float | None = None,
    log_base: float = 2.0,
    parity: str = "all",
    p_c_step: float = 0.002,
    nu_step: float = 0.01,
    refine: bool = True,
) -> CollapseFit:
    """Best (p_c, nu) for the collapse of E_max/log(N) against (p - p_c) N^(1/nu).

    With ``p_c`` given only nu is searched (two-stage mode); otherwise p_c and
    nu are searched jointly on the grid, then refined by bounded golden-section
    passes within one grid step.
    """
    n, p, e = _as_points(summaries, parity)
    if len(np.unique(n)) < 3:
        raise CollapseError(f"collapse needs at least 3 system sizes, got {sorted(set(n.tolist()))}")
    obj = _Objective(n, p, e, log_base)
    nus = _grid(*nu_range, nu_step)
    if p_c is not None:
        pcs = np.array([float(p_c)])
        mode = "fixed_p_c"
    else:
        pcs = _grid(*p_c_range, p_c_step)
        mode = "joint"
    values = np.array([[obj(a, b) for b in nus] for a in pcs])
    i, j = np.unravel_index(np.argmin(values), values.shape)
    best_pc, best_nu = float(pcs[i]), float(nus[j])
    on_boundary = j in (0, len(nus) - 1) or (mode == "joint" and i in (0, len(pcs) - 1))
    if refine and not on_boundary:
        lo, hi = max(nu_range[0], best_nu - nu_step), min(nu_range[1], best_nu + nu_step)
        best_nu = _golden(lambda v: obj(best_pc, v), lo, hi, best_nu)
        if mode == "joint":
            lo, hi = max(p_c_range[0], best_pc - p_c_step), min(p_c_range[1], best_pc + p_c_step)
            best_pc = _golden(lambda v: obj(v, best_nu), lo, hi, best_pc)
    return CollapseFit(
        p_c=best_pc,
        nu=best_nu,
        quality=float(obj(best_pc, best_nu)),
        mode=mode,
        log_base=float(log_base),
        grid={
            "p_c": [float(pcs[0]), float(pcs[-1]), p_c_step if mode == "joint" else 0.0],
            "nu": [float(nus[0]), float(nus[-1]), nu_step],
            "parity": parity,
        },
        on_boundary=bool(on_boundary),
    )


def _golden(f, lo, hi, start):
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    # keep the grid point if refinement landed somewhere worse (non-smooth objective)
    return float(res.x) if res.fun <= f(start) else float(start)


def bootstrap_collapse(
    grouped_raw: dict,
    *,
    resamples: int = 200,
    seed: int = 0,
    log_base: float = 2.0,
    parity: str = "all",
    nu_range=(0.5, 3.0),
    nu_step: float = 0.01,
    threads: int | None = None,
) -> dict:
    """Percentile intervals for p_c and nu from resampled circuit realizations.

    ``grouped_raw`` is ``{(N, p): {sample_index: (depths, values)}}``. Sample
    indices are resampled per N and shared across p, preserving the pairing
    of realizations between error rates. All resamples are drawn up front, so
    ``threads`` never changes the result.
    """
    from .experiment import NegativityTrace, extract_emax

    rng = np.random.default_rng(seed)
    by_n: dict = {}
    for (size, rate), per in grouped_raw.items():
        by_n.setdefault(size, {})[rate] = per
    picks = []
    for _ in range(resamples):
        draw = {}
        for size in sorted(by_n):
            indices = sorted(next(iter(by_n[size].values())))
            draw[size] = rng.choice(indices, size=len(indices), replace=True)
        picks.append(draw)

    def one(draw):
        rows = []
        for size in sorted(by_n):
            for rate, per in by_n[size].items():
                tr = NegativityTrace.from_samples(size, rate, [per[int(s)] for s in draw[size]])
                rows.append((size, rate, extract_emax(tr).emax))
        try:
            est = estimate_pc_crossing(rows, log_base=log_base, parity=parity)
            fit = collapse_fit(
                rows, p_c=est.p_c, nu_range=nu_range, nu_step=nu_step,
                log_base=log_base, parity=parity, refine=False,
            )
        except (NoCrossingError, CollapseError, ValueError):
            return None
        return est.p_c, fit.nu

    threads = threads or os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, picks))
    else:
        results = [one(d) for d in picks]
    done = [r for r in results if r is not None]
    failures = len(results) - len(done)
    pcs = [r[0] for r in done]
    nus = [r[1] for r in done]
    out = {"resamples": resamples, "failures": failures}
    if pcs:
        out["p_c"] = [float(v) for v in np.percentile(pcs, [2.5, 50, 97.5])]
        out["nu"] = [float(v) for v in np.percentile(nus, [2.5, 50, 97.5])]
    return out
