"""Finite-size-scaling data collapse.

Each system size ``L`` contributes a series ``chi(p)``.  Under the trial
parameters the series is mapped to ``q = L**(1/nu) * (p - p_c)`` and
interpolated with a monotone piecewise cubic Hermite curve ``f_L``.  The
cost is the ordered-pair sum

    R = sum_L sum_{L' != L} sum_{q in Q_L'} (f_L(q) - f_L'(q))**2

with ``q`` restricted to ``f_L``'s own range so nothing is extrapolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "rescale",
    "monotone_interpolant",
    "SweepData",
    "collapse_cost",
    "DataCollapse",
    "CollapseFit",
]


def rescale(L, p, p_c: float, nu: float):
    """``q = L**(1/nu) * (p - p_c)``; broadcasts over arrays."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    L = np.asarray(L, dtype=float)
    if np.any(L <= 0):
        raise ValueError("L must be positive")
    q = L ** (1.0 / nu) * (np.asarray(p, dtype=float) - p_c)
    return float(q) if q.ndim == 0 else q


def monotone_interpolant(q, chi) -> PchipInterpolator:
    """C1 monotone cubic Hermite interpolant through sorted knots.

    Two knots give the straight segment between them.
    """
    q = np.asarray(q, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if q.ndim != 1 or q.shape != chi.shape:
        raise ValueError("q and chi must be 1-d arrays of equal length")
    if len(q) < 2:
        raise ValueError("need at least two knots")
    if np.any(np.diff(q) <= 0):
        raise ValueError("knots must be strictly increasing")
    if not np.all(np.isfinite(chi)):
        raise ValueError("values must be finite")
    return PchipInterpolator(q, chi, extrapolate=False)


@dataclass(frozen=True)
class SweepData:
    """Per-L sorted series.  ``series[L] = (p, chi, eps)``."""

    series: dict

    @classmethod
    def from_arrays(cls, L, p, chi, eps=None) -> "SweepData":
        L = np.asarray(L)
        p = np.asarray(p, dtype=float)
        chi = np.asarray(chi, dtype=float)
        eps = np.zeros_like(chi) if eps is None else np.asarray(eps, dtype=float)
        if not (L.shape == p.shape == chi.shape == eps.shape) or L.ndim != 1:
            raise ValueError("L, p, chi, eps must be 1-d arrays of equal length")
        if not np.all(np.isfinite(chi)):
            raise ValueError("chi values must be finite")
        series = {}
        for size in np.unique(L):
            sel = L == size
            order = np.argsort(p[sel], kind="stable")
            ps = p[sel][order]
            if len(ps) < 2:
                raise ValueError(f"series L={size} has fewer than two points")
            if np.any(np.diff(ps) <= 0):
                raise ValueError(f"series L={size} has repeated p values")
            series[int(size)] = (ps, chi[sel][order], eps[sel][order])
        if len(series) < 2:
            raise ValueError("need at least two system sizes")
        return cls(series)

    @property
    def sizes(self) -> list[int]:
        return sorted(self.series)

    @property
    def p_range(self) -> tuple[float, float]:
        lo = min(s[0][0] for s in self.series.values())
        hi = max(s[0][-1] for s in self.series.values())
        return float(lo), float(hi)


def _cost(data: SweepData, p_c: float, nu: float, weighted: bool = False) -> tuple[float, int]:
    qs, ys, ws, fs = {}, {}, {}, {}
    for L, (p, chi, eps) in data.series.items():
        q = L ** (1.0 / nu) * (p - p_c)
        qs[L], ys[L] = q, chi
        ws[L] = eps
        fs[L] = PchipInterpolator(q, chi, extrapolate=False)
    total = 0.0
    n_terms = 0
    for L in qs:
        lo, hi = qs[L][0], qs[L][-1]
        for Lp in qs:
            if Lp == L:
                continue
            q = qs[Lp]
            sel = (q >= lo) & (q <= hi)
            if not sel.any():
                continue
            diff = fs[L](q[sel]) - ys[Lp][sel]
            if weighted:
                # inverse-variance weight from the knot's own error bar
                w = ws[Lp][sel] ** 2
                w = np.where(w > 0, 1.0 / np.maximum(w, 1e-300), 0.0)
                total += float(np.sum(w * diff * diff))
            else:
                total += float(np.dot(diff, diff))
            n_terms += int(sel.sum())
    return total, n_terms


def collapse_cost(data: SweepData, p_c: float, nu: float, weighted: bool = False,
                  normalized: bool = False) -> float:
    """Residual cost R(nu, p_c).  Zero when no windows overlap (vacuous sum).

    ``normalized`` divides by the number of compared knots, which makes
    costs of sweeps with different shapes comparable.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    total, n = _cost(data, p_c, nu, weighted)
    if normalized:
        return total / n if n else 0.0
    return total


@dataclass
class CollapseFit:
    p_c: float
    nu: float
    cost: float
    delta_p_c: float
    delta_nu: float
    eta: float
    delta_p_c_pm: tuple
    delta_nu_pm: tuple
    cost_surface: tuple  # (p_c grid, nu grid, R[nu, p_c])
    flags: tuple = ()

    def to_dict(self) -> dict:
        nan = lambda v: None if v is None or not math.isfinite(v) else float(v)
        return {
            "p_c": float(self.p_c), "nu": float(self.nu), "cost": float(self.cost),
            "delta_p_c": nan(self.delta_p_c), "delta_nu": nan(self.delta_nu),
            "eta": self.eta, "flags": list(self.flags),
        }


def _width(x_star: float, eta: float, r_star: float, r_shift: float) -> float:
    """eta * x* * [2 log(R_shift / R*)]**-1/2.

    NaN when R* is zero (the log-ratio is singular); infinite when the
    shifted cost does not exceed R* (no curvature on that side).
    """
    if not r_star > 0:
        return float("nan")
    if not r_shift > r_star:
        return float("inf")
    if not np.isfinite(r_shift):
        return 0.0
    return float(eta * abs(x_star) / math.sqrt(2.0 * math.log(r_shift / r_star)))


class DataCollapse(TransformerMixin, BaseEstimator):
    """Fit ``(p_c, nu)`` by minimising the collapse cost.

    ``X`` has two columns ``(L, p)``; ``y`` holds the measured cross entropy.
    Bounds are required: pass equal lower and upper bounds to hold a
    parameter fixed.  Coarse grid search is followed by Nelder-Mead from
    the best grid cell, then uncertainty widths at level ``eta``.
    """

    def __init__(self, p_c_bounds=(0.0, 1.0), nu_bounds=(0.5, 3.0), grid: int = 61,
                 eta: float = 0.1, xatol: float = 1e-4, weighted: bool = False):
        self.p_c_bounds = p_c_bounds
        self.nu_bounds = nu_bounds
        self.grid = grid
        self.eta = eta
        self.xatol = xatol
        self.weighted = weighted

    # -- helpers -------------------------------------------------------------
    def _validate_params(self):
        for name in ("p_c_bounds", "nu_bounds"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValueError(f"{name} must be finite with lower <= upper")
        if self.nu_bounds[0] <= 0:
            raise ValueError("nu bounds must be positive")
        if int(self.grid) < 2:
            raise ValueError("grid must have at least 2 points per axis")
        if not self.eta > 0:
            raise ValueError("eta must be positive")

    @staticmethod
    def _split(X, y=None, eps=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError("X must have shape (n_samples, 2) with columns (L, p)")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if y is None:
            return X[:, 0], X[:, 1]
        y = np.asarray(y, dtype=float).ravel()
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")
        return SweepData.from_arrays(X[:, 0].astype(int), X[:, 1], y, eps)

    # -- estimator API ----------------------------------------------------------
    def fit(self, X, y, eps=None):
        self._validate_params()
        data = self._split(X, y, eps)
        self.data_ = data
        weighted = bool(self.weighted)
        (pl, ph), (nl, nh) = self.p_c_bounds, self.nu_bounds
        g = int(self.grid)
        pgrid = np.linspace(pl, ph, g) if ph > pl else np.array([pl])
        ngrid = np.linspace(nl, nh, g) if nh > nl else np.array([nl])
        surface = np.empty((len(ngrid), len(pgrid)))
        overlap = np.empty_like(surface, dtype=np.int64)
        for i, nu in enumerate(ngrid):
            for j, pc in enumerate(pgrid):
                surface[i, j], overlap[i, j] = _cost(data, pc, nu, weighted)
        flags = []
        if np.all(surface == 0):
            flags.append("flat_surface")
        i, j = np.unravel_index(np.argmin(surface), surface.shape)
        start = np.array([pgrid[j], ngrid[i]])
        free = np.array([ph > pl, nh > nl])

        def objective(v):
            full = start.copy()
            full[free] = v
            full[0] = np.clip(full[0], pl, ph)
            full[1] = np.clip(full[1], nl, nh)
            return _cost(data, full[0], full[1], weighted)[0]

        best = start.copy()
        best_cost = float(surface[i, j])
        if free.any():
            res = minimize(objective, start[free], method="Nelder-Mead",
                           options={"xatol": self.xatol, "fatol": 1e-14, "maxiter": 4000})
            if res.fun <= best_cost:
                best[free] = res.x
                best_cost = float(res.fun)
        best[0] = np.clip(best[0], pl, ph)
        best[1] = np.clip(best[1], nl, nh)
        p_c, nu = float(best[0]), float(best[1])
        r_star = _cost(data, p_c, nu, weighted)[0]
        if r_star == 0 and "flat_surface" not in flags:
            flags.append("zero_cost_minimum")
        eta = float(self.eta)
        if "flat_surface" in flags:
            dn = dp = (float("nan"), float("nan"))
        else:
            rn = [_cost(data, p_c, nu * (1 + s * eta), weighted)[0] if nu * (1 + s * eta) > 0 else float("inf")
                  for s in (1, -1)]
            rp = [_cost(data, p_c * (1 + s * eta), nu, weighted)[0] for s in (1, -1)]
            dn = tuple(_width(nu, eta, r_star, r) for r in rn)
            dp = tuple(_width(p_c, eta, r_star, r) for r in rp)
        self.p_c_ = p_c
        self.nu_ = nu
        self.cost_ = r_star
        self.delta_nu_pm_ = dn
        self.delta_p_c_pm_ = dp
        self.delta_nu_ = _max_defined(dn)
        self.delta_p_c_ = _max_defined(dp)
        self.cost_surface_ = (pgrid, ngrid, surface)
        self.overlap_surface_ = overlap
        self.flags_ = tuple(flags)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "p_c_")
        L, p = self._split(X)
        return rescale(L, p, self.p_c_, self.nu_).reshape(-1, 1)

    def score(self, X, y, eps=None):
        """Negative collapse cost at the fitted parameters."""
        check_is_fitted(self, "p_c_")
        data = self._split(X, y, eps)
        return -_cost(data, self.p_c_, self.nu_, bool(self.weighted))[0]

    @property
    def result_(self) -> CollapseFit:
        check_is_fitted(self, "p_c_")
        return CollapseFit(self.p_c_, self.nu_, self.cost_, self.delta_p_c_, self.delta_nu_,
                           float(self.eta), self.delta_p_c_pm_, self.delta_nu_pm_,
                           self.cost_surface_, self.flags_)

    def rescaled_table(self) -> np.ndarray:
        """Rows (q, chi, L) for collapse plots."""
        check_is_fitted(self, "p_c_")
        rows = []
        for L, (p, chi, _) in self.data_.series.items():
            q = rescale(L, p, self.p_c_, self.nu_)
            rows.extend(zip(q, chi, [L] * len(q)))
        return np.array(rows, dtype=float)


def _max_defined(pair) -> float:
    vals = [v for v in pair if not np.isnan(v)]
    return float(max(vals)) if vals else float("nan")
