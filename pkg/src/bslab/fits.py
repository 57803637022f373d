"""Fringe and decay models, least-squares and binomial maximum-likelihood fits.

Fringe models take the per-qubit rotation angle theta; a row GHZ state turns
it into a relative phase 3 theta, so with c = cos(3 theta / 2) and
s = sin(3 theta / 2) each row parity is +1 with probability c^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats
from scipy.optimize import brentq

HALF_PI = math.pi / 2
PROFILE_DELTA = stats.chi2.ppf(0.95, 1) / 2  # 1.92


def _cs(theta):
    h = 1.5 * np.asarray(theta, dtype=float)
    return np.cos(h), np.sin(h)


def _ratio(c, s, k):
    a, b = c ** (2 * k), s ** (2 * k)
    return (a - b) / (a + b)


def ramsey_raw(theta, A=1.0):
    return A * np.cos(3 * np.asarray(theta, dtype=float)) ** 3


def ramsey_corr(theta, A=1.0):
    c, s = _cs(theta)
    return A * (c ** 6 + 3 * c ** 4 * s ** 2 - 3 * c ** 2 * s ** 4 - s ** 6)


def ramsey_det(theta, A=1.0):
    c, s = _cs(theta)
    return A * _ratio(c, s, 3)


def ramsey_raw_depol(theta, A=1.0, p=0.0):
    return A * (1 - p) ** 3 * np.cos(3 * np.asarray(theta, dtype=float)) ** 3


def ramsey_corr_depol(theta, A=1.0, p=0.0):
    c, s = _cs(theta)
    q = 1 - p
    a = q ** 3 + 3 * q ** 2 * p + 1.5 * p ** 2 * q
    b = 3 * q ** 3 + 3 * q ** 2 * p + 1.5 * p ** 2 * q
    return A * (a * (c ** 6 - s ** 6) + b * (s ** 2 * c ** 4 - s ** 4 * c ** 2))


def ramsey_det_depol(theta, A=1.0, p=0.0):
    """Weighted sum of per-case renormalized fringes (closed-form approximation)."""
    c, s = _cs(theta)
    q = 1 - p
    return A * (q ** 3 * _ratio(c, s, 3) + 1.5 * p * q ** 2 * _ratio(c, s, 2)
                + 0.75 * p ** 2 * q * _ratio(c, s, 1))


def ramsey_det_depol_exact(theta, A=1.0, p=0.0):
    """Exact post-selected expectation for independently depolarized rows.

    With k intact rows, a shot survives when all row parities agree; intact
    rows contribute c^2 or s^2, depolarized ones 1/2 each.  The kept
    expectation is one ratio over all cases, not a mixture of ratios.
    """
    c, s = _cs(theta)
    q = 1 - p
    num = np.zeros_like(c)
    den = np.zeros_like(c)
    for k in range(4):
        w = math.comb(3, k) * q ** k * p ** (3 - k) * 0.5 ** (3 - k)
        num = num + w * (c ** (2 * k) - s ** (2 * k))
        den = den + w * (c ** (2 * k) + s ** (2 * k))
    return A * num / den


def exp_decay(t, A=1.0, T=1.0):
    return A * np.exp(-np.asarray(t, dtype=float) / T)


def gauss_decay(t, A=1.0, T=1.0):
    return A * np.exp(-(np.asarray(t, dtype=float) / T) ** 2)


def decay_sinusoid(theta, A=1.0, Gamma=0.0):
    theta = np.asarray(theta, dtype=float)
    return A * np.cos(theta) * np.exp(-Gamma * theta / HALF_PI)


def sinusoid(phi, A=1.0):
    return A * np.cos(np.asarray(phi, dtype=float))


def ghz_fringe(theta, A=1.0):
    return A * np.cos(3 * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class Param:
    name: str
    lo: float
    hi: float
    init: float
    log: bool = False  # sample starts on a log scale


@dataclass(frozen=True)
class Model:
    name: str
    func: Callable
    params: tuple[Param, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return [(p.lo, p.hi) for p in self.params]

    def __call__(self, x, *values):
        return self.func(x, *values)

    def check(self, values: Sequence[float]) -> None:
        for p, v in zip(self.params, values):
            if not p.lo <= v <= p.hi:
                raise ValueError(f"{self.name}: {p.name}={v} outside [{p.lo}, {p.hi}]")


_A = Param("A", 0.0, 1.0, 0.9)
_P = Param("p", 0.0, 1.0, 0.05)

MODELS: dict[str, Model] = {m.name: m for m in [
    Model("ExpDecay", exp_decay, (Param("A", 0.0, 2.0, 1.0), Param("T", 1e-6, 1e3, 0.1, log=True))),
    Model("GaussDecay", gauss_decay, (Param("A", 0.0, 2.0, 1.0), Param("T", 1e-6, 1e3, 0.1, log=True))),
    Model("DecaySinusoid", decay_sinusoid, (_A, Param("Gamma", 0.0, 1.0, 0.01))),
    Model("Sinusoid", sinusoid, (_A,)),
    Model("GhzFringe", ghz_fringe, (_A,)),
    Model("RamseyRaw", ramsey_raw, (_A,)),
    Model("RamseyCorr", ramsey_corr, (_A,)),
    Model("RamseyDet", ramsey_det, (_A,)),
    Model("RamseyRawDepol", ramsey_raw_depol, (_A, _P)),
    Model("RamseyCorrDepol", ramsey_corr_depol, (_A, _P)),
    Model("RamseyDetDepol", ramsey_det_depol, (_A, _P)),
    Model("RamseyDetDepolExact", ramsey_det_depol_exact, (_A, _P)),
]}


def get_model(model: str | Model) -> Model:
    if isinstance(model, Model):
        return model
    try:
        return MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; known: {sorted(MODELS)}") from None


def eval_model(model: str | Model, params: Sequence[float] | dict, x):
    m = get_model(model)
    values = [params[n] for n in m.names] if isinstance(params, dict) else list(params)
    if len(values) != len(m.params):
        raise ValueError(f"{m.name} takes {len(m.params)} parameters")
    m.check(values)
    return m(x, *values)


# -- fitting ---------------------------------------------------------------------------

class FitError(RuntimeError):
    """A fit did not converge."""


@dataclass
class FitResult:
    model: str
    params: dict[str, float]
    ci: dict[str, tuple[float, float]]
    residual_norm: float
    converged: bool
    degenerate: tuple[str, ...] = ()
    at_bound: tuple[str, ...] = ()
    objective: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model, "params": dict(self.params),
                "ci": {k: list(v) for k, v in self.ci.items()},
                "residual_norm": self.residual_norm, "converged": self.converged,
                "degenerate": list(self.degenerate), "at_bound": list(self.at_bound)}


def _starts(m: Model, init: Sequence[float] | None, n_starts: int, seed: int) -> np.ndarray:
    first = np.array([p.init for p in m.params] if init is None else list(init), dtype=float)
    first = np.clip(first, [p.lo for p in m.params], [p.hi for p in m.params])
    k = len(m.params)
    if n_starts <= 1:
        return first[None, :]
    h = stats.qmc.Halton(d=k, scramble=True, seed=seed).random(n_starts - 1)
    pts = np.empty_like(h)
    for j, p in enumerate(m.params):
        if p.log and p.lo > 0:
            pts[:, j] = np.exp(np.log(p.lo) + h[:, j] * (np.log(p.hi) - np.log(p.lo)))
        else:
            pts[:, j] = p.lo + h[:, j] * (p.hi - p.lo)
    return np.vstack([first, pts])


def _minimize(obj, m: Model, starts: np.ndarray, fixed: dict[int, float] | None = None):
    """Multi-start bounded Nelder-Mead, polished until the objective stalls.

    Returns (x, f, converged).  Ties keep the lowest start index.
    """
    fixed = fixed or {}
    free = [j for j in range(len(m.params)) if j not in fixed]
    bounds = [m.bounds[j] for j in free]

    def full(xf):
        x = np.empty(len(m.params))
        for j, v in fixed.items():
            x[j] = v
        x[free] = xf
        return x

    if not free:
        x = full(np.array([]))
        return x, obj(x), True

    def f(xf):
        v = obj(full(xf))
        return v if np.isfinite(v) else 1e300

    best_x, best_f, best_ok = None, math.inf, False
    opts = {"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000 * len(free), "maxfev": 8000 * len(free)}
    for s in starts:
        x0 = np.clip(s[free], [b[0] for b in bounds], [b[1] for b in bounds])
        res = optimize.minimize(f, x0, method="Nelder-Mead", bounds=bounds, options=opts)
        x, fx, ok = res.x, res.fun, False
        for _ in range(20):  # restart the simplex from the incumbent until it stalls
            res2 = optimize.minimize(f, x, method="Nelder-Mead", bounds=bounds, options=opts)
            improved = fx - res2.fun
            if res2.fun < fx:
                x, fx = res2.x, res2.fun
            if improved <= 1e-10 * max(abs(fx), 1e-300):
                ok = True
                break
        if fx < best_f:
            best_x, best_f, best_ok = x, fx, ok
    return full(best_x), best_f, best_ok


def _jacobian(m: Model, x_data, x: np.ndarray) -> np.ndarray:
    cols = []
    for j, p in enumerate(m.params):
        h = 1e-6 * max(abs(x[j]), 1e-3)
        up, dn = x.copy(), x.copy()
        up[j] = min(x[j] + h, p.hi)
        dn[j] = max(x[j] - h, p.lo)
        cols.append((m(x_data, *up) - m(x_data, *dn)) / (up[j] - dn[j]))
    return np.stack(cols, axis=1)


def _at_bound(m: Model, x: np.ndarray) -> tuple[str, ...]:
    out = []
    for p, v in zip(m.params, x):
        span = p.hi - p.lo
        if abs(v - p.lo) <= 1e-7 * span or abs(v - p.hi) <= 1e-7 * span:
            out.append(p.name)
    return tuple(out)


def fit_least_squares(model: str | Model, x, y, sigma=None, init: Sequence[float] | None = None,
                      n_starts: int = 6, seed: int = 0, strict: bool = False) -> FitResult:
    """Weighted least squares by multi-start bounded simplex.

    Intervals are 95% Wald intervals from (J^T W J)^-1, scaled by the reduced
    chi^2 when no sigma is given.  Parameters whose column of J vanishes (or
    make J^T W J singular) are reported as degenerate with NaN intervals.
    """
    m = get_model(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if len(x) < len(m.params):
        raise ValueError(f"need at least {len(m.params)} points")
    order = np.lexsort((y, x))  # fit is independent of input ordering
    x, y = x[order], y[order]
    with np.errstate(divide="ignore"):
        w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)[order] ** 2
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("sigma must be positive and finite")

    def obj(p):
        r = m(x, *p) - y
        return float(np.sum(w * r * r))

    best, fbest, ok = _minimize(obj, m, _starts(m, init, n_starts, seed))
    J = _jacobian(m, x, best)
    JTJ = J.T @ (w[:, None] * J)
    dof = len(x) - len(m.params)
    scale = fbest / dof if (sigma is None and dof > 0) else 1.0
    degenerate = []
    col_norm = np.sqrt(np.diag(JTJ))
    for j, p in enumerate(m.params):
        if col_norm[j] <= 1e-10 * max(1.0, col_norm.max()):
            degenerate.append(p.name)
    cov = None
    if not degenerate:
        try:
            if np.linalg.cond(JTJ) < 1e14:
                cov = np.linalg.inv(JTJ) * scale
            else:
                degenerate = list(m.names)
        except np.linalg.LinAlgError:
            degenerate = list(m.names)
    z = stats.norm.ppf(0.975)
    ci = {}
    for j, p in enumerate(m.params):
        if cov is None or p.name in degenerate:
            ci[p.name] = (float("nan"), float("nan"))
        else:
            half = z * math.sqrt(max(cov[j, j], 0.0))
            ci[p.name] = (max(p.lo, best[j] - half), min(p.hi, best[j] + half))
    res = FitResult(m.name, dict(zip(m.names, map(float, best))), ci, math.sqrt(fbest), ok,
                    tuple(degenerate), _at_bound(m, best), fbest)
    if strict and not ok:
        raise FitError(f"{m.name} least-squares fit did not converge")
    return res


def binomial_nll(model: Model, phi, k, n, params) -> float:
    e = np.clip(model(phi, *params), -1 + 1e-9, 1 - 1e-9)
    p = (1 + e) / 2
    return float(-np.sum(k * np.log(p) + (n - k) * np.log1p(-p)))


def fit_binomial_mle(model: str | Model, phi, k, n, init: Sequence[float] | None = None,
                     n_starts: int = 5, seed: int = 0, profile: bool = True,
                     strict: bool = False) -> FitResult:
    """Maximize sum log Binom(k; n, (1 + model) / 2).

    ``k`` counts +1 outcomes.  Intervals come from the profile likelihood at
    a drop of 1.92; if the profile stays below that up to a bound, the
    interval is one-sided and ends at the bound.
    """
    m = get_model(model)
    phi = np.asarray(phi, dtype=float)
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n < 1) or np.any(k < 0) or np.any(k > n):
        raise ValueError("need n >= 1 and 0 <= k <= n per point")
    obj = lambda p: binomial_nll(m, phi, k, n, p)  # noqa: E731
    starts = _starts(m, init, n_starts, seed)
    best, fbest, ok = _minimize(obj, m, starts)
    ci = {}
    if profile:
        for j, p in enumerate(m.params):
            ci[p.name] = _profile_interval(m, obj, best, fbest, j)
    e = m(phi, *best)
    resid = float(np.sqrt(np.sum((k / n - (1 + e) / 2) ** 2)))
    res = FitResult(m.name, dict(zip(m.names, map(float, best))), ci, resid, ok,
                    (), _at_bound(m, best), fbest)
    if strict and not ok:
        raise FitError(f"{m.name} likelihood fit did not converge")
    return res


def _profile_interval(m: Model, obj, best: np.ndarray, fbest: float, j: int) -> tuple[float, float]:
    p = m.params[j]
    others = len(m.params) > 1

    def prof(v: float) -> float:
        if not others:
            x = best.copy()
            x[j] = v
            return obj(x) - fbest - PROFILE_DELTA
        start = best.copy()
        start[j] = v
        x, f, _ = _minimize(obj, m, start[None, :], fixed={j: v})
        return f - fbest - PROFILE_DELTA

    ends = []
    for bound in (p.lo, p.hi):
        if math.isclose(best[j], bound, abs_tol=1e-12) or prof(bound) <= 0:
            ends.append(bound)
        else:
            ends.append(brentq(prof, *sorted((best[j], bound)), xtol=1e-10))
    return float(ends[0]), float(ends[1])


def deviance(model: str | Model, phi, k, n, params) -> float:
    """2 (NLL(model) - NLL(saturated))."""
    m = get_model(model)
    phi, k, n = (np.asarray(a, dtype=float) for a in (phi, k, n))
    f = k / n
    with np.errstate(divide="ignore", invalid="ignore"):
        sat = -np.sum(np.where(k > 0, k * np.log(f), 0) + np.where(n - k > 0, (n - k) * np.log1p(-f), 0))
    values = [params[nm] for nm in m.names] if isinstance(params, dict) else list(params)
    return 2 * (binomial_nll(m, phi, k, n, values) - sat)
