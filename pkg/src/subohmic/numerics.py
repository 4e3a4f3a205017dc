r"""Special functions and generic 1-d numerical kernels.

Everything here is a pure function of its inputs: quadrature rules for
power-law measures ``c * w^sigma dw`` on ``[0, upper]``, the principal
branch of the Lambert W function, a bounded scalar minimizer, a bracketing
root finder and log-log power-law fitting.  All routines are deterministic;
identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_jacobi

from .errors import BracketError, DomainError

_log = logging.getLogger(__name__)

_INV_E = math.exp(-1.0)


def lambert_w0(x: float) -> float:
    """Principal branch ``W0(x)`` of ``w * exp(w) = x`` for real ``x >= -1/e``.

    Halley iteration from a piecewise initial guess (branch-point series
    near ``-1/e``, ``log1p`` in the middle, asymptotic expansion for large
    arguments).  The result satisfies ``|w e^w - x| <= 1e-12 * max(1, |x|)``.

    Arguments up to ``1e-14`` below ``-1/e`` are clamped onto the branch
    point; anything lower raises :class:`DomainError`.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0: argument is NaN")
    if x <= -_INV_E:
        if x < -_INV_E - 1e-14:
            raise DomainError(f"lambert_w0: x={x!r} below -1/e")
        return -1.0
    if x == 0.0:
        return 0.0

    if x < -0.2:
        # series around the branch point w(-1/e) = -1
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * 43.0 / 540.0)))
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        w1 = w + 1.0
        if w1 == 0.0:
            w += 1e-12
            continue
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= 2e-16 * (2.0 + abs(w)):
            break
    return w


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights representing a measure on an interval.

    ``integrate(f, rule)`` approximates the integral of ``f`` against the
    measure the rule was built for; the weight function is folded into
    ``weights``, so integrating the constant 1 returns the measure's mass.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise DomainError("QuadratureRule: nodes/weights must be equal-length 1-d arrays")
        if nodes.size and np.any(np.diff(nodes) <= 0.0):
            raise DomainError("QuadratureRule: nodes must be strictly increasing")
        if np.any(weights <= 0.0):
            raise DomainError("QuadratureRule: weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def order(self) -> int:
        return self.nodes.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


@lru_cache(maxsize=None)
def _jacobi_unit(n: int, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    # Gauss rule for the measure w^sigma dw on [0, 1].
    x, w = roots_jacobi(n, 0.0, sigma)
    nodes = 0.5 * (x + 1.0)
    weights = w / 2.0 ** (sigma + 1.0)
    return nodes, weights


@lru_cache(maxsize=None)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def power_rule(sigma: float, upper: float, n: int, prefactor: float = 1.0) -> QuadratureRule:
    """Gauss rule for the measure ``prefactor * w^sigma dw`` on ``[0, upper]``.

    Exact for integrands that are polynomials of degree ``<= 2n - 1``
    multiplying the (possibly singular, ``sigma > -1``) weight.
    """
    if sigma <= -1.0:
        raise DomainError(f"power_rule: exponent {sigma} not integrable at 0")
    if upper <= 0.0 or n < 1 or prefactor <= 0.0:
        raise DomainError("power_rule: need upper > 0, n >= 1, prefactor > 0")
    nodes, weights = _jacobi_unit(int(n), float(sigma))
    return QuadratureRule(upper * nodes, prefactor * upper ** (sigma + 1.0) * weights)


_LOG_HEAD_FRACTION = 1e-8
_LOG_HEAD_N = 24
_LOG_SEGMENT_N = 32


def power_rule_log(
    sigma: float,
    upper: float,
    prefactor: float = 1.0,
    n_segment: int = _LOG_SEGMENT_N,
) -> QuadratureRule:
    """Composite rule for ``prefactor * w^sigma dw`` on ``[0, upper]``.

    A small Gauss-Jacobi head handles the endpoint singularity on
    ``[0, 1e-8 * upper]``; geometric decades of Gauss-Legendre panels cover
    the rest.  Accuracy is uniform for integrands with structure anywhere in
    ``(1e-7 * upper, upper)``, e.g. rational factors whose pole distance from
    the interval is many orders of magnitude smaller than ``upper``.
    """
    if sigma <= -1.0:
        raise DomainError(f"power_rule_log: exponent {sigma} not integrable at 0")
    if upper <= 0.0 or prefactor <= 0.0:
        raise DomainError("power_rule_log: need upper > 0, prefactor > 0")
    cut = _LOG_HEAD_FRACTION * upper
    head = power_rule(sigma, cut, _LOG_HEAD_N, prefactor)
    all_nodes = [head.nodes]
    all_weights = [head.weights]
    x, w = _leggauss(int(n_segment))
    n_decades = int(round(-math.log10(_LOG_HEAD_FRACTION)))
    lo = cut
    for k in range(n_decades):
        hi = upper if k == n_decades - 1 else cut * 10.0 ** (k + 1)
        mid = 0.5 * (hi + lo)
        half = 0.5 * (hi - lo)
        nodes = mid + half * x
        all_nodes.append(nodes)
        all_weights.append(prefactor * half * w * nodes**sigma)
        lo = hi
    return QuadratureRule(np.concatenate(all_nodes), np.concatenate(all_weights))


def legendre_rule(lo: float, hi: float, n: int) -> QuadratureRule:
    """Plain Gauss-Legendre rule for ``dw`` on ``[lo, hi]``."""
    if hi <= lo:
        raise DomainError("legendre_rule: need hi > lo")
    x, w = _leggauss(int(n))
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    return QuadratureRule(mid + half * x, half * w)


def integrate(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """Integrate ``f`` against the rule's measure: ``sum(weights * f(nodes))``.

    Non-finite values at a node are propagated to the result after logging a
    diagnostic naming the first offending node.
    """
    try:
        values = np.asarray(f(rule.nodes), dtype=float)
        if values.shape != rule.nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        values = np.array([float(f(x)) for x in rule.nodes])
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        _log.warning(
            "integrate: non-finite integrand value %r at node %r (index %d)",
            values[bad], rule.nodes[bad], bad,
        )
    return float(np.dot(rule.weights, values))


class MinimizeResult(NamedTuple):
    x: float
    fun: float
    boundary: bool


_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))


def minimize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    max_iter: int = 500,
) -> MinimizeResult:
    """Locate a local minimum of ``f`` on ``[lo, hi]``.

    Bounded golden-section search with successive parabolic interpolation
    (Brent).  ``tol`` is an absolute tolerance on the abscissa.  The
    endpoints are evaluated explicitly at the end; a minimum at ``lo`` or
    ``hi`` is returned as-is with ``boundary=True``.
    """
    if not lo < hi:
        raise DomainError("minimize_scalar: need lo < hi")
    a, b = float(lo), float(hi)
    x = w = v = a + _GOLDEN * (b - a)
    fx = fw = fv = float(f(x))
    d = e = 0.0
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        tol1 = tol
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            # trial parabolic step through (v, w, x)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_old = e
            e = d
            if abs(p) < abs(0.5 * q * e_old) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < m else -tol1
                use_golden = False
        if use_golden:
            e = (b if x < m else a) - x
            d = _GOLDEN * e
        u = x + (d if abs(d) >= tol1 else (tol1 if d > 0.0 else -tol1))
        fu = float(f(u))
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv = w, fw
            w, fw = x, fx
            x, fx = u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv = w, fw
                w, fw = u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    flo = float(f(lo))
    fhi = float(f(hi))
    if flo <= fx and flo <= fhi:
        return MinimizeResult(float(lo), flo, True)
    if fhi < fx:
        return MinimizeResult(float(hi), fhi, True)
    boundary = (x - lo) <= 2.0 * tol or (hi - x) <= 2.0 * tol
    return MinimizeResult(float(x), float(fx), boundary)


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` inside ``[lo, hi]``, which must bracket a sign change.

    Thin wrapper around a bisection/secant/inverse-quadratic hybrid; the
    returned abscissa is within ``tol`` of a sign change of ``f``.
    """
    flo = float(f(lo))
    fhi = float(f(hi))
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0.0:
        raise BracketError(f"find_root: no sign change on [{lo!r}, {hi!r}]")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4.0 * np.finfo(float).eps, maxiter=200))


@dataclass(frozen=True)
class FitResult:
    """Power-law fit ``y = prefactor * x**exponent`` from log-log least squares.

    ``residual`` is the root-mean-square misfit in log space.
    """

    exponent: float
    prefactor: float
    residual: float


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least-squares line in (log x, log y); the slope is the exponent."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 3:
        raise DomainError("fit_power_law: need at least 3 points")
    if x.shape != y.shape:
        raise DomainError("fit_power_law: xs and ys must have equal length")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("fit_power_law: data must be strictly positive")
    lx = np.log(x)
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return FitResult(
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
    )
