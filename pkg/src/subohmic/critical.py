r"""Critical coupling, phase diagrams and critical-exponent extraction.

The localization transition sits where the quadratic Landau coefficient of
the energy in the magnetization changes sign, ``c1(alpha_c) = 0``.  In the
wide-band limit this has the closed form

    alpha_c = sin(pi s) e^{-s/2} / (2 pi (1-s)) * (delta / omega_c)^(1-s),

with critical effective tunneling ``delta * exp(-s / (2 (1-s)))``.  The
numeric route bisects ``c1(alpha)`` from finite differences of the full
functional; both are always reported side by side because different
normalization conventions for the coupling are in circulation (they differ
by powers of ``omega_c / delta``) and the ratio makes the comparison to
other work explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .model import ModelParams
from .numerics import FitResult, find_root, fit_power_law
from .variational import (
    landau_coefficients,
    minimize_energy,
    solve_delta_tilde_exact,
)

_ALPHA_C_RTOL = 1e-8
_FIT_WINDOW = (1e-4, 1e-2)  # reduced-coupling window for exponent fits


@dataclass(frozen=True)
class CriticalPoint:
    """Location and character of the transition at fixed (s, delta, omega_c)."""

    s: float
    delta: float
    omega_c: float
    alpha_c_numeric: float
    alpha_c_closed: float
    delta_tilde_c: float
    sx_c: float

    @property
    def ratio(self) -> float:
        return self.alpha_c_numeric / self.alpha_c_closed


@dataclass
class SweepTable:
    """Row-per-coupling solver output behind magnetization/coherence plots."""

    alphas: np.ndarray
    m: np.ndarray
    sx: np.ndarray
    entanglement: np.ndarray
    energy: np.ndarray
    c1: np.ndarray
    s: float
    delta: float
    omega_c: float
    functional: str = "exact"
    failures: list = field(default_factory=list)

    def rows(self):
        for i in range(self.alphas.size):
            yield (self.alphas[i], self.m[i], self.sx[i], self.entanglement[i],
                   self.energy[i], self.c1[i])


def _require_subohmic_window(s: float) -> None:
    if not 0.0 < s < 0.5:
        raise DomainError(
            f"s={s!r} outside (0, 0.5); the mean-field critical analysis "
            "does not apply there")


def critical_coupling_closed(s: float, delta: float, omega_c: float) -> tuple[float, float]:
    """Closed-form wide-band critical coupling and effective tunneling.

    Returns ``(alpha_c, delta_tilde_c)`` with ``delta_tilde_c = delta *
    exp(-s / (2 (1-s)))``, the self-consistent tunneling at criticality
    implied jointly with the critical-coupling formula.
    """
    _require_subohmic_window(s)
    if delta <= 0.0 or omega_c <= 0.0:
        raise DomainError("critical_coupling_closed: need delta, omega_c > 0")
    alpha_c = (math.sin(math.pi * s) * math.exp(-0.5 * s)
               / (2.0 * math.pi * (1.0 - s))) * (delta / omega_c) ** (1.0 - s)
    dt_c = delta * math.exp(-s / (2.0 * (1.0 - s)))
    return alpha_c, dt_c


def critical_coupling_numeric(s: float, delta: float, omega_c: float,
                              functional: str = "exact") -> float:
    """Coupling where the quadratic Landau coefficient crosses zero.

    Brackets the sign change on a geometric ladder anchored at the closed
    form, then bisects to ``1e-8`` relative in ``alpha``.
    """
    _require_subohmic_window(s)
    alpha_closed, _ = critical_coupling_closed(s, delta, omega_c)

    def c1_of(alpha: float) -> float:
        p = ModelParams(s=s, alpha=alpha, delta=delta, omega_c=omega_c)
        return landau_coefficients(p, functional=functional)[1]

    lo = 0.25 * alpha_closed
    f_lo = c1_of(lo)
    if f_lo <= 0.0:
        lo, f_lo = lo / 16.0, c1_of(lo / 16.0)
        if f_lo <= 0.0:
            raise ConvergenceError("critical_coupling_numeric: no delocalized side found")
    hi = lo
    f_hi = f_lo
    for _ in range(40):
        hi *= 1.3
        f_hi = c1_of(hi)
        if f_hi < 0.0:
            break
        lo, f_lo = hi, f_hi
        if hi > 64.0 * alpha_closed:
            raise ConvergenceError("critical_coupling_numeric: no transition in range")
    else:
        raise ConvergenceError("critical_coupling_numeric: no transition in range")
    root = find_root(c1_of, lo, hi, tol=_ALPHA_C_RTOL * alpha_closed)
    return float(root)


def critical_point(s: float, delta: float, omega_c: float,
                   functional: str = "exact") -> CriticalPoint:
    """Numeric and closed-form critical data assembled in one record."""
    alpha_closed, _ = critical_coupling_closed(s, delta, omega_c)
    alpha_num = critical_coupling_numeric(s, delta, omega_c, functional)
    p_c = ModelParams(s=s, alpha=alpha_num, delta=delta, omega_c=omega_c)
    dt_c = solve_delta_tilde_exact(0.0, p_c)
    return CriticalPoint(
        s=s, delta=delta, omega_c=omega_c,
        alpha_c_numeric=alpha_num,
        alpha_c_closed=alpha_closed,
        delta_tilde_c=dt_c,
        sx_c=dt_c / delta,
    )


def sweep_alpha(s: float, delta: float, omega_c: float,
                alphas: Sequence[float], functional: str = "exact",
                threads: int = 1) -> SweepTable:
    """One ground-state solve per coupling; rows are independent.

    Per-row failures are recorded in ``failures`` as ``(index, message)``
    and filled with NaN; the sweep continues.  Rows are assembled in input
    order regardless of execution order, so output is deterministic.
    """
    alphas = np.asarray(list(alphas), dtype=float)
    if alphas.size and np.any(np.diff(alphas) <= 0.0):
        raise DomainError("sweep_alpha: alphas must be strictly increasing")
    n = alphas.size
    cols = {k: np.full(n, np.nan) for k in ("m", "sx", "ent", "energy", "c1")}
    failures: list = []

    def solve_row(i: int):
        p = ModelParams(s=s, alpha=float(alphas[i]), delta=delta, omega_c=omega_c)
        sol = minimize_energy(p, functional=functional)
        _, c1, _ = landau_coefficients(p, functional=functional)
        return sol.sz, sol.sx, sol.entanglement, sol.energy, c1

    def run(i: int):
        try:
            return i, solve_row(i), None
        except Exception as exc:  # per-row isolation is the contract
            return i, None, f"{type(exc).__name__}: {exc}"

    if threads > 1 and n > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(n)))
    else:
        results = [run(i) for i in range(n)]

    for i, row, err in results:
        if err is not None:
            failures.append((i, err))
            continue
        cols["m"][i], cols["sx"][i], cols["ent"][i], cols["energy"][i], cols["c1"][i] = row

    return SweepTable(
        alphas=alphas, m=cols["m"], sx=cols["sx"], entanglement=cols["ent"],
        energy=cols["energy"], c1=cols["c1"],
        s=s, delta=delta, omega_c=omega_c, functional=functional,
        failures=failures,
    )


def extract_exponents(table: SweepTable, alpha_c: float,
                      window: tuple[float, float] = _FIT_WINDOW) -> tuple[FitResult, FitResult]:
    """Order-parameter and susceptibility exponents from a sweep.

    ``beta``: slope of ``log m`` vs ``log (alpha - alpha_c)/alpha_c`` above
    the transition.  ``gamma``: magnitude of the divergence of ``chi = 1/(4
    c1)`` below it (the returned ``exponent`` field holds gamma itself, i.e.
    minus the raw log-log slope).  Both fits use rows whose reduced coupling
    falls inside ``window``.
    """
    lo, hi = window
    red = (table.alphas - alpha_c) / alpha_c

    above = (red >= lo) & (red <= hi) & (table.m > 0.0) & np.isfinite(table.m)
    if np.count_nonzero(above) < 3:
        raise DomainError("extract_exponents: too few localized rows in fit window")
    beta = fit_power_law(red[above], table.m[above])

    below = (-red >= lo) & (-red <= hi) & (table.c1 > 0.0) & np.isfinite(table.c1)
    if np.count_nonzero(below) < 3:
        raise DomainError("extract_exponents: too few delocalized rows in fit window")
    chi = 1.0 / (4.0 * table.c1[below])
    raw = fit_power_law(-red[below], chi)
    gamma = FitResult(exponent=-raw.exponent, prefactor=raw.prefactor,
                      residual=raw.residual)
    return beta, gamma


def phase_diagram(s_grid: Sequence[float], delta: float,
                  omega_c_list: Sequence[float],
                  functional: str = "exact") -> list[dict]:
    """Critical couplings over a grid of (s, omega_c), rows independent.

    Each row carries both the numeric and closed-form values; per-point
    failures are recorded in the row instead of aborting the grid.
    """
    rows = []
    for s in s_grid:
        for wc in omega_c_list:
            row = {"s": float(s), "omega_c": float(wc),
                   "alpha_c_numeric": math.nan, "alpha_c_closed": math.nan,
                   "error": ""}
            try:
                row["alpha_c_closed"] = critical_coupling_closed(s, delta, wc)[0]
                row["alpha_c_numeric"] = critical_coupling_numeric(
                    s, delta, wc, functional)
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
