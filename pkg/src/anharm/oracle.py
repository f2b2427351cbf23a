"""Brute-force minima of the energy function, independent of the polynomial path.

Energies are compared through the divided difference

    (E(x) - E(y)) / (x - y) = (x + y) / 2m - sum_i a'_i h_{i-1}(1/x, 1/y) / (x y)

where h_k(u, v) = u**k + u**(k-1) v + ... + v**k. Every term of h is
positive, so the sign of E(x) - E(y) is resolved far below the roundoff
floor of subtracting two energies, and golden-section search can localise a
minimum to near machine precision instead of sqrt(eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from anharm.model import OscillatorSpec, energy_at

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_WINDOW = (0.01, 100.0)
DEFAULT_POINTS = 1_000_000


@dataclass(frozen=True)
class OracleResult:
    minima: list[tuple[float, float]]
    scan_range: tuple[float, float]
    scan_step: float
    no_minimum: bool = field(default=False)

    @property
    def positions(self) -> list[float]:
        return [dp for dp, _ in self.minima]


def divided_difference(spec: OscillatorSpec, x, y):
    """(E(x) - E(y)) / (x - y) without cancellation; vectorised over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u, v = 1.0 / x, 1.0 / y
    value = (x + y) / (2.0 * spec.units.mass)
    # h holds h_{i-1}(u, v); u_pow holds u**(i-1)
    h = np.ones_like(u)
    u_pow = np.ones_like(u)
    coeffs = spec.effective_coeffs()
    for i in range(2, spec.order + 1):
        u_pow = u_pow * u
        h = h * v + u_pow
        if coeffs[i] != 0.0:
            value = value - coeffs[i] * h * u * v
    return value


def _energy_less(spec, x1, x2) -> bool:
    """True when E(x1) < E(x2)."""
    d = float(divided_difference(spec, x1, x2))
    return d * (x1 - x2) < 0.0


def golden_section(spec: OscillatorSpec, lo: float, hi: float, rtol: float = 1e-13, max_iter: int = 300) -> float:
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b)):
            break
        if _energy_less(spec, c, d):
            b, d = d, c
            c = b - INVPHI * (b - a)
        else:
            a, c = c, d
            d = a + INVPHI * (b - a)
    return 0.5 * (a + b)


def oracle_minima(
    spec: OscillatorSpec,
    dp_lo: float | None = None,
    dp_hi: float | None = None,
    step: float | None = None,
) -> OracleResult:
    """Scan E on a uniform grid over [dp_lo, dp_hi] and refine every strict local minimum.

    Defaults: window (0.01, 100] times sqrt(m hbar omega_har) with 10**6
    grid intervals.
    """
    scale = spec.units.momentum_scale
    dp_lo = DEFAULT_WINDOW[0] * scale if dp_lo is None else float(dp_lo)
    dp_hi = DEFAULT_WINDOW[1] * scale if dp_hi is None else float(dp_hi)
    if not 0 < dp_lo < dp_hi:
        raise ValueError("need 0 < dp_lo < dp_hi")
    if step is None:
        step = (dp_hi - dp_lo) / DEFAULT_POINTS
    if not 0 < step <= (dp_hi - dp_lo) / 1000 * (1 + 1e-12):
        raise ValueError("step must be positive and at most (dp_hi - dp_lo) / 1000")

    count = int(math.floor((dp_hi - dp_lo) / step + 1e-9))
    grid = dp_lo + step * np.arange(count + 1)
    slope = divided_difference(spec, grid[:-1], grid[1:])
    # grid[k] is a strict local minimum when E falls into it and rises out of it
    interior = np.flatnonzero((slope[:-1] < 0.0) & (slope[1:] > 0.0)) + 1

    minima = []
    for k in interior:
        dp = golden_section(spec, grid[k - 1], grid[k + 1])
        minima.append((float(dp), float(energy_at(spec, dp))))
    return OracleResult(
        minima=minima,
        scan_range=(dp_lo, dp_hi),
        scan_step=float(step),
        no_minimum=not minima,
    )
