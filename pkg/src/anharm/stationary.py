"""Stationary points of the energy function.

Setting dE/ddp = 0 and multiplying through by m dp**(N+1) gives the monic
polynomial

    P(dp) = dp**(N+2) - m * sum_{i=2..N} i a'_i dp**(N-i)

whose positive real roots are the candidate momentum ranges. Roots are found
from the companion matrix of the polynomial written in the reduced variable
dp / sqrt(m hbar omega_har), then Newton-polished.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from anharm.errors import IllConditionedPolynomial
from anharm.model import OscillatorSpec

logger = logging.getLogger(__name__)

MAXIMUM_OR_SADDLE = "maximum_or_saddle"
CONVERGENCE_VIOLATION = "convergence_violation"
IMAGINARY_FREQUENCY = "imaginary_frequency"
NONPOSITIVE_NORMALIZATION = "nonpositive_normalization"

MAX_COEFF_SPREAD = 1e12
ROOT_RESIDUAL_TOL = 1e-12
DUPLICATE_RTOL = 1e-9
_IMAG_TOL = 1e-6
_CURVATURE_RTOL = 1e-9


@dataclass(frozen=True)
class StationarityPolynomial:
    """Coefficients are ordered highest power first, as ``numpy.polyval`` expects."""

    coefficients: tuple[float, ...]
    order: int
    mass: float = 1.0
    momentum_scale: float = 1.0
    spec_hash: str = ""

    def __post_init__(self):
        if len(self.coefficients) != self.order + 3:
            raise ValueError("stationarity polynomial must have degree order + 2")
        if self.coefficients[0] != 1.0:
            raise ValueError("stationarity polynomial must be monic")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def effective_degree(self) -> int:
        """Degree after dividing out the roots at dp = 0 left by vanishing high-order terms."""
        c = np.asarray(self.coefficients)
        nonzero = np.flatnonzero(c)
        return int(nonzero[-1])

    def __call__(self, dp):
        return np.polyval(self.coefficients, dp)

    def derivative(self, dp):
        return np.polyval(np.polyder(np.asarray(self.coefficients)), dp)

    def reduced_coefficients(self) -> np.ndarray:
        """Monic coefficients of P(s x) / s**(N+2) with s the momentum scale."""
        c = np.asarray(self.coefficients, dtype=float)
        s = self.momentum_scale
        powers = np.arange(self.degree, -1, -1)
        return c * s ** (powers - self.degree)

    def relative_residual(self, dp: float) -> float:
        """|P(x)| / max(1, |x|**(N+2)) in the reduced variable x."""
        x = dp / self.momentum_scale
        c = self.reduced_coefficients()
        return abs(np.polyval(c, x)) / max(1.0, abs(x) ** self.degree)


@dataclass(frozen=True)
class Branch:
    """One positive stationary point dp_min and its classification."""

    dp_min: float
    index_j: int
    second_derivative: float
    convergence_ratios: tuple[float, ...]
    accepted: bool
    rejection_reason: str | None = None

    @property
    def is_minimum(self) -> bool:
        return self.rejection_reason != MAXIMUM_OR_SADDLE


def build_polynomial(spec: OscillatorSpec) -> StationarityPolynomial:
    N = spec.order
    m = spec.units.mass
    coeffs = [0.0] * (N + 3)
    coeffs[0] = 1.0
    for i, a in spec.effective_coeffs().items():
        # dp**(N-i) sits at position (N+2) - (N-i) = i + 2 from the front
        coeffs[i + 2] = -m * i * a
    return StationarityPolynomial(
        coefficients=tuple(coeffs),
        order=N,
        mass=m,
        momentum_scale=spec.units.momentum_scale,
        spec_hash=spec.spec_hash,
    )


def _newton_polish(c: np.ndarray, x: float, max_iter: int = 100) -> float:
    dc = np.polyder(c)
    best_x, best_f = x, abs(np.polyval(c, x))
    for _ in range(max_iter):
        f = np.polyval(c, x)
        d = np.polyval(dc, x)
        if d == 0.0 or not np.isfinite(f):
            break
        step = f / d
        x_new = x - step
        if not np.isfinite(x_new):
            break
        f_new = abs(np.polyval(c, x_new))
        if f_new < best_f:
            best_x, best_f = x_new, f_new
        if abs(step) <= 2.0 * np.finfo(float).eps * abs(x_new) or f_new == 0.0:
            break
        x = x_new
    return best_x


def _bisect_sign_change(c: np.ndarray, x: float) -> float | None:
    """Fallback for a candidate whose Newton residual stalled: bisect a tight bracket."""
    lo, hi = x * (1 - 1e-6), x * (1 + 1e-6)
    flo, fhi = np.polyval(c, lo), np.polyval(c, hi)
    if flo == 0.0:
        return lo
    if np.sign(flo) == np.sign(fhi):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = np.polyval(c, mid)
        if fm == 0.0 or mid in (lo, hi):
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _same_root(c: np.ndarray, x: float, y: float) -> bool:
    """Two polished roots are one if they are within DUPLICATE_RTOL, or if the
    polynomial between them does not rise above its rounding noise (a multiple
    root split by roundoff)."""
    if abs(y - x) <= DUPLICATE_RTOL * max(abs(x), abs(y)):
        return True
    mid = 0.5 * (x + y)
    powers = mid ** np.arange(len(c) - 1, -1, -1)
    noise = 16.0 * np.finfo(float).eps * float(np.abs(c * powers).sum())
    return abs(float(np.polyval(c, mid))) <= noise


def find_positive_real_roots(poly: StationarityPolynomial) -> list[float]:
    """Positive real roots of ``poly``, polished, deduplicated and sorted ascending.

    Raises IllConditionedPolynomial when the nonzero reduced coefficients span
    more than ``MAX_COEFF_SPREAD``.
    """
    if poly.degree < 2:
        raise ValueError("degree must be at least 2")
    c = poly.reduced_coefficients()
    c = c[: poly.effective_degree + 1]
    if len(c) < 2:
        return []
    magnitudes = np.abs(c[c != 0.0])
    spread = magnitudes.max() / magnitudes.min()
    if spread > MAX_COEFF_SPREAD:
        raise IllConditionedPolynomial(
            f"coefficient magnitudes span {spread:.3g} (> {MAX_COEFF_SPREAD:.0e}); "
            "rescale the coefficients or the unit system"
        )

    degree = len(c) - 1
    candidates = np.roots(c)
    roots = []
    for z in candidates:
        if z.real <= 0 or abs(z.imag) > _IMAG_TOL * max(1.0, abs(z)):
            continue
        x = _newton_polish(c, float(z.real))
        if x <= 0:
            continue
        residual = abs(np.polyval(c, x)) / max(1.0, x**degree)
        if residual > ROOT_RESIDUAL_TOL:
            x = _bisect_sign_change(c, x)
            if x is None:
                # complex pair close to the real axis
                continue
            residual = abs(np.polyval(c, x)) / max(1.0, x**degree)
            if residual > ROOT_RESIDUAL_TOL:
                logger.warning("root %.12g kept with residual %.3g", x, residual)
        roots.append(x)

    roots.sort()
    unique = []
    for x in roots:
        if unique and _same_root(c, unique[-1], x):
            unique[-1] = 0.5 * (unique[-1] + x)
            continue
        unique.append(x)
    s = poly.momentum_scale
    return [float(x * s) for x in unique]


def second_derivative(spec: OscillatorSpec, dp: float) -> float:
    """d2E/ddp2 = 1/m + sum i (i+1) a'_i dp**-(i+2)."""
    value = 1.0 / spec.units.mass
    for i, a in spec.effective_coeffs().items():
        value += i * (i + 1) * a * dp ** -(i + 2)
    return value


def _curvature_scale(spec: OscillatorSpec, dp: float) -> float:
    scale = 1.0 / spec.units.mass
    for i, a in spec.effective_coeffs().items():
        scale += abs(i * (i + 1) * a * dp ** -(i + 2))
    return scale


def convergence_ratios(spec: OscillatorSpec, dp: float) -> tuple[float, ...]:
    """|a'_{i+1}| / |a'_i dp| for i = 2..N-1.

    A vanishing a'_i is skipped over: the next nonzero term is compared with
    the last nonzero lower term l through |a'_{i+1}| / (|a'_l| dp**(i+1-l)).
    """
    coeffs = spec.effective_coeffs()
    ratios = []
    last = 2
    for i in range(2, spec.order):
        if coeffs[i] != 0.0:
            last = i
        upper = abs(coeffs[i + 1])
        ratios.append(0.0 if upper == 0.0 else float(upper / (abs(coeffs[last]) * dp ** (i + 1 - last))))
    return tuple(ratios)


def classify_and_filter(spec: OscillatorSpec, roots) -> list[Branch]:
    """Turn stationary points into branches; rejected ones are kept with a reason."""
    branches = []
    for j, dp in enumerate(sorted(roots), start=1):
        d2 = second_derivative(spec, dp)
        ratios = convergence_ratios(spec, dp)
        if d2 <= _CURVATURE_RTOL * _curvature_scale(spec, dp):
            reason = MAXIMUM_OR_SADDLE
        elif ratios and max(ratios) > spec.eta:
            reason = CONVERGENCE_VIOLATION
        else:
            reason = None
        branches.append(
            Branch(
                dp_min=float(dp),
                index_j=j,
                second_derivative=float(d2),
                convergence_ratios=ratios,
                accepted=reason is None,
                rejection_reason=reason,
            )
        )
    return branches


def solve_branches(spec: OscillatorSpec) -> list[Branch]:
    """Polynomial, roots and classification in one call."""
    return classify_and_filter(spec, find_positive_real_roots(build_polynomial(spec)))
