"""Oscillator definition, unit system and the range-based energy function.

The energy of an oscillator whose coordinate and momentum are known only as
ranges ``dx`` and ``dp`` linked by ``dx * dp = n * hbar`` is

    E(dp) = dp**2 / (2 m) + sum_{i=2..N} a'_i / dp**i

with coefficients ``a'_i`` carrying units of energy * momentum**i.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from anharm.errors import SpecError

SPEC_KEYS = frozenset(
    {"order", "units", "hbar", "mass", "omega_har", "coeffs", "perturbation", "n_ref", "n_max", "eta"}
)


@dataclass(frozen=True)
class UnitSystem:
    """Action, mass and harmonic angular frequency; reduced units by default."""

    hbar: float = 1.0
    mass: float = 1.0
    omega_har: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega_har"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise SpecError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def k_har(self) -> float:
        return self.mass * self.omega_har**2

    @property
    def momentum_scale(self) -> float:
        """sqrt(m hbar omega_har), the harmonic momentum range at n = 1."""
        return math.sqrt(self.mass * self.hbar * self.omega_har)

    @property
    def energy_scale(self) -> float:
        return self.hbar * self.omega_har


def _freeze_coeffs(coeffs: Mapping | None, label: str) -> Mapping[int, float]:
    frozen = {}
    for key, value in (coeffs or {}).items():
        try:
            index = int(key)
        except (TypeError, ValueError):
            raise SpecError(f"{label} key {key!r} is not an integer power") from None
        if isinstance(key, float) and key != index:
            raise SpecError(f"{label} key {key!r} is not an integer power")
        value = float(value)
        if not math.isfinite(value):
            raise SpecError(f"{label}[{index}] is not finite")
        frozen[index] = value
    return MappingProxyType(dict(sorted(frozen.items())))


@dataclass(frozen=True)
class OscillatorSpec:
    """One oscillator problem.

    ``intrinsic_coeffs`` and ``perturbation_coeffs`` map the inverse power
    ``i`` of ``dp`` to its coefficient; the energy function always uses their
    sum. Coefficients are referred to quantum number ``n_ref``.
    """

    units: UnitSystem
    order: int
    intrinsic_coeffs: Mapping[int, float]
    perturbation_coeffs: Mapping[int, float] = field(default_factory=dict)
    n_ref: int = 1
    n_max: int = 10
    eta: float = 0.1

    def __post_init__(self):
        if isinstance(self.order, bool) or int(self.order) != self.order:
            raise SpecError(f"order must be an integer, got {self.order!r}")
        if self.order < 2:
            raise SpecError("order below quadratic")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "intrinsic_coeffs", _freeze_coeffs(self.intrinsic_coeffs, "coeffs"))
        object.__setattr__(
            self, "perturbation_coeffs", _freeze_coeffs(self.perturbation_coeffs, "perturbation")
        )
        for label, coeffs in (("coeffs", self.intrinsic_coeffs), ("perturbation", self.perturbation_coeffs)):
            for index in coeffs:
                if not 2 <= index <= self.order:
                    raise SpecError(f"{label} index {index} outside 2..{self.order}")
        if int(self.n_ref) != self.n_ref or self.n_ref < 1:
            raise SpecError(f"n_ref must be a positive integer, got {self.n_ref!r}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise SpecError(f"n_max must be a non-negative integer, got {self.n_max!r}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise SpecError(f"eta must be positive, got {self.eta!r}")
        if not self.coefficient(2) > 0:
            raise SpecError(f"quadratic coefficient must be positive after merge, got {self.coefficient(2)!r}")

    def coefficient(self, i: int) -> float:
        """Effective a'_i: intrinsic plus perturbation, absent keys count as zero."""
        return self.intrinsic_coeffs.get(i, 0.0) + self.perturbation_coeffs.get(i, 0.0)

    def effective_coeffs(self) -> dict[int, float]:
        return {i: self.coefficient(i) for i in range(2, self.order + 1)}

    def coeff_vector(self) -> np.ndarray:
        """Effective coefficients indexed by power, entries 0 and 1 unused."""
        vec = np.zeros(self.order + 1)
        for i in range(2, self.order + 1):
            vec[i] = self.coefficient(i)
        return vec

    def with_coefficient(self, i: int, value: float) -> "OscillatorSpec":
        """Copy with intrinsic a'_i replaced by ``value``."""
        coeffs = dict(self.intrinsic_coeffs)
        coeffs[i] = value
        return replace(self, intrinsic_coeffs=coeffs)

    def with_perturbation(self, delta: Mapping[int, float]) -> "OscillatorSpec":
        """Copy with ``delta`` added on top of the existing perturbation terms."""
        merged = dict(self.perturbation_coeffs)
        for key, value in _freeze_coeffs(delta, "delta").items():
            merged[key] = merged.get(key, 0.0) + value
        return replace(self, perturbation_coeffs=merged)

    def harmonic(self) -> "OscillatorSpec":
        """The quadratic-only oscillator with the same effective a'_2."""
        return replace(
            self, order=2, intrinsic_coeffs={2: self.coefficient(2)}, perturbation_coeffs={}
        )

    @property
    def spec_hash(self) -> str:
        payload = {
            "units": [self.units.hbar, self.units.mass, self.units.omega_har],
            "order": self.order,
            "coeffs": [[i, v.hex()] for i, v in self.intrinsic_coeffs.items()],
            "perturbation": [[i, v.hex()] for i, v in self.perturbation_coeffs.items()],
            "n_ref": self.n_ref,
            "eta": self.eta,
        }
        return hashlib.sha256(json.dumps(payload).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EnergySample:
    dp: float
    n: int
    value: float

    def dx(self, hbar: float = 1.0) -> float:
        """Coordinate range conjugate to ``dp``: n hbar / dp."""
        return self.n * hbar / self.dp


def harmonic_quadratic_coefficient(units: UnitSystem, n: int = 1) -> float:
    """m (n hbar omega_har)**2 / 2, the quadratic coefficient of the harmonic oscillator."""
    return units.mass * (n * units.hbar * units.omega_har) ** 2 / 2.0


def build_spec(config: Mapping) -> OscillatorSpec:
    """Validate a parsed key-value document and return an :class:`OscillatorSpec`.

    Recognised keys are listed in ``SPEC_KEYS``. When ``coeffs`` has no
    quadratic entry it is synthesised from the unit system at ``n_ref``.
    """
    unknown = set(config) - SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown spec key(s): {', '.join(sorted(unknown))}")
    if "order" not in config:
        raise SpecError("order missing")

    unit_fields = {}
    units_doc = config.get("units")
    if isinstance(units_doc, str):
        if units_doc != "reduced":
            raise SpecError(f"units must be 'reduced' or a mapping, got {units_doc!r}")
    elif isinstance(units_doc, Mapping):
        extra = set(units_doc) - {"hbar", "mass", "omega_har"}
        if extra:
            raise SpecError(f"unknown units key(s): {', '.join(sorted(extra))}")
        unit_fields.update(units_doc)
    elif units_doc is not None:
        raise SpecError("units must be 'reduced' or a mapping")
    for name in ("hbar", "mass", "omega_har"):
        if name in config:
            unit_fields[name] = config[name]
    try:
        units = UnitSystem(**{k: float(v) for k, v in unit_fields.items()})
    except (TypeError, ValueError) as exc:
        raise SpecError(f"invalid units: {exc}") from None

    coeffs = dict(_freeze_coeffs(config.get("coeffs"), "coeffs"))
    n_ref = config.get("n_ref", 1)
    if 2 not in coeffs:
        if units_doc is None and "omega_har" not in config:
            raise SpecError("need coeffs[2] or omega_har to fix the quadratic term")
        if not isinstance(n_ref, int) or n_ref < 1:
            raise SpecError(f"n_ref must be a positive integer, got {n_ref!r}")
        coeffs[2] = harmonic_quadratic_coefficient(units, n_ref)

    spec = OscillatorSpec(
        units=units,
        order=config["order"],
        intrinsic_coeffs=coeffs,
        perturbation_coeffs=config.get("perturbation") or {},
        n_ref=n_ref,
        n_max=config.get("n_max", 10),
        eta=float(config.get("eta", 0.1)),
    )
    for i in (3, 4):
        if i <= spec.order and spec.coefficient(i) > 0:
            warnings.warn(f"a'_{i} = {spec.coefficient(i):g} is positive; lattice softening expects it negative")
    return spec


def apply_n_scaling(spec: OscillatorSpec, n: int) -> OscillatorSpec:
    """Refer the coefficients to quantum number ``n``: a'_i -> a'_i (n/n_ref)**(i/2 + 1)."""
    if n < 1:
        raise SpecError(f"n must be >= 1, got {n}")
    if n == spec.n_ref:
        return spec
    ratio = n / spec.n_ref

    def scaled(coeffs):
        return {i: v * ratio ** (i / 2 + 1) for i, v in coeffs.items()}

    return replace(
        spec,
        intrinsic_coeffs=scaled(spec.intrinsic_coeffs),
        perturbation_coeffs=scaled(spec.perturbation_coeffs),
        n_ref=n,
    )


def energy_at(spec: OscillatorSpec, dp, n: int | None = None):
    """Evaluate E(dp) for scalar or array ``dp``.

    With ``n`` different from ``spec.n_ref`` the coefficients are first
    rescaled with :func:`apply_n_scaling`.
    """
    if n is not None and n != spec.n_ref:
        spec = apply_n_scaling(spec, n)
    dp_arr = np.asarray(dp, dtype=float)
    if np.any(~(dp_arr > 0)):
        raise SpecError("dp must be positive")
    inv = 1.0 / dp_arr
    value = dp_arr**2 / (2.0 * spec.units.mass)
    for i, a in spec.effective_coeffs().items():
        if a != 0.0:
            value = value + a * inv**i
    if np.ndim(value) == 0:
        return float(value)
    return value


def energy_sample(spec: OscillatorSpec, dp: float, n: int | None = None) -> EnergySample:
    n = spec.n_ref if n is None else n
    return EnergySample(dp=float(dp), n=n, value=energy_at(spec, dp, n))
