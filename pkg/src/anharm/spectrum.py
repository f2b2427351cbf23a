"""From accepted stationary points to frequencies and level ladders.

Each accepted branch j carries dimensionless coefficients
a_i = m a'_i / dp_min**(i+2), which satisfy sum_i i a_i = 1 at any stationary
point. From them:

    w**2     = (1 - sum_{i>=3} i a_i) ** -1/2 = (2 a_2) ** -1/2
    q        = 1 + sum_{i>=3} (1 - i/2) a_i
    omega_an = w**2 omega_har
    E(j, n)  = n hbar omega_an(j) + w0**2 hbar omega_har / (2 q0)

where the zero-point term uses the branch with the smallest dp_min.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from anharm.errors import BranchRejected, ConsistencyError, NoAdmissibleState
from anharm.model import OscillatorSpec, UnitSystem, apply_n_scaling
from anharm.stationary import (
    IMAGINARY_FREQUENCY,
    NONPOSITIVE_NORMALIZATION,
    Branch,
    solve_branches,
)

SUM_RULE_TOL = 1e-10
ZERO_POINT_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class BranchParameters:
    a: dict[int, float]
    q: float
    w: float
    omega_an: float
    a_ddprime: dict[int, float]
    k_an: float

    @property
    def w2(self) -> float:
        return self.w * self.w

    @property
    def w2_from_quadratic(self) -> float:
        """(2 a_2) ** -1/2, the same quantity reached through the quadratic coefficient."""
        return (2.0 * self.a[2]) ** -0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"] = {str(i): v for i, v in self.a.items()}
        d["a_ddprime"] = {str(i): v for i, v in self.a_ddprime.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BranchParameters":
        d = dict(d)
        d["a"] = {int(i): float(v) for i, v in d["a"].items()}
        d["a_ddprime"] = {int(i): float(v) for i, v in d["a_ddprime"].items()}
        return cls(**d)


def dimensionless_coefficients(spec: OscillatorSpec, branch: Branch) -> dict[int, float]:
    """a_i = m a'_i / dp_min**(i+2); raises ConsistencyError if sum i a_i strays from 1."""
    m = spec.units.mass
    dp = branch.dp_min
    a = {i: m * c / dp ** (i + 2) for i, c in spec.effective_coeffs().items()}
    total = sum(i * v for i, v in a.items())
    if abs(total - 1.0) > SUM_RULE_TOL:
        raise ConsistencyError(f"sum rule violated at dp_min={dp!r}: sum i a_i = {total!r}")
    return a


def branch_parameters(a: dict[int, float], units: UnitSystem = UnitSystem()) -> BranchParameters:
    total = sum(i * v for i, v in a.items())
    if abs(total - 1.0) > SUM_RULE_TOL:
        raise ConsistencyError(f"sum i a_i = {total!r}, expected 1")
    higher = sum(i * v for i, v in a.items() if i >= 3)
    if higher >= 1.0:
        raise BranchRejected(IMAGINARY_FREQUENCY, "sum_{i>=3} i a_i >= 1, frequency factor not real")
    w2 = (1.0 - higher) ** -0.5
    w = math.sqrt(w2)
    q = 1.0 + sum((1.0 - i / 2.0) * v for i, v in a.items() if i >= 3)
    if q <= 0.0:
        raise BranchRejected(NONPOSITIVE_NORMALIZATION, f"q = {q!r} <= 0")
    omega_an = w2 * units.omega_har
    return BranchParameters(
        a=dict(a),
        q=q,
        w=w,
        omega_an=omega_an,
        a_ddprime={i: v * w ** (i + 2) for i, v in a.items()},
        k_an=units.mass * omega_an**2,
    )


@dataclass(frozen=True)
class SpectrumTable:
    """Level ladders of the retained branches.

    ``levels`` and ``dp_an`` are keyed by (j, n) for n = 0..n_max; at n = 0
    ``dp_an`` holds the zero-point range of branch (0). ``dx_min`` covers
    n >= 1 only, its n = 0 counterpart is ``dx_0``. ``dt`` is keyed by n >= 1.
    """

    branches: list[tuple[Branch, BranchParameters]]
    zero_point_branch: int
    levels: dict[tuple[int, int], float]
    dp_an: dict[tuple[int, int], float]
    dx_min: dict[tuple[int, int], float]
    dx_0: float
    dt: dict[int, float]
    units: UnitSystem
    n_max: int

    @property
    def labels(self) -> list[int]:
        return [b.index_j for b, _ in self.branches]

    def params(self, j: int) -> BranchParameters:
        for b, p in self.branches:
            if b.index_j == j:
                return p
        raise KeyError(j)

    def branch(self, j: int) -> Branch:
        for b, _ in self.branches:
            if b.index_j == j:
                return b
        raise KeyError(j)

    @property
    def zero_point_energy(self) -> float:
        return self.levels[(self.zero_point_branch, 0)]

    def ladder(self, j: int) -> list[float]:
        return [self.levels[(j, n)] for n in range(self.n_max + 1)]

    def to_dict(self) -> dict:
        return {
            "units": asdict(self.units),
            "n_max": self.n_max,
            "zero_point_branch": self.zero_point_branch,
            "branches": [{"branch": asdict(b), "parameters": p.to_dict()} for b, p in self.branches],
            "levels": [[j, n, v] for (j, n), v in sorted(self.levels.items())],
            "dp_an": [[j, n, v] for (j, n), v in sorted(self.dp_an.items())],
            "dx_min": [[j, n, v] for (j, n), v in sorted(self.dx_min.items())],
            "dx_0": self.dx_0,
            "dt": [[n, v] for n, v in sorted(self.dt.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumTable":
        branches = []
        for entry in d["branches"]:
            b = dict(entry["branch"])
            b["convergence_ratios"] = tuple(b["convergence_ratios"])
            branches.append((Branch(**b), BranchParameters.from_dict(entry["parameters"])))
        return cls(
            branches=branches,
            zero_point_branch=int(d["zero_point_branch"]),
            levels={(int(j), int(n)): float(v) for j, n, v in d["levels"]},
            dp_an={(int(j), int(n)): float(v) for j, n, v in d["dp_an"]},
            dx_min={(int(j), int(n)): float(v) for j, n, v in d["dx_min"]},
            dx_0=float(d["dx_0"]),
            dt={int(n): float(v) for n, v in d["dt"]},
            units=UnitSystem(**d["units"]),
            n_max=int(d["n_max"]),
        )


def _zero_point_label(pairs) -> int:
    smallest = min(b.dp_min for b, _ in pairs)
    tied = [(p.omega_an, b.index_j) for b, p in pairs if b.dp_min - smallest <= ZERO_POINT_TIE_RTOL * smallest]
    return min(tied)[1]


def energy_levels(spec: OscillatorSpec, params_by_branch, branches) -> SpectrumTable:
    """Assemble the ladders of the accepted branches, paired positionally with their parameters."""
    pairs = [(b, p) for b, p in zip(branches, params_by_branch) if b.accepted and p is not None]
    if not pairs:
        raise NoAdmissibleState()
    pairs.sort(key=lambda bp: bp[0].dp_min)
    units = spec.units
    hbar, m, omega = units.hbar, units.mass, units.omega_har

    j0 = _zero_point_label(pairs)
    p0 = next(p for b, p in pairs if b.index_j == j0)
    e0 = p0.w2 * hbar * omega / (2.0 * p0.q)
    dp_zero = p0.w * math.sqrt(m * hbar * omega)
    dx_0 = math.sqrt(hbar / (p0.omega_an * m))

    levels, dp_an, dx_min = {}, {}, {}
    for b, p in pairs:
        j = b.index_j
        for n in range(spec.n_max + 1):
            levels[(j, n)] = n * hbar * p.omega_an + e0
            if n == 0:
                dp_an[(j, 0)] = dp_zero
            else:
                dp_an[(j, n)] = p.w * math.sqrt(m * n * hbar * omega)
                dx_min[(j, n)] = math.sqrt(n * hbar / (p.omega_an * m))
    dt = {n: n * hbar / (n * hbar * omega) for n in range(1, spec.n_max + 1)}
    return SpectrumTable(
        branches=pairs,
        zero_point_branch=j0,
        levels=levels,
        dp_an=dp_an,
        dx_min=dx_min,
        dx_0=dx_0,
        dt=dt,
        units=units,
        n_max=spec.n_max,
    )


def solve(spec: OscillatorSpec) -> list[tuple[Branch, BranchParameters | None]]:
    """Every positive stationary point with its final classification.

    Parameters are attached wherever they can be formed; an accepted branch
    whose parameters are rejected is downgraded with the rejection reason.
    """
    out = []
    for branch in solve_branches(spec):
        try:
            params = branch_parameters(dimensionless_coefficients(spec, branch), spec.units)
        except BranchRejected as exc:
            if branch.accepted:
                branch = replace(branch, accepted=False, rejection_reason=exc.reason)
            params = None
        except ConsistencyError:
            if branch.accepted:
                raise
            params = None
        out.append((branch, params))
    return out


def spectrum(spec: OscillatorSpec) -> SpectrumTable:
    solved = solve(spec)
    return energy_levels(spec, [p for _, p in solved], [b for b, _ in solved])


def harmonic_reference(spec: OscillatorSpec) -> SpectrumTable:
    """Spectrum of the same oscillator with every a'_{i>=3} set to zero."""
    return spectrum(spec.harmonic())


def virial_split(spec: OscillatorSpec, n: int) -> tuple[float, float]:
    """Kinetic and potential terms of the harmonic energy at its minimum for quantum number n."""
    harmonic = apply_n_scaling(spec.harmonic(), n)
    (branch,) = [b for b in solve_branches(harmonic) if b.accepted]
    dp = branch.dp_min
    return dp**2 / (2.0 * spec.units.mass), harmonic.coefficient(2) / dp**2
