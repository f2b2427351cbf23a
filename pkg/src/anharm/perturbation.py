"""Coefficient sensitivity, coefficient sweeps with branch tracking, and perturbed spectra."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from anharm.errors import DegenerateStationaryPoint, NoAdmissibleState
from anharm.model import OscillatorSpec
from anharm.spectrum import SpectrumTable, solve, spectrum
from anharm.stationary import Branch, build_polynomial, find_positive_real_roots

logger = logging.getLogger(__name__)

MATCH_LOG_TOL = 0.25
AMPLIFICATION = 10.0
FOLD_RTOL = 1e-6

BRANCH_BORN = "branch_born"
BRANCH_DIED = "branch_died"
FILTER_FLIP = "filter_flip"
NO_ADMISSIBLE_STATE = "no_admissible_state"
DESTABILIZED = "perturbation destabilizes oscillator"


@dataclass(frozen=True)
class SensitivityReport:
    branch_j: int
    coeff_index: int
    d_dpmin_d_aprime: float
    fd_check: float
    identity_residual: float

    @property
    def fd_discrepancy(self) -> float:
        diff = abs(self.d_dpmin_d_aprime - self.fd_check)
        return diff / abs(self.fd_check) if self.fd_check != 0.0 else diff


def match_nearest(old: list[float], new: list[float], log_tol: float = MATCH_LOG_TOL) -> list[tuple[int, int]]:
    """One-to-one greedy matching of positive values by |log ratio|, closest pairs first."""
    pairs = []
    for a, x in enumerate(old):
        for b, y in enumerate(new):
            dist = abs(math.log(y / x))
            if dist <= log_tol:
                pairs.append((dist, a, b))
    pairs.sort()
    used_old, used_new, matched = set(), set(), []
    for _, a, b in pairs:
        if a in used_old or b in used_new:
            continue
        used_old.add(a)
        used_new.add(b)
        matched.append((a, b))
    return sorted(matched)


def _nearest_root(spec: OscillatorSpec, dp: float) -> float:
    roots = find_positive_real_roots(build_polynomial(spec))
    if not roots:
        raise DegenerateStationaryPoint("stationary point vanished under a small coefficient change")
    return min(roots, key=lambda r: abs(math.log(r / dp)))


def _coefficient_step(spec: OscillatorSpec, i: int, dp: float, rel_step: float) -> float:
    # A step relative to a tiny a'_i would move dp_min by less than one ulp, so
    # the step is never smaller than rel_step times the size at which the i-th
    # term competes with the quadratic one at dp.
    reference = max(abs(spec.coefficient(i)), abs(spec.coefficient(2)) * dp ** (i - 2))
    return rel_step * reference


def _check_fold(spec: OscillatorSpec, dp: float) -> float:
    poly = build_polynomial(spec)
    c = np.asarray(poly.coefficients)
    powers = np.arange(poly.degree, 0, -1)
    terms = powers * c[:-1] * dp ** (powers - 1)
    slope = float(terms.sum())
    if abs(slope) <= FOLD_RTOL * float(np.abs(terms).sum()):
        raise DegenerateStationaryPoint("degenerate stationary point - sensitivity undefined")
    return slope


def identity_residual(spec: OscillatorSpec, branch: Branch, i: int, rel_step: float = 1e-3) -> float:
    """Residual of the first-order relation between a'_i, dp_min and a_i.

    With a finite increment d of a'_i, re-solve for dp_min and a_i and return
    d - a'_i ((i+2) d(dp_min)/dp_min + d(a_i)/a_i), scaled by the step's
    reference magnitude. The residual is second order in d.
    """
    dp = branch.dp_min
    delta = _coefficient_step(spec, i, dp, rel_step)
    reference = delta / rel_step
    a_prime = spec.coefficient(i)
    shifted = spec.with_coefficient(i, spec.intrinsic_coeffs.get(i, 0.0) + delta)
    dp_new = _nearest_root(shifted, dp)
    # a'_i d(a_i)/a_i = (a'_i + d)(dp/dp_new)**(i+2) - a'_i, which stays finite for a'_i = 0
    relative_a = (a_prime + delta) * (dp / dp_new) ** (i + 2) - a_prime
    predicted = a_prime * (i + 2) * (dp_new - dp) / dp + relative_a
    return (delta - predicted) / reference


def sensitivity(
    spec: OscillatorSpec,
    branch: Branch,
    i: int,
    rel_step: float = 1e-6,
    identity_step: float = 1e-3,
) -> SensitivityReport:
    """d(dp_min)/d(a'_i) by implicit differentiation of the stationarity polynomial.

    The finite-difference check re-solves the polynomial at a'_i +- h with
    h = rel_step * max(|a'_i|, |a'_2| dp_min**(i-2)).
    """
    if not 2 <= i <= spec.order:
        raise ValueError(f"coefficient index {i} outside 2..{spec.order}")
    dp = branch.dp_min
    slope = _check_fold(spec, dp)
    if not branch.accepted:
        raise ValueError("sensitivity requires an accepted branch")
    m = spec.units.mass
    analytic = m * i * dp ** (spec.order - i) / slope

    h = _coefficient_step(spec, i, dp, rel_step)
    base = spec.intrinsic_coeffs.get(i, 0.0)
    dp_plus = _nearest_root(spec.with_coefficient(i, base + h), dp)
    dp_minus = _nearest_root(spec.with_coefficient(i, base - h), dp)
    fd = (dp_plus - dp_minus) / (2.0 * h)

    return SensitivityReport(
        branch_j=branch.index_j,
        coeff_index=i,
        d_dpmin_d_aprime=float(analytic),
        fd_check=float(fd),
        identity_residual=float(identity_residual(spec, branch, i, identity_step)),
    )


@dataclass(frozen=True)
class BranchSnapshot:
    track: int
    index_j: int
    dp_min: float
    accepted: bool
    rejection_reason: str | None
    omega_an: float | None
    q: float | None
    w: float | None


@dataclass(frozen=True)
class SweepEvent:
    step: int
    kind: str
    track: int | None
    detail: str


@dataclass
class SweepTrace:
    """Minima of the energy function followed along a coefficient path.

    Every local minimum is tracked, accepted or not, so that crossing the
    convergence threshold shows up as a ``filter_flip`` rather than a death.
    """

    coeff_index: int
    values: list[float]
    steps: list[list[BranchSnapshot]] = field(default_factory=list)
    events: list[SweepEvent] = field(default_factory=list)
    instability_flags: list[int] = field(default_factory=list)

    def track(self, track_id: int) -> list[tuple[int, BranchSnapshot]]:
        return [(k, s) for k, snaps in enumerate(self.steps) for s in snaps if s.track == track_id]

    def events_of(self, kind: str) -> list[SweepEvent]:
        return [e for e in self.events if e.kind == kind]


def _snapshots(spec: OscillatorSpec) -> list[tuple[Branch, object]]:
    return [(b, p) for b, p in solve(spec) if b.is_minimum]


def sweep(
    spec: OscillatorSpec,
    i: int,
    lo: float,
    hi: float,
    steps: int,
    amplification: float = AMPLIFICATION,
    match_tol: float = MATCH_LOG_TOL,
) -> SweepTrace:
    """Solve the oscillator with intrinsic a'_i at ``steps`` evenly spaced values in [lo, hi]."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not 2 <= i <= spec.order:
        raise ValueError(f"coefficient index {i} outside 2..{spec.order}")
    values = [float(v) for v in np.linspace(lo, hi, steps)]
    trace = SweepTrace(coeff_index=i, values=values)

    prev: list[BranchSnapshot] = []
    next_track = 1
    flagged = set()
    for k, value in enumerate(values):
        found = _snapshots(spec.with_coefficient(i, value))
        matches = match_nearest([s.dp_min for s in prev], [b.dp_min for b, _ in found], match_tol) if k else []
        track_of = {new: prev[old].track for old, new in matches}
        snaps = []
        for idx, (b, p) in enumerate(found):
            if idx in track_of:
                track = track_of[idx]
            else:
                track = next_track
                next_track += 1
                if k:
                    trace.events.append(SweepEvent(k, BRANCH_BORN, track, f"dp_min={b.dp_min:.12g}"))
            snaps.append(
                BranchSnapshot(
                    track=track,
                    index_j=b.index_j,
                    dp_min=b.dp_min,
                    accepted=b.accepted,
                    rejection_reason=b.rejection_reason,
                    omega_an=None if p is None else p.omega_an,
                    q=None if p is None else p.q,
                    w=None if p is None else p.w,
                )
            )
        if k:
            matched_old = {old for old, _ in matches}
            for old, snap in enumerate(prev):
                if old not in matched_old:
                    trace.events.append(SweepEvent(k, BRANCH_DIED, snap.track, f"last dp_min={snap.dp_min:.12g}"))
            coeff_prev = values[k - 1]
            coeff_ref = max(abs(coeff_prev), abs(value))
            rel_coeff = abs(value - coeff_prev) / coeff_ref if coeff_ref > 0 else math.inf
            for old, new in matches:
                before, after = prev[old], snaps[new]
                if before.accepted != after.accepted:
                    trace.events.append(
                        SweepEvent(
                            k,
                            FILTER_FLIP,
                            after.track,
                            f"{'accepted' if after.accepted else after.rejection_reason}",
                        )
                    )
                rel_dp = abs(after.dp_min - before.dp_min) / before.dp_min
                if rel_dp > amplification * rel_coeff and k not in flagged:
                    flagged.add(k)
                    trace.instability_flags.append(k)
        if not any(s.accepted for s in snaps):
            trace.events.append(SweepEvent(k, NO_ADMISSIBLE_STATE, None, f"a'_{i}={value:.12g}"))
        trace.steps.append(snaps)
        prev = snaps
    return trace


@dataclass(frozen=True)
class BranchDelta:
    j_base: int
    j_pert: int
    dp_base: float
    dp_pert: float
    omega_base: float
    omega_pert: float
    level_deltas: dict[int, float]
    a_deltas: dict[int, float]

    @property
    def d_dp(self) -> float:
        return self.dp_pert - self.dp_base

    @property
    def d_omega(self) -> float:
        return self.omega_pert - self.omega_base

    @property
    def omega_sign(self) -> int:
        return int(np.sign(self.d_omega))


@dataclass(frozen=True)
class PerturbationComparison:
    baseline: SpectrumTable
    perturbed: SpectrumTable | None
    matches: list[BranchDelta]
    unmatched_baseline: list[int]
    unmatched_perturbed: list[int]
    outcome: str


def perturbed_compare(spec: OscillatorSpec, delta, match_tol: float = MATCH_LOG_TOL) -> PerturbationComparison:
    """Solve ``spec`` and ``spec`` with ``delta`` added to its perturbation terms, branch by branch."""
    baseline = spectrum(spec)
    merged = spec.with_perturbation(delta)
    try:
        perturbed = spectrum(merged)
    except NoAdmissibleState:
        logger.info("perturbed oscillator has no admissible branch")
        return PerturbationComparison(baseline, None, [], baseline.labels, [], DESTABILIZED)

    base_pairs, pert_pairs = baseline.branches, perturbed.branches
    matches = match_nearest([b.dp_min for b, _ in base_pairs], [b.dp_min for b, _ in pert_pairs], match_tol)
    deltas = []
    for old, new in matches:
        (bb, bp), (pb, pp) = base_pairs[old], pert_pairs[new]
        deltas.append(
            BranchDelta(
                j_base=bb.index_j,
                j_pert=pb.index_j,
                dp_base=bb.dp_min,
                dp_pert=pb.dp_min,
                omega_base=bp.omega_an,
                omega_pert=pp.omega_an,
                level_deltas={
                    n: perturbed.levels[(pb.index_j, n)] - baseline.levels[(bb.index_j, n)]
                    for n in range(spec.n_max + 1)
                },
                a_deltas={i: pp.a[i] - bp.a[i] for i in bp.a},
            )
        )
    matched_old = {o for o, _ in matches}
    matched_new = {n for _, n in matches}
    return PerturbationComparison(
        baseline=baseline,
        perturbed=perturbed,
        matches=deltas,
        unmatched_baseline=[b.index_j for k, (b, _) in enumerate(base_pairs) if k not in matched_old],
        unmatched_perturbed=[b.index_j for k, (b, _) in enumerate(pert_pairs) if k not in matched_new],
        outcome="ok",
    )
