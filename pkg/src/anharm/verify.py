"""Cross-check of the polynomial path against the brute-force oracle."""

from __future__ import annotations

from dataclasses import dataclass

from anharm.errors import NoAdmissibleState
from anharm.model import OscillatorSpec
from anharm.oracle import OracleResult, oracle_minima
from anharm.stationary import convergence_ratios, solve_branches

MATCH_RTOL = 1e-8


@dataclass(frozen=True)
class OracleCheck:
    """Accepted polynomial minima paired with oracle minima that pass the same convergence filter."""

    pairs: list[tuple[int | None, float | None, float | None]]
    oracle: OracleResult
    rtol: float

    @property
    def discrepancies(self) -> list[float]:
        return [abs(o - p) / p if p is not None and o is not None else float("inf") for _, p, o in self.pairs]

    @property
    def verdict(self) -> str:
        return "match" if self.pairs and all(d <= self.rtol for d in self.discrepancies) else "mismatch"


def oracle_check(
    spec: OscillatorSpec,
    dp_lo: float | None = None,
    dp_hi: float | None = None,
    step: float | None = None,
    rtol: float = MATCH_RTOL,
) -> OracleCheck:
    accepted = [b for b in solve_branches(spec) if b.accepted]
    if not accepted:
        raise NoAdmissibleState()
    result = oracle_minima(spec, dp_lo, dp_hi, step)
    lo, hi = result.scan_range
    # the oracle only sees its window; branches outside it cannot be confirmed
    oracle_dps = [
        dp for dp, _ in result.minima if max(convergence_ratios(spec, dp), default=0.0) <= spec.eta
    ]
    pairs = []
    remaining = list(oracle_dps)
    for b in accepted:
        if not lo < b.dp_min < hi:
            pairs.append((b.index_j, b.dp_min, None))
            continue
        if remaining:
            nearest = min(remaining, key=lambda dp: abs(dp - b.dp_min))
            remaining.remove(nearest)
            pairs.append((b.index_j, b.dp_min, nearest))
        else:
            pairs.append((b.index_j, b.dp_min, None))
    pairs.extend((None, None, dp) for dp in remaining)
    return OracleCheck(pairs=pairs, oracle=result, rtol=rtol)
