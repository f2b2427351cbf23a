"""Tables for each command and their CSV / JSON renderings.

CSV: header row, fixed column order, 12 significant digits, '\\n' line ends.
JSON: one object carrying ``schema_version`` 1; floats are written with
full round-trip precision.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict

from anharm.model import OscillatorSpec
from anharm.perturbation import PerturbationComparison, SweepTrace
from anharm.spectrum import SpectrumTable
from anharm.verify import OracleCheck

SCHEMA_VERSION = 1


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".12g")
    return str(value)


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(payload: dict) -> str:
    return json.dumps(_clean({"schema_version": SCHEMA_VERSION, **payload}), indent=2) + "\n"


def spec_dict(spec: OscillatorSpec) -> dict:
    return {
        "units": asdict(spec.units),
        "order": spec.order,
        "coeffs": {str(i): v for i, v in spec.intrinsic_coeffs.items()},
        "perturbation": {str(i): v for i, v in spec.perturbation_coeffs.items()},
        "n_ref": spec.n_ref,
        "n_max": spec.n_max,
        "eta": spec.eta,
    }


def solve_table(spec: OscillatorSpec, solved) -> tuple[list[str], list[dict]]:
    a_cols = [f"a_{i}" for i in range(2, spec.order + 1)]
    columns = [
        "j", "dp_min", "accepted", "rejection_reason", "second_derivative",
        "max_convergence_ratio", *a_cols, "q", "w", "w2", "omega_an",
    ]
    m = spec.units.mass
    rows = []
    for branch, params in solved:
        row = {
            "j": branch.index_j,
            "dp_min": branch.dp_min,
            "accepted": branch.accepted,
            "rejection_reason": branch.rejection_reason,
            "second_derivative": branch.second_derivative,
            "max_convergence_ratio": max(branch.convergence_ratios, default=None),
        }
        for i, c in spec.effective_coeffs().items():
            row[f"a_{i}"] = m * c / branch.dp_min ** (i + 2)
        if params is not None:
            row.update(q=params.q, w=params.w, w2=params.w2, omega_an=params.omega_an)
        rows.append(row)
    return columns, rows


def levels_table(table: SpectrumTable, harmonic: SpectrumTable) -> tuple[list[str], list[dict]]:
    """Ladder rows with harmonic normalisation R_E = q dE / dE_har and R_p = dp / dp_har."""
    columns = ["j", "n", "E", "dE", "dp_an", "dx", "E_har", "dp_har", "R_E", "R_p"]
    (jh,) = harmonic.labels
    e0 = table.zero_point_energy
    e0_har = harmonic.zero_point_energy
    q0 = table.params(table.zero_point_branch).q
    rows = []
    for j in table.labels:
        q = table.params(j).q
        for n in range(table.n_max + 1):
            energy = table.levels[(j, n)]
            e_har = harmonic.levels[(jh, n)]
            dp = table.dp_an[(j, n)]
            dp_har = harmonic.dp_an[(jh, n)]
            if n == 0:
                r_e = q0 * e0 / e0_har
                dx = table.dx_0
            else:
                r_e = q * (energy - e0) / (e_har - e0_har)
                dx = table.dx_min[(j, n)]
            rows.append(
                {
                    "j": j, "n": n, "E": energy, "dE": energy - e0, "dp_an": dp, "dx": dx,
                    "E_har": e_har, "dp_har": dp_har, "R_E": r_e, "R_p": dp / dp_har,
                }
            )
    return columns, rows


def sweep_table(trace: SweepTrace) -> tuple[list[str], list[dict]]:
    columns = [
        "record", "step", "value", "track", "j", "dp_min", "accepted",
        "rejection_reason", "omega_an", "q", "w", "unstable", "event", "detail",
    ]
    flagged = set(trace.instability_flags)
    rows = []
    for k, snaps in enumerate(trace.steps):
        for s in snaps:
            rows.append(
                {
                    "record": "branch", "step": k, "value": trace.values[k], "track": s.track,
                    "j": s.index_j, "dp_min": s.dp_min, "accepted": s.accepted,
                    "rejection_reason": s.rejection_reason, "omega_an": s.omega_an,
                    "q": s.q, "w": s.w, "unstable": k in flagged,
                }
            )
    for e in trace.events:
        rows.append(
            {"record": "event", "step": e.step, "value": trace.values[e.step], "track": e.track,
             "event": e.kind, "detail": e.detail}
        )
    return columns, rows


def sweep_payload(trace: SweepTrace) -> dict:
    return {
        "coeff_index": trace.coeff_index,
        "values": trace.values,
        "steps": [[asdict(s) for s in snaps] for snaps in trace.steps],
        "events": [asdict(e) for e in trace.events],
        "instability_flags": trace.instability_flags,
    }


def perturb_table(cmp: PerturbationComparison) -> tuple[list[str], list[dict]]:
    columns = [
        "outcome", "j_base", "j_pert", "n", "dp_base", "dp_pert", "d_dp",
        "omega_base", "omega_pert", "d_omega", "omega_sign", "E_base", "E_pert", "dE",
    ]
    rows = []
    for d in cmp.matches:
        for n, de in d.level_deltas.items():
            e_base = cmp.baseline.levels[(d.j_base, n)]
            rows.append(
                {
                    "outcome": cmp.outcome, "j_base": d.j_base, "j_pert": d.j_pert, "n": n,
                    "dp_base": d.dp_base, "dp_pert": d.dp_pert, "d_dp": d.d_dp,
                    "omega_base": d.omega_base, "omega_pert": d.omega_pert, "d_omega": d.d_omega,
                    "omega_sign": d.omega_sign, "E_base": e_base,
                    "E_pert": cmp.perturbed.levels[(d.j_pert, n)], "dE": de,
                }
            )
    if not rows:
        rows.append({"outcome": cmp.outcome})
    return columns, rows


def perturb_payload(cmp: PerturbationComparison) -> dict:
    return {
        "outcome": cmp.outcome,
        "baseline": cmp.baseline.to_dict(),
        "perturbed": None if cmp.perturbed is None else cmp.perturbed.to_dict(),
        "matches": [
            {**asdict(d), "d_dp": d.d_dp, "d_omega": d.d_omega, "omega_sign": d.omega_sign}
            for d in cmp.matches
        ],
        "unmatched_baseline": cmp.unmatched_baseline,
        "unmatched_perturbed": cmp.unmatched_perturbed,
    }


def oracle_table(check: OracleCheck) -> tuple[list[str], list[dict]]:
    columns = ["j", "dp_poly", "dp_oracle", "rel_discrepancy", "verdict"]
    rows = []
    for (j, p, o), d in zip(check.pairs, check.discrepancies):
        rows.append(
            {"j": j, "dp_poly": p, "dp_oracle": o, "rel_discrepancy": d, "verdict": check.verdict}
        )
    return columns, rows
