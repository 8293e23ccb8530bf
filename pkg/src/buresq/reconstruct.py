"""Closest-free-state reconstruction from trained parameters.

After training, the parameters carry the full structure of the optimized
separable state: undoing the free unitary on the control register turns
the purification into sum_j sqrt(p_j) |psi_j^(1)> x ... x |j>_C, so the
mixture weights are the control-register outcome probabilities and each
conditional system state is an exact product. Everything is read off the
simulator amplitudes directly (no sampling), post-selected per control
value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .purify import (
    EIGENVALUE_CUTOFF,
    PurificationPlan,
    _conditional_system_state,
    _split_product,
    _undo_group,
    build_purification,
    classical_free_state,
)
from .simulator import DensityMatrix, SimulationError, register_probabilities


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Explicit product-state decomposition sum_j p_j |psi_j^(1)>...<...|."""

    probabilities: np.ndarray
    components: tuple[tuple[np.ndarray, ...], ...]  # per term, one vector per part

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if abs(float(probs.sum()) - 1.0) > 1e-9 or np.any(probs < 0):
            raise SimulationError("ensemble probabilities are not a distribution")
        for parts in self.components:
            for vec in parts:
                if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
                    raise SimulationError("ensemble component is not unit norm")
        object.__setattr__(self, "probabilities", probs)

    def __len__(self) -> int:
        return len(self.probabilities)


def reconstruct_free_state(
    plan: PurificationPlan, theta: Sequence[float]
) -> tuple[SeparableEnsemble, DensityMatrix]:
    """Extract the separable ensemble realized by ``theta`` and assemble it.

    Weights below 1e-12 are dropped (renormalizing the rest); each kept
    conditional state must be an exact product across the partition, which
    the construction guarantees up to float noise.
    """
    if plan.spec.family != "separable":
        raise SimulationError("reconstruction handles the separable family")
    state = build_purification(plan, theta)
    stripped = _undo_group(plan, theta, state, "u_c")
    probs = register_probabilities(stripped, plan.ancilla_qubits)
    kept_probs, components = [], []
    for value, p in enumerate(probs):
        if p < EIGENVALUE_CUTOFF:
            continue
        vec = _conditional_system_state(stripped, plan, value, p)
        components.append(tuple(_split_product(vec, plan.spec.partition)))
        kept_probs.append(float(p))
    kept = np.asarray(kept_probs)
    ensemble = SeparableEnsemble(kept / kept.sum(), tuple(components))
    matrix = classical_free_state(
        "separable", (ensemble.probabilities, ensemble.components)
    )
    return ensemble, matrix


def dump_ensemble(ensemble: SeparableEnsemble, path: str | Path) -> None:
    """Serialize as JSON: probabilities plus per-part re/im arrays."""
    payload = {
        "probabilities": ensemble.probabilities.tolist(),
        "components": [
            [{"re": v.real.tolist(), "im": v.imag.tolist()} for v in parts]
            for parts in ensemble.components
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_ensemble(path: str | Path) -> SeparableEnsemble:
    with open(path) as fh:
        payload = json.load(fh)
    components = tuple(
        tuple(
            np.asarray(part["re"], dtype=np.float64)
            + 1j * np.asarray(part["im"], dtype=np.float64)
            for part in parts
        )
        for parts in payload["components"]
    )
    return SeparableEnsemble(np.asarray(payload["probabilities"]), components)
