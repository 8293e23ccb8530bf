"""Overlap fidelity between purifications and the Bures cost.

Three evaluation modes: exact inner product (default everywhere), a
shot-sampled SWAP test (Bernoulli sampling of the ancilla outcome -- the
statistics of the hardware circuit without paying for 2m+1 qubits per
shot), and full simulation of the SWAP circuit, kept as a validation path
that must agree with the exact overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulator import (
    MAX_QUBITS,
    CircuitOp,
    SimulationError,
    StateVector,
    apply_ops,
    inner_product,
    register_probabilities,
)

SQRT_GUARD = 1e-12

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
# SWAP on (targets[0], targets[1]): local basis |t1 t0>
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


@dataclass(frozen=True)
class FidelityEstimate:
    """A fidelity value with its provenance."""

    value: float
    mode: str
    shots: int | None = None
    std_error: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "shots", "swap-circuit"):
            raise SimulationError(f"unknown fidelity mode {self.mode!r}")
        if self.mode in ("exact", "swap-circuit") and self.std_error is not None:
            raise SimulationError(f"{self.mode} estimates carry no std_error")


def overlap_fidelity(psi: StateVector, phi: StateVector) -> FidelityEstimate:
    """|<psi|phi>|^2, exactly."""
    value = abs(inner_product(psi, phi)) ** 2
    return FidelityEstimate(value=float(value), mode="exact")


def swap_test_sample(
    psi: StateVector, phi: StateVector, shots: int, rng_seed: int
) -> FidelityEstimate:
    """Shot-sampled SWAP test.

    Draws ``shots`` Bernoulli outcomes at the exact ancilla probability
    P0 = (1 + |<psi|phi>|^2)/2 and returns F_hat = 2 P0_hat - 1. The
    estimate is left unclamped (it can dip below zero by sampling noise);
    the reported standard error propagates the binomial error through the
    linear map.
    """
    if shots < 1:
        raise SimulationError("need at least one shot")
    p0 = 0.5 * (1.0 + abs(inner_product(psi, phi)) ** 2)
    p0 = min(p0, 1.0)
    rng = np.random.default_rng(rng_seed)
    hits = int(rng.binomial(shots, p0))
    p0_hat = hits / shots
    std_error = float(np.sqrt(4.0 * p0_hat * (1.0 - p0_hat) / shots))
    return FidelityEstimate(
        value=float(2.0 * p0_hat - 1.0), mode="shots", shots=shots, std_error=std_error
    )


def swap_circuit_fidelity(psi: StateVector, phi: StateVector) -> FidelityEstimate:
    """Run the (2m+1)-qubit SWAP circuit and read P0 exactly.

    Register layout: psi on qubits [0, m), phi on [m, 2m), ancilla on 2m.
    """
    if psi.num_qubits != phi.num_qubits:
        raise SimulationError("states have different register widths")
    m = psi.num_qubits
    if 2 * m + 1 > MAX_QUBITS:
        raise SimulationError("combined SWAP register exceeds simulator capacity")
    anc = 2 * m
    amps = np.kron(
        np.array([1.0, 0.0], dtype=np.complex128),
        np.kron(phi.amplitudes, psi.amplitudes),
    )
    state = StateVector(2 * m + 1, amps)
    ops = [CircuitOp("unitary", (anc,), matrix=_H)]
    ops += [
        CircuitOp(
            "controlled",
            (q, m + q),
            matrix=_SWAP,
            control_register=(anc,),
            control_value=1,
        )
        for q in range(m)
    ]
    ops.append(CircuitOp("unitary", (anc,), matrix=_H))
    state = apply_ops(state, ops)
    p0 = float(register_probabilities(state, (anc,))[0])
    return FidelityEstimate(value=2.0 * p0 - 1.0, mode="swap-circuit")


def bures_cost(f: FidelityEstimate) -> float:
    """Squared Bures distance 2(1 - sqrt(F)); the figures plot half of this."""
    return 2.0 * (1.0 - np.sqrt(max(0.0, f.value)))


def r_half(fidelity_value: float) -> float:
    """1 - sqrt(F), the reported quantity."""
    return 1.0 - np.sqrt(max(0.0, fidelity_value))
