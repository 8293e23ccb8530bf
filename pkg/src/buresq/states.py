"""Benchmark density matrices and Kraus channels.

All constructors return validated :class:`~buresq.simulator.DensityMatrix`
values in the global little-endian ordering (qubit 0 = least significant
bit). For multi-qubit kets written left to right, the leftmost label is
qubit 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .simulator import DensityMatrix, SimulationError

KRAUS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving channel given by its Kraus operators."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus_ops)
        if not ops:
            raise SimulationError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise SimulationError("Kraus operators must share a square shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(d))) > KRAUS_TOL:
            raise SimulationError("Kraus operators do not resolve the identity")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]


def _check_noise(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise SimulationError(f"noise parameter {p} outside [0, 1]")
    return p


def ket(*qubit_states: Sequence[complex]) -> np.ndarray:
    """Product ket; argument ``i`` is the state of qubit ``i``."""
    out = np.array([1.0], dtype=np.complex128)
    for single in qubit_states:
        out = np.kron(np.asarray(single, dtype=np.complex128), out)
    return out


_Q0 = np.array([1.0, 0.0])
_Q1 = np.array([0.0, 1.0])
_PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)
_MINUS = np.array([1.0, -1.0]) / np.sqrt(2.0)


def bell_phi_plus() -> np.ndarray:
    return (ket(_Q0, _Q0) + ket(_Q1, _Q1)) / np.sqrt(2.0)


def werner(p: float) -> DensityMatrix:
    """Two-qubit mixture p |Phi+><Phi+| + (1-p) I/4."""
    p = _check_noise(p)
    phi = bell_phi_plus()
    rho = p * np.outer(phi, phi.conj()) + (1.0 - p) * np.eye(4) / 4.0
    return DensityMatrix(4, rho)


def dephasing_channel(p: float) -> KrausChannel:
    """Single-qubit dephasing: K0 = |0><0| + sqrt(1-p)|1><1|, K1 = sqrt(p)|1><1|."""
    p = _check_noise(p)
    k0 = np.diag([1.0, np.sqrt(1.0 - p)]).astype(np.complex128)
    k1 = np.diag([0.0, np.sqrt(p)]).astype(np.complex128)
    return KrausChannel((k0, k1))


def apply_channel(rho: DensityMatrix, channel: KrausChannel, target: int) -> DensityMatrix:
    """Apply a single-subsystem channel to one qubit of ``rho``."""
    n = rho.num_qubits
    if not 0 <= target < n:
        raise SimulationError("target qubit out of range")
    if channel.dim != 2:
        raise SimulationError("apply_channel embeds single-qubit channels only")
    low = np.eye(1 << target)
    high = np.eye(1 << (n - target - 1))
    out = np.zeros_like(rho.entries)
    for k in channel.kraus_ops:
        full = np.kron(high, np.kron(k, low))
        out += full @ rho.entries @ full.conj().T
    return DensityMatrix(rho.dim, out)


def linear_cluster3() -> np.ndarray:
    """Three-qubit linear cluster state (|+0+> + |-1->)/sqrt(2)."""
    return (ket(_PLUS, _Q0, _PLUS) + ket(_MINUS, _Q1, _MINUS)) / np.sqrt(2.0)


def dephased_cluster(p: float) -> DensityMatrix:
    """Linear cluster state after local dephasing of strength p on each qubit."""
    p = _check_noise(p)
    vec = linear_cluster3()
    rho = DensityMatrix(8, np.outer(vec, vec.conj()))
    chan = dephasing_channel(p)
    for q in range(3):
        rho = apply_channel(rho, chan, q)
    return rho


def bell_state(j: int, k: int) -> np.ndarray:
    """Bell state (|j,0> + e^{i pi k} |j+1 mod 2, 1>)/sqrt(2), first label = qubit 0."""
    basis = (_Q0, _Q1)
    vec = ket(basis[j], _Q0) + np.exp(1j * np.pi * k) * ket(basis[(j + 1) % 2], _Q1)
    return vec / np.sqrt(2.0)


def smolin() -> DensityMatrix:
    """Four-qubit Bell-correlated mixture (equal weight over the four Bell pairs)."""
    rho = np.zeros((16, 16), dtype=np.complex128)
    for j in (0, 1):
        for k in (0, 1):
            b = bell_state(j, k)
            pair = np.outer(b, b.conj())
            rho += np.kron(pair, pair) / 4.0
    return DensityMatrix(16, rho)


def noisy_smolin(p: float) -> DensityMatrix:
    """Smolin state mixed with white noise: (1-p) rho_S + p I/16."""
    p = _check_noise(p)
    rho = (1.0 - p) * smolin().entries + p * np.eye(16) / 16.0
    return DensityMatrix(16, rho)


PRESET_STATES = {
    "werner": werner,
    "cluster": dephased_cluster,
    "smolin": noisy_smolin,
}


def preset_state(name: str, p: float) -> DensityMatrix:
    try:
        builder = PRESET_STATES[name]
    except KeyError:
        raise SimulationError(
            f"unknown preset {name!r}; options: {sorted(PRESET_STATES)}"
        ) from None
    return builder(p)


def load_density_matrix(path: str | Path) -> DensityMatrix:
    """Load ``{"dim": d, "re": [[...]], "im": [[...]]}`` (row-major) from JSON."""
    with open(path) as fh:
        payload = json.load(fh)
    try:
        dim = int(payload["dim"])
        re = np.asarray(payload["re"], dtype=np.float64)
        im = np.asarray(payload["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise SimulationError(f"malformed density-matrix JSON: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise SimulationError("re/im blocks do not match the declared dim")
    return DensityMatrix(dim, re + 1j * im)


def dump_density_matrix(rho: DensityMatrix, path: str | Path) -> None:
    payload = {
        "dim": rho.dim,
        "re": rho.entries.real.tolist(),
        "im": rho.entries.imag.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
