"""Dense statevector engine.

Conventions used throughout the package:

* Registers are little-endian: qubit 0 is the least significant bit of the
  basis index, so basis state ``|b>`` stores the bit of qubit ``q`` at
  ``(b >> q) & 1``.
* Amplitudes live in a flat, contiguous ``complex128`` array of length
  ``2**num_qubits``.
* Operations are pure: the input state is never mutated. Hot loops that
  need in-place updates use the private ``_apply_*_inplace`` helpers on
  buffers they own.

Controlled blocks are applied by slicing out the amplitudes whose control
register matches the asserted value and transforming only that slice; the
full ``2^m x 2^m`` matrix is never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_FLOOR = -1e-9

MAX_QUBITS = 24


class SimulationError(ValueError):
    """Raised when an operation violates a simulator contract."""


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm pure state on ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise SimulationError("need at least one qubit")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise SimulationError(
                f"expected {1 << self.num_qubits} amplitudes, got {amps.shape}"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise SimulationError(f"state norm**2 = {norm_sq!r} is not 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, trace-one matrix on a power-of-two dimension."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        if self.dim < 2 or self.dim & (self.dim - 1):
            raise SimulationError(f"dim {self.dim} is not a power of two >= 2")
        mat = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if mat.shape != (self.dim, self.dim):
            raise SimulationError(f"expected {self.dim}x{self.dim} matrix")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise SimulationError("matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
            raise SimulationError(f"trace {np.trace(mat)!r} is not 1")
        if float(np.linalg.eigvalsh(mat)[0]) < EIG_FLOOR:
            raise SimulationError("matrix has a significantly negative eigenvalue")
        object.__setattr__(self, "entries", mat)

    @property
    def num_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.entries)


@dataclass(frozen=True, eq=False)
class CircuitOp:
    """One bound circuit element.

    kind is one of:

    * ``"unitary"``   -- ``matrix`` applied to ``targets``
    * ``"controlled"`` -- ``matrix`` applied to ``targets`` on the slice where
      ``control_register`` reads ``control_value``
    * ``"shift"``     -- basis shift ``X(s)|k> = |(k+s) mod d>`` on the target
      register, optionally conditioned on a control value

    ``targets[0]`` holds the least significant bit of the op-local index.
    """

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = None
    control_register: tuple[int, ...] = ()
    control_value: int = 0
    shift: int = 0

    def __post_init__(self):
        if self.kind not in ("unitary", "controlled", "shift"):
            raise SimulationError(f"unknown op kind {self.kind!r}")
        targets = tuple(int(q) for q in self.targets)
        control = tuple(int(q) for q in self.control_register)
        if len(set(targets)) != len(targets):
            raise SimulationError("duplicate target qubits")
        if set(targets) & set(control):
            raise SimulationError("control register overlaps targets")
        if self.kind == "controlled" and not control:
            raise SimulationError("controlled op needs a control register")
        if control and not 0 <= self.control_value < (1 << len(control)):
            raise SimulationError("control value out of register range")
        if self.kind == "shift":
            if self.matrix is not None:
                raise SimulationError("shift ops carry no matrix")
            object.__setattr__(self, "shift", int(self.shift) % (1 << len(targets)))
        else:
            mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
            k = len(targets)
            if mat.shape != (1 << k, 1 << k):
                raise SimulationError("matrix shape does not match target count")
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(1 << k)))
            if err > UNITARY_TOL:
                raise SimulationError(f"matrix is not unitary (defect {err:.2e})")
            object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "control_register", control)


def op_index_array(
    num_qubits: int,
    targets: Sequence[int],
    control_register: Sequence[int] = (),
    control_value: int = 0,
) -> np.ndarray:
    """Global indices of the amplitudes an op touches.

    Returns an ``(2**k, batch)`` integer array: row ``l`` lists, for every
    assignment of the untouched qubits, the global index whose target bits
    spell ``l`` (``targets[0]`` = LSB) and whose control bits spell
    ``control_value``.
    """
    targets = tuple(targets)
    control = tuple(control_register)
    used = set(targets) | set(control)
    if max(used, default=0) >= num_qubits or min(used, default=0) < 0:
        raise SimulationError("qubit index out of range")
    rest = [q for q in range(num_qubits) if q not in used]

    loc = np.arange(1 << len(targets), dtype=np.intp)
    base_t = np.zeros(1 << len(targets), dtype=np.intp)
    for i, q in enumerate(targets):
        base_t |= ((loc >> i) & 1) << q

    bat = np.arange(1 << len(rest), dtype=np.intp)
    base_r = np.zeros(1 << len(rest), dtype=np.intp)
    for i, q in enumerate(rest):
        base_r |= ((bat >> i) & 1) << q

    base_c = 0
    for i, q in enumerate(control):
        base_c |= ((control_value >> i) & 1) << q

    return base_t[:, None] | base_r[None, :] | base_c


def _apply_matrix_inplace(amps: np.ndarray, matrix: np.ndarray, idx: np.ndarray) -> None:
    amps[idx] = matrix @ amps[idx]


def _apply_shift_inplace(amps: np.ndarray, shift: int, idx: np.ndarray) -> None:
    amps[idx] = np.roll(amps[idx], shift, axis=0)


def _op_indices(num_qubits: int, op: CircuitOp) -> np.ndarray:
    return op_index_array(num_qubits, op.targets, op.control_register, op.control_value)


def _apply_op_inplace(amps: np.ndarray, op: CircuitOp, idx: np.ndarray) -> None:
    if op.kind == "shift":
        _apply_shift_inplace(amps, op.shift, idx)
    else:
        _apply_matrix_inplace(amps, op.matrix, idx)


def apply_op(state: StateVector, op: CircuitOp) -> StateVector:
    """Apply one bound op, embedding it on the full register."""
    used = set(op.targets) | set(op.control_register)
    if used and max(used) >= state.num_qubits:
        raise SimulationError("op addresses a qubit outside the register")
    amps = state.amplitudes.copy()
    _apply_op_inplace(amps, op, _op_indices(state.num_qubits, op))
    return StateVector(state.num_qubits, amps)


def apply_ops(state: StateVector, ops: Iterable[CircuitOp]) -> StateVector:
    amps = state.amplitudes.copy()
    for op in ops:
        used = set(op.targets) | set(op.control_register)
        if used and max(used) >= state.num_qubits:
            raise SimulationError("op addresses a qubit outside the register")
        _apply_op_inplace(amps, op, _op_indices(state.num_qubits, op))
    return StateVector(state.num_qubits, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b> with the left argument conjugated."""
    if a.num_qubits != b.num_qubits:
        raise SimulationError("states have different register widths")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep``.

    ``keep[i]`` becomes bit ``i`` of the reduced index, so passing an
    ascending list preserves the global ordering.
    """
    keep = tuple(keep)
    if not keep:
        raise SimulationError("keep list is empty")
    if len(set(keep)) != len(keep):
        raise SimulationError("keep list has duplicates")
    if max(keep) >= state.num_qubits or min(keep) < 0:
        raise SimulationError("keep index out of range")
    idx = op_index_array(state.num_qubits, keep)
    block = state.amplitudes[idx]
    rho = block @ block.conj().T
    return DensityMatrix(1 << len(keep), rho)


def register_probabilities(state: StateVector, register: Sequence[int]) -> np.ndarray:
    """Marginal outcome probabilities of a computational-basis readout."""
    register = tuple(register)
    if not register:
        raise SimulationError("register is empty")
    if len(set(register)) != len(register):
        raise SimulationError("register has duplicates")
    if max(register) >= state.num_qubits or min(register) < 0:
        raise SimulationError("register index out of range")
    idx = op_index_array(state.num_qubits, register)
    probs = np.sum(np.abs(state.amplitudes[idx]) ** 2, axis=1)
    return probs
