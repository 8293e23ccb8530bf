"""Parameterized circuit families.

Three building blocks:

* ``build_vc`` -- entangler layers: one R_Y per qubit followed by a CNOT
  chain on neighboring qubits (open chain). Real matrices throughout, so a
  real input state stays real.
* ``build_uc`` -- expressive layers: a Z-Y-Z general rotation per qubit,
  then a 3-parameter controlled general rotation for every ordered pair
  (i < j, control on i), pairs in lexicographic order.
* ``build_arbitrary_unitary`` -- a single op exp(-i sum_k theta_k P_k) over
  every non-identity Pauli word, surjective onto SU(2^n). Used as the
  fully-expressive benchmark block; dense-feasible up to 6 qubits.

Circuits are immutable ``ParamCircuit`` values; ``bind`` turns them into
concrete :class:`~buresq.simulator.CircuitOp` lists and validates unitarity
once per bind.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .simulator import CircuitOp, SimulationError

ARBITRARY_U_MAX_QUBITS = 6

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class GateSpec:
    """One gate slot in a circuit: structure plus parameter-slot references.

    kind is one of ``ry`` (1 slot), ``rot`` (3 slots, Z-Y-Z Euler),
    ``fixed`` (0 slots, constant matrix), ``pauli_exp`` (4^k - 1 slots), or
    ``shift`` (0 slots, basis shift). Any kind may carry a control register
    with an asserted value.
    """

    kind: str
    targets: tuple[int, ...]
    slots: tuple[int, ...] = ()
    control_register: tuple[int, ...] = ()
    control_value: int = 0
    matrix: np.ndarray | None = None
    shift: int = 0

    def __post_init__(self):
        expected = {
            "ry": 1,
            "rot": 3,
            "fixed": 0,
            "shift": 0,
            "pauli_exp": (1 << (2 * len(self.targets))) - 1,
        }
        if self.kind not in expected:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        if len(self.slots) != expected[self.kind]:
            raise SimulationError(
                f"{self.kind} gate takes {expected[self.kind]} slots, got {len(self.slots)}"
            )


@dataclass(frozen=True, eq=False)
class ParamCircuit:
    """Ordered gate sequence with parameter-slot references."""

    num_qubits: int
    specs: tuple[GateSpec, ...]
    num_params: int

    def __post_init__(self):
        seen: set[int] = set()
        for spec in self.specs:
            for s in spec.slots:
                if not 0 <= s < self.num_params:
                    raise SimulationError(f"slot {s} outside [0, {self.num_params})")
                seen.add(s)
            for q in spec.targets + spec.control_register:
                if not 0 <= q < self.num_qubits:
                    raise SimulationError(f"qubit {q} outside register")
        if seen != set(range(self.num_params)):
            raise SimulationError("some parameter slots are never referenced")


@dataclass(frozen=True)
class AnsatzConfig:
    """Layer counts for the variational blocks."""

    l1: int = 1
    l2: int = 1
    use_arbitrary_u: bool = False

    def __post_init__(self):
        if self.l1 < 1:
            raise SimulationError("l1 must be >= 1")
        if self.l2 < 0:
            raise SimulationError("l2 must be >= 0")


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def ry_deriv(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return 0.5 * np.array([[-s, -c], [c, -s]], dtype=np.complex128)


def rz_matrix(alpha: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * alpha), 0.0], [0.0, np.exp(0.5j * alpha)]],
        dtype=np.complex128,
    )


def rot_matrix(a: float, b: float, c: float) -> np.ndarray:
    """Z-Y-Z Euler rotation: RZ(c) @ RY(b) @ RZ(a), RZ(a) applied first."""
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    ep = np.exp(-0.5j * (a + c))
    em = np.exp(-0.5j * (a - c))
    return np.array(
        [[ep * cb, -sb / em], [em * sb, cb / ep]], dtype=np.complex128
    )


def rot_derivs(a: float, b: float, c: float) -> list[np.ndarray]:
    """Partial derivatives of rot_matrix w.r.t. each Euler angle."""
    u = rot_matrix(a, b, c)
    # d/da = U (-i Z/2) scales columns; d/dc = (-i Z/2) U scales rows;
    # d/db shifts the middle angle by pi and halves
    da = u * np.array([-0.5j, 0.5j])
    dc = u * np.array([[-0.5j], [0.5j]])
    db = 0.5 * rot_matrix(a, b + np.pi, c)
    return [da, db, dc]


# --- Pauli-word machinery for the arbitrary-unitary block -----------------
#
# Word m in [1, 4^n) encodes the Pauli on qubit q in base-4 digit q:
# 0 = I, 1 = X, 2 = Y, 3 = Z. A word acts as
#   P|j> = phase(j) |j XOR x_mask>,
# with x_mask collecting X/Y positions, z_mask collecting Z/Y positions, and
# phase(j) = i^{#Y} * (-1)^{popcount(j & z_mask)}.


def pauli_word_masks(num_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """(x_mask, z_mask) for every non-identity Pauli word, word order fixed."""
    words = np.arange(1, 1 << (2 * num_qubits))
    x_mask = np.zeros_like(words)
    z_mask = np.zeros_like(words)
    digits = words.copy()
    for q in range(num_qubits):
        d = digits % 4
        x_mask |= ((d == 1) | (d == 2)) << q
        z_mask |= ((d == 2) | (d == 3)) << q
        digits //= 4
    return x_mask, z_mask


def _popcount(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


@lru_cache(maxsize=8)
def pauli_word_table(num_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-word column action: (out_index, phase) arrays of shape (4^n-1, 2^n).

    ``P_w |j> = phase[w, j] |out_index[w, j]>``. Cached per width; callers
    must treat the arrays as read-only.
    """
    x_mask, z_mask = pauli_word_masks(num_qubits)
    dim = 1 << num_qubits
    j = np.arange(dim)
    out_index = j[None, :] ^ x_mask[:, None]
    n_y = _popcount(x_mask & z_mask)
    signs = 1 - 2 * (_popcount(j[None, :] & z_mask[:, None]) & 1)
    phase = (1j ** n_y)[:, None] * signs
    return out_index, phase.astype(np.complex128)


def pauli_generator(theta: np.ndarray, out_index: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Hermitian H = sum_k theta_k P_k assembled column-wise."""
    dim = out_index.shape[1]
    cols = np.broadcast_to(np.arange(dim), out_index.shape)
    flat = (out_index * dim + cols).ravel()
    weights = (theta[:, None] * phase).ravel()
    h = np.bincount(flat, weights=weights.real, minlength=dim * dim).astype(
        np.complex128
    )
    h += 1j * np.bincount(flat, weights=weights.imag, minlength=dim * dim)
    return h.reshape(dim, dim)


def pauli_exp_matrix(theta: np.ndarray, out_index: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """exp(-i H(theta)) via the eigendecomposition of the generator."""
    h = pauli_generator(theta, out_index, phase)
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals)) @ evecs.conj().T


def bound_matrix(spec: GateSpec, params: np.ndarray) -> np.ndarray | None:
    """Concrete matrix for one gate spec; None for shift kinds."""
    if spec.kind == "ry":
        return ry_matrix(float(params[spec.slots[0]]))
    if spec.kind == "rot":
        a, b, c = (float(params[s]) for s in spec.slots)
        return rot_matrix(a, b, c)
    if spec.kind == "fixed":
        return spec.matrix
    if spec.kind == "pauli_exp":
        out_index, phase = pauli_word_table(len(spec.targets))
        return pauli_exp_matrix(params[list(spec.slots)], out_index, phase)
    return None


def bind(circuit: ParamCircuit, params: Sequence[float]) -> list[CircuitOp]:
    """Bind a parameter vector, validating finiteness and unitarity."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.num_params,):
        raise SimulationError(
            f"expected {circuit.num_params} parameters, got {params.shape}"
        )
    if not np.all(np.isfinite(params)):
        raise SimulationError("non-finite parameter value")
    ops = []
    for spec in circuit.specs:
        if spec.kind == "shift":
            ops.append(
                CircuitOp(
                    "shift",
                    spec.targets,
                    control_register=spec.control_register,
                    control_value=spec.control_value,
                    shift=spec.shift,
                )
            )
        else:
            kind = "controlled" if spec.control_register else "unitary"
            ops.append(
                CircuitOp(
                    kind,
                    spec.targets,
                    matrix=bound_matrix(spec, params),
                    control_register=spec.control_register,
                    control_value=spec.control_value,
                )
            )
    return ops


def cnot_spec(control: int, target: int) -> GateSpec:
    return GateSpec(
        "fixed", targets=(target,), control_register=(control,), control_value=1, matrix=_X
    )


def vc_layer_specs(qubits: Sequence[int], slot_start: int) -> tuple[list[GateSpec], int]:
    """One entangler layer on the given qubits; returns specs and next slot."""
    qubits = list(qubits)
    specs = [
        GateSpec("ry", targets=(q,), slots=(slot_start + i,))
        for i, q in enumerate(qubits)
    ]
    slot = slot_start + len(qubits)
    for a, b in zip(qubits, qubits[1:]):
        specs.append(cnot_spec(a, b))
    return specs, slot


def uc_layer_specs(qubits: Sequence[int], slot_start: int) -> tuple[list[GateSpec], int]:
    """One expressive layer on the given qubits; returns specs and next slot."""
    qubits = list(qubits)
    specs = []
    slot = slot_start
    for q in qubits:
        specs.append(GateSpec("rot", targets=(q,), slots=(slot, slot + 1, slot + 2)))
        slot += 3
    for i in range(len(qubits)):
        for j in range(i + 1, len(qubits)):
            specs.append(
                GateSpec(
                    "rot",
                    targets=(qubits[j],),
                    slots=(slot, slot + 1, slot + 2),
                    control_register=(qubits[i],),
                    control_value=1,
                )
            )
            slot += 3
    return specs, slot


def build_vc(num_qubits: int, l1: int) -> ParamCircuit:
    """Entangler block: ``l1`` layers of per-qubit R_Y plus a CNOT chain."""
    if num_qubits < 1 or l1 < 1:
        raise SimulationError("build_vc needs num_qubits >= 1 and l1 >= 1")
    specs: list[GateSpec] = []
    slot = 0
    for _ in range(l1):
        layer, slot = vc_layer_specs(range(num_qubits), slot)
        specs.extend(layer)
    return ParamCircuit(num_qubits, tuple(specs), slot)


def build_uc(num_qubits: int, l2: int) -> ParamCircuit:
    """Expressive block: ``l2`` layers of rotations plus all-pairs controlled rotations."""
    if num_qubits < 1 or l2 < 1:
        raise SimulationError("build_uc needs num_qubits >= 1 and l2 >= 1")
    specs: list[GateSpec] = []
    slot = 0
    for _ in range(l2):
        layer, slot = uc_layer_specs(range(num_qubits), slot)
        specs.extend(layer)
    return ParamCircuit(num_qubits, tuple(specs), slot)


def build_arbitrary_unitary(num_qubits: int) -> ParamCircuit:
    """Single fully-expressive op: exp(-i H) over all non-identity Pauli words."""
    if num_qubits < 1:
        raise SimulationError("need num_qubits >= 1")
    if num_qubits > ARBITRARY_U_MAX_QUBITS:
        raise SimulationError(
            f"arbitrary unitary capped at {ARBITRARY_U_MAX_QUBITS} qubits"
        )
    n_par = (1 << (2 * num_qubits)) - 1
    spec = GateSpec(
        "pauli_exp", targets=tuple(range(num_qubits)), slots=tuple(range(n_par))
    )
    return ParamCircuit(num_qubits, (spec,), n_par)


def remap_specs(
    specs: Sequence[GateSpec], qubit_map: Sequence[int], slot_offset: int
) -> list[GateSpec]:
    """Relocate a circuit fragment onto other qubits / a later slot range."""
    out = []
    for s in specs:
        out.append(
            GateSpec(
                s.kind,
                targets=tuple(qubit_map[q] for q in s.targets),
                slots=tuple(slot_offset + i for i in s.slots),
                control_register=tuple(qubit_map[q] for q in s.control_register),
                control_value=s.control_value,
                matrix=s.matrix,
                shift=s.shift,
            )
        )
    return out
