"""Purification builders.

One side of the overlap objective is a fixed purification of the target
state, built directly from its eigendecomposition. The other side is a
variational purification whose partial trace lies, for every parameter
vector, inside one of five free-state families:

* ``separable``          -- convex mixtures of products across all parts
* ``biseparable``        -- mixtures of states separable across some cut
* ``quantum-classical``  -- sum_j p_j rho_j^A x |phi_j><phi_j|_B
* ``incoherent``         -- diagonal in the computational basis
* ``product``            -- rho^A x rho^B

Register layout is uniform: system qubits come first (0..n-1, parts in
order), ancilla registers follow. The fixed purification writes its
eigen-index on the ancilla register, so both sides share one width.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ansatz
from .ansatz import AnsatzConfig, GateSpec, ParamCircuit
from .simulator import (
    CircuitOp,
    DensityMatrix,
    SimulationError,
    StateVector,
    apply_ops,
    op_index_array,
    partial_trace,
    register_probabilities,
)

FAMILIES = ("separable", "biseparable", "quantum-classical", "incoherent", "product")

EIGENVALUE_CUTOFF = 1e-12
PRODUCT_PURITY_TOL = 1e-8


@dataclass(frozen=True)
class ResourceSpec:
    """Free-state family selector plus partition and control-register size."""

    family: str
    partition: tuple[int, ...]
    control_qubits: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SimulationError(f"unknown family {self.family!r}")
        partition = tuple(int(m) for m in self.partition)
        if any(m < 1 for m in partition):
            raise SimulationError("every part needs at least one qubit")
        n = sum(partition)
        if self.family == "incoherent":
            if len(partition) != 1:
                raise SimulationError("incoherent family takes a single part")
        elif self.family == "biseparable":
            if len(partition) < 3:
                raise SimulationError("biseparable family needs >= 3 parts")
        elif self.family in ("quantum-classical", "product"):
            if len(partition) != 2:
                raise SimulationError(f"{self.family} family takes exactly 2 parts")
        elif len(partition) < 2:
            raise SimulationError("separable family needs >= 2 parts")
        if self.family in ("quantum-classical", "incoherent", "product"):
            if self.control_qubits != n:
                raise SimulationError(
                    f"{self.family} family fixes control_qubits = {n} (system width)"
                )
        elif self.control_qubits < n:
            raise SimulationError(
                "control register must embed the system rank (control_qubits >= n)"
            )
        object.__setattr__(self, "partition", partition)

    @property
    def num_system_qubits(self) -> int:
        return sum(self.partition)

    @property
    def cardinality(self) -> int:
        return 1 << self.control_qubits


@dataclass(frozen=True, eq=False)
class PurificationPlan:
    """A variational purification circuit with its register bookkeeping."""

    spec: ResourceSpec
    circuit: ParamCircuit
    total_qubits: int
    system_qubits: tuple[int, ...]
    ancilla_qubits: tuple[int, ...]
    param_layout: dict[str, slice]
    spec_layout: dict[str, slice]

    def __post_init__(self):
        covered = []
        for sl in self.param_layout.values():
            covered.extend(range(sl.start, sl.stop))
        if sorted(covered) != list(range(self.circuit.num_params)):
            raise SimulationError("param_layout does not partition the slot range")

    @property
    def num_params(self) -> int:
        return self.circuit.num_params


class _Assembler:
    """Accumulates remapped circuit fragments and records group boundaries."""

    def __init__(self):
        self.specs: list[GateSpec] = []
        self.slot = 0
        self.param_groups: dict[str, slice] = {}
        self.spec_groups: dict[str, slice] = {}
        self._group_start: tuple[str, int, int] | None = None

    def begin(self, group: str):
        self._group_start = (group, self.slot, len(self.specs))

    def end(self):
        group, slot0, spec0 = self._group_start
        self.param_groups[group] = slice(slot0, self.slot)
        self.spec_groups[group] = slice(spec0, len(self.specs))
        self._group_start = None

    def fragment(self, circuit: ParamCircuit, qubit_map: Sequence[int]):
        self.specs.extend(ansatz.remap_specs(circuit.specs, qubit_map, self.slot))
        self.slot += circuit.num_params

    def gate(self, kind: str, targets, *, n_slots=0, control=(), value=0, shift=0, matrix=None):
        slots = tuple(range(self.slot, self.slot + n_slots))
        self.slot += n_slots
        self.specs.append(
            GateSpec(
                kind,
                targets=tuple(targets),
                slots=slots,
                control_register=tuple(control),
                control_value=value,
                matrix=matrix,
                shift=shift,
            )
        )

    def finish(self, spec: ResourceSpec, total: int, ancilla: Sequence[int]) -> PurificationPlan:
        for group in ("v_c", "controlled_blocks", "u_c", "extra"):
            self.param_groups.setdefault(group, slice(self.slot, self.slot))
            self.spec_groups.setdefault(group, slice(len(self.specs), len(self.specs)))
        n = spec.num_system_qubits
        circuit = ParamCircuit(total, tuple(self.specs), self.slot)
        return PurificationPlan(
            spec=spec,
            circuit=circuit,
            total_qubits=total,
            system_qubits=tuple(range(n)),
            ancilla_qubits=tuple(ancilla),
            param_layout=self.param_groups,
            spec_layout=self.spec_groups,
        )


def _part_offsets(partition: Sequence[int]) -> list[list[int]]:
    parts, off = [], 0
    for m in partition:
        parts.append(list(range(off, off + m)))
        off += m
    return parts


def _uc_fragment(width: int, config: AnsatzConfig) -> ParamCircuit | None:
    if config.use_arbitrary_u:
        return ansatz.build_arbitrary_unitary(width)
    if config.l2 >= 1:
        return ansatz.build_uc(width, config.l2)
    return None


def _controlled_rotations(asm: _Assembler, control, value, qubits):
    for q in qubits:
        asm.gate("rot", (q,), n_slots=3, control=control, value=value)


def _copy_register(asm: _Assembler, source, target):
    """Computational-basis copy: shift ``target`` by the value read on ``source``."""
    for j in range(1, 1 << len(source)):
        asm.gate("shift", tuple(target), control=tuple(source), value=j, shift=j)


def separable_purification(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    """V_C, one controlled rotation block per part, then U_C on the control register."""
    if spec.family != "separable":
        raise SimulationError("spec family is not separable")
    n = spec.num_system_qubits
    parts = _part_offsets(spec.partition)
    c_reg = list(range(n, n + spec.control_qubits))

    asm = _Assembler()
    asm.begin("v_c")
    asm.fragment(ansatz.build_vc(spec.control_qubits, config.l1), c_reg)
    asm.end()
    asm.begin("controlled_blocks")
    for part in parts:
        for j in range(spec.cardinality):
            _controlled_rotations(asm, c_reg, j, part)
    asm.end()
    asm.begin("u_c")
    uc = _uc_fragment(spec.control_qubits, config)
    if uc is not None:
        asm.fragment(uc, c_reg)
    asm.end()
    return asm.finish(spec, n + spec.control_qubits, c_reg)


def bipartition_masks(num_parts: int) -> list[int]:
    """Canonical enumeration of the 2^(M-1) - 1 unordered bipartitions.

    Mask ``m`` selects the parts on one side; the complement (which always
    contains the last part) is the other side.
    """
    return list(range(1, 1 << (num_parts - 1)))


def biseparable_purification(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    """Mixture register (C1) and bipartition register (C2) steer per-part blocks.

    Control values beyond the bipartition count act as identity; those slots
    contribute computational-basis product terms, which are biseparable.
    """
    if spec.family != "biseparable":
        raise SimulationError("spec family is not biseparable")
    n = spec.num_system_qubits
    parts = _part_offsets(spec.partition)
    masks = bipartition_masks(len(parts))
    w2 = max(1, (len(masks) - 1).bit_length())
    c1 = list(range(n, n + spec.control_qubits))
    c2 = list(range(n + spec.control_qubits, n + spec.control_qubits + w2))
    c_all = c1 + c2

    asm = _Assembler()
    asm.begin("v_c")
    asm.fragment(ansatz.build_vc(len(c_all), config.l1), c_all)
    asm.end()
    asm.begin("controlled_blocks")
    for k_b in range(len(masks)):
        for j in range(spec.cardinality):
            value = j | (k_b << spec.control_qubits)
            for part in parts:
                _controlled_rotations(asm, c_all, value, part)
    asm.end()
    asm.begin("u_c")
    uc = _uc_fragment(len(c_all), config)
    if uc is not None:
        asm.fragment(uc, c_all)
    asm.end()
    return asm.finish(spec, n + len(c_all), c_all)


def qc_purification(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    """Quantum-classical builder: classical side B, conditional mixed states on A."""
    if spec.family != "quantum-classical":
        raise SimulationError("spec family is not quantum-classical")
    n_a, n_b = spec.partition
    a_reg = list(range(n_a))
    b_reg = list(range(n_a, n_a + n_b))
    c1 = list(range(n_a + n_b, n_a + 2 * n_b))
    c2 = list(range(n_a + 2 * n_b, 2 * n_a + 2 * n_b))
    total = 2 * (n_a + n_b)

    asm = _Assembler()
    asm.begin("v_c")
    asm.fragment(ansatz.build_vc(n_b, config.l1), b_reg)
    asm.end()
    asm.begin("controlled_blocks")
    _copy_register(asm, b_reg, c1)
    for j in range(1 << n_b):
        # spectrum weights of rho_j^A, prepared with real coefficients on C2
        layer, _ = ansatz.vc_layer_specs(range(n_a), 0)
        for gate in ansatz.remap_specs(layer, c2, asm.slot):
            if gate.kind == "ry":
                asm.gate("ry", gate.targets, n_slots=1, control=c1, value=j)
            else:
                asm.gate(
                    "fixed",
                    gate.targets,
                    control=tuple(c1) + gate.control_register,
                    value=j | (gate.control_value << len(c1)),
                    matrix=gate.matrix,
                )
    _copy_register(asm, c2, a_reg)
    for j in range(1 << n_b):
        _controlled_rotations(asm, b_reg, j, a_reg)
    asm.end()
    asm.begin("u_c")
    uc = _uc_fragment(n_a + n_b, config)
    if uc is not None:
        asm.fragment(uc, c1 + c2)
    asm.end()
    asm.begin("extra")
    asm.fragment(ansatz.build_uc(n_b, 1), b_reg)
    asm.end()
    return asm.finish(spec, total, c1 + c2)


def incoherent_purification(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    """Real superposition on A, basis copy onto B, free unitary on B."""
    if spec.family != "incoherent":
        raise SimulationError("spec family is not incoherent")
    n = spec.num_system_qubits
    a_reg = list(range(n))
    b_reg = list(range(n, 2 * n))

    asm = _Assembler()
    asm.begin("v_c")
    asm.fragment(ansatz.build_vc(n, config.l1), a_reg)
    asm.end()
    asm.begin("controlled_blocks")
    _copy_register(asm, a_reg, b_reg)
    asm.end()
    asm.begin("u_c")
    uc = _uc_fragment(n, config)
    if uc is not None:
        asm.fragment(uc, b_reg)
    asm.end()
    return asm.finish(spec, 2 * n, b_reg)


def product_purification(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    """Independent mixtures on A and B via separate copy registers."""
    if spec.family != "product":
        raise SimulationError("spec family is not product")
    n_a, n_b = spec.partition
    n = n_a + n_b
    a_reg = list(range(n_a))
    b_reg = list(range(n_a, n))
    c1 = list(range(n, n + n_a))
    c2 = list(range(n + n_a, 2 * n))

    asm = _Assembler()
    asm.begin("v_c")
    asm.fragment(ansatz.build_vc(n_a, config.l1), c1)
    asm.fragment(ansatz.build_vc(n_b, config.l1), c2)
    asm.end()
    asm.begin("controlled_blocks")
    _copy_register(asm, c1, a_reg)
    _copy_register(asm, c2, b_reg)
    asm.end()
    asm.begin("extra")
    asm.fragment(ansatz.build_uc(n_a, 1), a_reg)
    asm.fragment(ansatz.build_uc(n_b, 1), b_reg)
    asm.end()
    asm.begin("u_c")
    uc = _uc_fragment(n, config)
    if uc is not None:
        asm.fragment(uc, c1 + c2)
    asm.end()
    return asm.finish(spec, 2 * n, c1 + c2)


_BUILDERS = {
    "separable": separable_purification,
    "biseparable": biseparable_purification,
    "quantum-classical": qc_purification,
    "incoherent": incoherent_purification,
    "product": product_purification,
}


def build_plan(spec: ResourceSpec, config: AnsatzConfig) -> PurificationPlan:
    return _BUILDERS[spec.family](spec, config)


def build_purification(plan: PurificationPlan, theta: Sequence[float]) -> StateVector:
    """Bind and run the plan circuit on |0...0>."""
    ops = ansatz.bind(plan.circuit, theta)
    return apply_ops(StateVector.zero(plan.total_qubits), ops)


def traced_free_state(plan: PurificationPlan, theta: Sequence[float]) -> DensityMatrix:
    state = build_purification(plan, theta)
    return partial_trace(state, plan.system_qubits)


# --- fixed purification of the target ---------------------------------------


def _phase_fixed(vec: np.ndarray) -> np.ndarray:
    nz = np.nonzero(np.abs(vec) > EIGENVALUE_CUTOFF)[0]
    if nz.size == 0:
        return vec
    ref = vec[nz[0]]
    return vec * (ref.conjugate() / abs(ref))


def _lex_key(vec: np.ndarray) -> tuple:
    return tuple((round(float(x.real), 12), round(float(x.imag), 12)) for x in vec)


def ordered_spectrum(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs sorted by descending eigenvalue; ties broken by the
    lexicographically smallest phase-fixed eigenvector."""
    evals, evecs = rho.eigh()
    vecs = [_phase_fixed(evecs[:, i]) for i in range(rho.dim)]
    order = sorted(
        range(rho.dim), key=lambda i: (-round(float(evals[i]), 12), _lex_key(vecs[i]))
    )
    sorted_vals = np.array([max(0.0, float(evals[i])) for i in order])
    sorted_vecs = np.column_stack([vecs[i] for i in order])
    return sorted_vals, sorted_vecs


def fixed_purification(rho: DensityMatrix, n_c: int) -> StateVector:
    """|Psi> = sum_j sqrt(r_j) |phi_j>_sys |j>_C from the eigendecomposition."""
    n = rho.num_qubits
    if n_c < n:
        raise SimulationError("ancilla register cannot embed the state rank")
    evals, evecs = ordered_spectrum(rho)
    amps = np.zeros(1 << (n + n_c), dtype=np.complex128)
    dim = rho.dim
    for j in range(dim):
        if evals[j] < EIGENVALUE_CUTOFF:
            continue
        amps[(j << n) : (j << n) + dim] = np.sqrt(evals[j]) * evecs[:, j]
    return StateVector(n + n_c, amps)


def fixed_purification_for_plan(rho: DensityMatrix, plan: PurificationPlan) -> StateVector:
    """Fixed purification padded onto the plan's full register layout.

    The eigen-index occupies the (contiguous) ancilla block; any ancilla
    qubits beyond the state's rank stay |0>, which keeps the vector a valid
    purification.
    """
    if rho.num_qubits != len(plan.system_qubits):
        raise SimulationError("state width does not match the plan's system")
    return fixed_purification(rho, plan.total_qubits - rho.num_qubits)


# --- classical free-state assembly and component extraction -----------------


def product_vector(part_states: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([1.0], dtype=np.complex128)
    for part in part_states:
        out = np.kron(np.asarray(part, dtype=np.complex128), out)
    return out


def classical_free_state(family: str, components) -> DensityMatrix:
    """Assemble the free state directly from extracted components.

    Component shapes per family:

    * separable / biseparable: ``(probabilities, terms)`` where ``terms[j]``
      lists one unit vector per part (parts in register order).
    * quantum-classical: ``(probabilities, rho_a_list, phi_b_list)``.
    * incoherent: ``probabilities`` (the diagonal).
    * product: ``(rho_a, rho_b)`` as square arrays.

    The assembly path cannot produce anything outside the family, so
    equality with a traced purification certifies membership.
    """
    if family in ("separable", "biseparable"):
        probs, terms = components
        probs = np.asarray(probs, dtype=np.float64)
        if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < -1e-12):
            raise SimulationError("invalid probability vector")
        dim = int(np.prod([len(p) for p in terms[0]]))
        rho = np.zeros((dim, dim), dtype=np.complex128)
        for p, parts in zip(probs, terms):
            vec = product_vector(parts)
            rho += p * np.outer(vec, vec.conj())
        return DensityMatrix(dim, rho)
    if family == "quantum-classical":
        probs, rho_a_list, phi_b_list = components
        probs = np.asarray(probs, dtype=np.float64)
        if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < -1e-12):
            raise SimulationError("invalid probability vector")
        d_a = rho_a_list[0].shape[0]
        d_b = len(phi_b_list[0])
        rho = np.zeros((d_a * d_b, d_a * d_b), dtype=np.complex128)
        for p, rho_a, phi in zip(probs, rho_a_list, phi_b_list):
            rho += p * np.kron(np.outer(phi, np.conj(phi)), rho_a)
        return DensityMatrix(d_a * d_b, rho)
    if family == "incoherent":
        probs = np.asarray(components, dtype=np.float64)
        if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < -1e-12):
            raise SimulationError("invalid probability vector")
        return DensityMatrix(len(probs), np.diag(probs.astype(np.complex128)))
    if family == "product":
        rho_a, rho_b = components
        return DensityMatrix(
            rho_a.shape[0] * rho_b.shape[0], np.kron(rho_b, rho_a)
        )
    raise SimulationError(f"unknown family {family!r}")


def inverse_op(op: CircuitOp) -> CircuitOp:
    if op.kind == "shift":
        return CircuitOp(
            "shift",
            op.targets,
            control_register=op.control_register,
            control_value=op.control_value,
            shift=-op.shift,
        )
    return CircuitOp(
        op.kind,
        op.targets,
        matrix=op.matrix.conj().T,
        control_register=op.control_register,
        control_value=op.control_value,
    )


def _undo_group(plan: PurificationPlan, theta, state: StateVector, group: str) -> StateVector:
    """Apply the inverse of one named gate group to a built purification."""
    ops = ansatz.bind(plan.circuit, theta)
    sl = plan.spec_layout[group]
    return apply_ops(state, [inverse_op(op) for op in reversed(ops[sl])])


def _conditional_system_state(
    state: StateVector, plan: PurificationPlan, value: int, prob: float
) -> np.ndarray:
    idx = op_index_array(
        plan.total_qubits, plan.system_qubits, plan.ancilla_qubits, value
    )
    return state.amplitudes[idx][:, 0] / np.sqrt(prob)


def _split_product(vec: np.ndarray, partition: Sequence[int]) -> list[np.ndarray]:
    """Split an exact product vector into per-part unit vectors (phase-fixed)."""
    n = sum(partition)
    state = StateVector(n, vec)
    parts = []
    for qubits in _part_offsets(partition):
        reduced = partial_trace(state, qubits)
        evals, evecs = np.linalg.eigh(reduced.entries)
        if evals[-1] < 1.0 - PRODUCT_PURITY_TOL:
            raise SimulationError(
                f"conditional state is not a product across the partition "
                f"(marginal purity {evals[-1]:.12f})"
            )
        parts.append(_phase_fixed(evecs[:, -1]))
    return parts


def extract_components(plan: PurificationPlan, theta: Sequence[float]):
    """Pull the family components out of a bound plan, exactly.

    Returns the structure documented in :func:`classical_free_state`.
    """
    family = plan.spec.family
    state = build_purification(plan, theta)
    if family in ("separable", "biseparable"):
        stripped = _undo_group(plan, theta, state, "u_c")
        probs = register_probabilities(stripped, plan.ancilla_qubits)
        kept_probs, terms = [], []
        for value, p in enumerate(probs):
            if p < EIGENVALUE_CUTOFF:
                continue
            vec = _conditional_system_state(stripped, plan, value, p)
            terms.append(_split_product(vec, plan.spec.partition))
            kept_probs.append(p)
        kept_probs = np.asarray(kept_probs) / np.sum(kept_probs)
        return kept_probs, terms
    if family == "quantum-classical":
        n_a, n_b = plan.spec.partition
        b_reg = tuple(range(n_a, n_a + n_b))
        u_b = dense_fragment_unitary(plan, theta, "extra", b_reg)
        sigma = partial_trace(state, plan.system_qubits).entries
        d_a, d_b = 1 << n_a, 1 << n_b
        rotated = (
            np.kron(u_b.conj().T, np.eye(d_a)) @ sigma @ np.kron(u_b, np.eye(d_a))
        )
        probs, rho_a_list, phi_b_list = [], [], []
        for j in range(d_b):
            block = rotated[j * d_a : (j + 1) * d_a, j * d_a : (j + 1) * d_a]
            p = float(np.trace(block).real)
            if p < EIGENVALUE_CUTOFF:
                continue
            probs.append(p)
            rho_a_list.append(block / p)
            phi_b_list.append(u_b[:, j])
        return np.asarray(probs) / np.sum(probs), rho_a_list, phi_b_list
    if family == "incoherent":
        return register_probabilities(state, plan.system_qubits)
    if family == "product":
        n_a, n_b = plan.spec.partition
        rho_a = partial_trace(state, range(n_a)).entries
        rho_b = partial_trace(state, range(n_a, n_a + n_b)).entries
        return rho_a, rho_b
    raise SimulationError(f"unknown family {family!r}")


def dense_fragment_unitary(
    plan: PurificationPlan, theta, group: str, register: tuple[int, ...]
) -> np.ndarray:
    """Dense matrix of a gate group that acts entirely inside ``register``."""
    ops = ansatz.bind(plan.circuit, theta)
    sl = plan.spec_layout[group]
    local = {q: i for i, q in enumerate(register)}
    width = len(register)
    mat = np.eye(1 << width, dtype=np.complex128)
    for op in ops[sl]:
        touched = set(op.targets) | set(op.control_register)
        if not touched <= set(register):
            raise SimulationError("gate group leaks outside the register")
        idx = op_index_array(
            width,
            tuple(local[q] for q in op.targets),
            tuple(local[q] for q in op.control_register),
            op.control_value,
        )
        sub = mat[idx]  # (K, batch, dim) rows of the matrix
        if op.kind == "shift":
            mat[idx] = np.roll(sub, op.shift, axis=0)
        else:
            mat[idx] = np.einsum("ij,jbd->ibd", op.matrix, sub)
    return mat
