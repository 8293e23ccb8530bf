import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from buresq.ansatz import (
    rot_derivs,
    AnsatzConfig,
    ParamCircuit,
    bind,
    build_arbitrary_unitary,
    build_uc,
    build_vc,
    pauli_word_table,
    rot_matrix,
    ry_matrix,
    rz_matrix,
)
from buresq.simulator import SimulationError, StateVector, apply_ops

from conftest import random_state


def dense_circuit(circuit: ParamCircuit, params) -> np.ndarray:
    """Dense matrix of a bound circuit, column by column."""
    dim = 1 << circuit.num_qubits
    ops = bind(circuit, params)
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[col] = 1.0
        full[:, col] = apply_ops(StateVector(circuit.num_qubits, amps), ops).amplitudes
    return full


class TestBuildVc:
    def test_single_qubit_half_pi(self):
        circuit = build_vc(1, 1)
        out = apply_ops(StateVector.zero(1), bind(circuit, [np.pi / 2]))
        assert np.allclose(out.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_zero_angles_act_as_identity(self):
        circuit = build_vc(3, 2)
        out = apply_ops(StateVector.zero(3), bind(circuit, np.zeros(6)))
        assert abs(out.amplitudes[0] - 1.0) < 1e-12

    def test_param_count(self):
        assert build_vc(3, 2).num_params == 6

    def test_real_output_on_computational_input(self, rng):
        circuit = build_vc(3, 2)
        params = rng.uniform(0, 2 * np.pi, 6)
        out = apply_ops(StateVector.zero(3), bind(circuit, params))
        assert np.max(np.abs(out.amplitudes.imag)) < 1e-12

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=15)
    def test_real_input_stays_real(self, seed):
        rng = np.random.default_rng(seed)
        circuit = build_vc(3, 1)
        amps = rng.normal(size=8)
        state = StateVector(3, (amps / np.linalg.norm(amps)).astype(complex))
        out = apply_ops(state, bind(circuit, rng.uniform(0, 2 * np.pi, 3)))
        assert np.max(np.abs(out.amplitudes.imag)) < 1e-12


class TestBuildUc:
    def test_param_count_two_qubits(self):
        assert build_uc(2, 1).num_params == 9

    def test_zero_params_identity(self, rng):
        circuit = build_uc(3, 2)
        state = random_state(3, rng)
        out = apply_ops(state, bind(circuit, np.zeros(circuit.num_params)))
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-12

    def test_smolin_configuration_count(self):
        # five control qubits, 36 layers
        assert build_uc(5, 36).num_params == 1620

    def test_param_count_formula_grid(self):
        for n in range(1, 7):
            per_layer_uc = 3 * n + 3 * n * (n - 1) // 2
            for l in range(1, 41):
                assert build_vc(n, l).num_params == l * n
                assert build_uc(n, l).num_params == l * per_layer_uc


class TestArbitraryUnitary:
    def test_single_qubit_param_count(self):
        assert build_arbitrary_unitary(1).num_params == 3

    def test_zero_params_identity(self, rng):
        circuit = build_arbitrary_unitary(2)
        state = random_state(2, rng)
        out = apply_ops(state, bind(circuit, np.zeros(15)))
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-12

    def test_xx_generator_matches_expm(self):
        # word order: digit q of the word index is the Pauli on qubit q,
        # so X x X is word 1 + 4*1 = 5, slot index 4
        circuit = build_arbitrary_unitary(2)
        params = np.zeros(15)
        params[4] = np.pi / 4
        got = dense_circuit(circuit, params)
        xx = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]).astype(complex)
        want = expm(-1j * (np.pi / 4) * xx)
        assert np.max(np.abs(got - want)) < 1e-10

    def test_random_words_match_expm(self, rng):
        circuit = build_arbitrary_unitary(2)
        out_index, phase = pauli_word_table(2)
        for _ in range(3):
            params = rng.normal(scale=0.7, size=15)
            h = np.zeros((4, 4), dtype=complex)
            for w in range(15):
                for j in range(4):
                    h[out_index[w, j], j] += params[w] * phase[w, j]
            want = expm(-1j * h)
            assert np.max(np.abs(dense_circuit(circuit, params) - want)) < 1e-10

    def test_width_cap(self):
        with pytest.raises(SimulationError):
            build_arbitrary_unitary(7)


class TestBind:
    def test_deterministic(self, rng):
        circuit = build_uc(2, 2)
        params = rng.uniform(0, 2 * np.pi, circuit.num_params)
        a = apply_ops(StateVector.zero(2), bind(circuit, params))
        b = apply_ops(StateVector.zero(2), bind(circuit, params))
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_two_pi_periodicity(self, rng):
        circuit = build_vc(2, 2)
        params = rng.uniform(0, 2 * np.pi, circuit.num_params)
        state = random_state(2, rng)
        a = apply_ops(state, bind(circuit, params))
        b = apply_ops(state, bind(circuit, params + 2 * np.pi))
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-10

    def test_rejects_wrong_length(self):
        with pytest.raises(SimulationError):
            bind(build_vc(2, 1), [0.1])

    def test_rejects_non_finite(self):
        with pytest.raises(SimulationError):
            bind(build_vc(2, 1), [np.nan, 0.0])

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    @settings(max_examples=15)
    def test_bound_circuits_are_unitary(self, seed, n):
        rng = np.random.default_rng(seed)
        circuit = build_uc(n, 1)
        dense = dense_circuit(circuit, rng.uniform(0, 2 * np.pi, circuit.num_params))
        defect = np.max(np.abs(dense.conj().T @ dense - np.eye(1 << n)))
        assert defect <= 1e-9


class TestGatePrimitives:
    def test_rot_is_zyz_composition(self, rng):
        for _ in range(10):
            a, b, c = rng.uniform(-2 * np.pi, 2 * np.pi, 3)
            want = rz_matrix(c) @ ry_matrix(b) @ rz_matrix(a)
            assert np.max(np.abs(rot_matrix(a, b, c) - want)) < 1e-14

    def test_rot_derivs_match_numerical(self, rng):
        h = 1e-6
        for _ in range(10):
            angles = rng.uniform(-2 * np.pi, 2 * np.pi, 3)
            derivs = rot_derivs(*angles)
            for k in range(3):
                up, down = angles.copy(), angles.copy()
                up[k] += h
                down[k] -= h
                numeric = (rot_matrix(*up) - rot_matrix(*down)) / (2 * h)
                assert np.max(np.abs(derivs[k] - numeric)) < 1e-8

    def test_ansatz_config_validation(self):
        with pytest.raises(SimulationError):
            AnsatzConfig(l1=0)
        with pytest.raises(SimulationError):
            AnsatzConfig(l1=1, l2=-1)

    def test_unreferenced_slot_rejected(self):
        circuit = build_vc(2, 1)
        with pytest.raises(SimulationError):
            ParamCircuit(2, circuit.specs, circuit.num_params + 1)
