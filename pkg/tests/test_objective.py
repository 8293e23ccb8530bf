import numpy as np
import pytest

from buresq.ansatz import AnsatzConfig
from buresq.objective import (
    FidelityEstimate,
    bures_cost,
    overlap_fidelity,
    r_half,
    swap_circuit_fidelity,
    swap_test_sample,
)
from buresq.oracle import fidelity_exact
from buresq.purify import (
    ResourceSpec,
    build_plan,
    build_purification,
    fixed_purification_for_plan,
    traced_free_state,
)
from buresq.simulator import SimulationError, StateVector

from conftest import random_density, random_state


class TestOverlapFidelity:
    def test_identical_states(self, rng):
        s = random_state(3, rng)
        est = overlap_fidelity(s, s)
        assert est.mode == "exact" and abs(est.value - 1.0) < 1e-12

    def test_orthogonal_states(self):
        zero = StateVector(1, np.array([1, 0], dtype=complex))
        one = StateVector(1, np.array([0, 1], dtype=complex))
        assert overlap_fidelity(zero, one).value == 0

    def test_plus_overlap(self):
        zero = StateVector(1, np.array([1, 0], dtype=complex))
        plus = StateVector(1, np.array([1, 1], dtype=complex) / np.sqrt(2))
        assert abs(overlap_fidelity(zero, plus).value - 0.5) < 1e-12

    def test_width_mismatch(self, rng):
        with pytest.raises(SimulationError):
            overlap_fidelity(random_state(1, rng), random_state(2, rng))


class TestSwapTestSample:
    def test_identical_states_always_hit(self, rng):
        s = random_state(2, rng)
        est = swap_test_sample(s, s, shots=500, rng_seed=1)
        assert est.value == 1.0 and est.std_error == 0.0

    def test_deterministic_under_seed(self, rng):
        a, b = random_state(2, rng), random_state(2, rng)
        e1 = swap_test_sample(a, b, shots=1000, rng_seed=42)
        e2 = swap_test_sample(a, b, shots=1000, rng_seed=42)
        assert e1.value == e2.value and e1.std_error == e2.std_error

    def test_estimator_consistency(self, rng):
        # mean over 200 seeds vs the exact value, three combined sigma
        a, b = random_state(2, rng), random_state(2, rng)
        exact = overlap_fidelity(a, b).value
        shots = 10_000
        values = np.array(
            [swap_test_sample(a, b, shots, seed).value for seed in range(200)]
        )
        sem = values.std(ddof=1) / np.sqrt(len(values))
        assert abs(values.mean() - exact) < 3 * max(sem, 1e-6)

    def test_error_scales_with_shots(self, rng):
        a, b = random_state(2, rng), random_state(2, rng)
        stds = []
        for shots in (10**3, 10**4, 10**5):
            vals = [swap_test_sample(a, b, shots, s).value for s in range(120)]
            stds.append(np.std(vals, ddof=1))
        # sqrt(shots)-normalized spread stays flat within a factor of two
        scaled = [s * np.sqrt(n) for s, n in zip(stds, (10**3, 10**4, 10**5))]
        assert max(scaled) / min(scaled) < 2.0

    def test_rejects_zero_shots(self, rng):
        s = random_state(1, rng)
        with pytest.raises(SimulationError):
            swap_test_sample(s, s, shots=0, rng_seed=0)


class TestSwapCircuit:
    def test_identical_single_qubit(self, rng):
        s = random_state(1, rng)
        est = swap_circuit_fidelity(s, s)
        assert est.mode == "swap-circuit" and abs(est.value - 1.0) < 1e-12

    def test_orthogonal_states(self):
        zero = StateVector(1, np.array([1, 0], dtype=complex))
        one = StateVector(1, np.array([0, 1], dtype=complex))
        assert abs(swap_circuit_fidelity(zero, one).value) < 1e-12

    def test_matches_overlap_on_random_pairs(self, rng):
        for _ in range(100):
            m = int(rng.integers(1, 5))
            a, b = random_state(m, rng), random_state(m, rng)
            circuit = swap_circuit_fidelity(a, b).value
            direct = overlap_fidelity(a, b).value
            assert abs(circuit - direct) < 1e-10


class TestBuresCost:
    def test_endpoints(self):
        assert bures_cost(FidelityEstimate(1.0, "exact")) == 0.0
        assert abs(bures_cost(FidelityEstimate(0.0, "exact")) - 2.0) < 1e-12

    def test_half_value(self):
        got = bures_cost(FidelityEstimate(0.5, "exact"))
        assert abs(got - 2 * (1 - 1 / np.sqrt(2))) < 1e-12

    def test_negative_estimates_clamped(self):
        est = FidelityEstimate(-0.01, "shots", shots=100, std_error=0.1)
        assert abs(bures_cost(est) - 2.0) < 1e-12

    def test_strictly_decreasing(self):
        grid = np.linspace(0, 1, 101)
        vals = [bures_cost(FidelityEstimate(float(f), "exact")) for f in grid]
        assert np.all(np.diff(vals) < 0)

    def test_r_half_is_half_cost(self):
        for f in (0.0, 0.3, 0.99):
            assert abs(2 * r_half(f) - bures_cost(FidelityEstimate(f, "exact"))) < 1e-12


class TestFidelityEstimateInvariants:
    def test_exact_mode_has_no_std_error(self):
        with pytest.raises(SimulationError):
            FidelityEstimate(0.5, "exact", std_error=0.1)

    def test_unknown_mode(self):
        with pytest.raises(SimulationError):
            FidelityEstimate(0.5, "sampled")


class TestUhlmannBound:
    def test_overlap_never_exceeds_exact_fidelity(self, rng):
        # quick version; the 1000-draw sweep lives in the acceptance suite
        plan = build_plan(ResourceSpec("separable", (1, 1), 2), AnsatzConfig(1, 2))
        rho = random_density(2, rng)
        psi = fixed_purification_for_plan(rho, plan)
        for _ in range(25):
            theta = rng.uniform(0, 2 * np.pi, plan.num_params)
            phi = build_purification(plan, theta)
            overlap = overlap_fidelity(psi, phi).value
            sigma = traced_free_state(plan, theta)
            assert overlap <= fidelity_exact(rho, sigma) + 1e-9
