import numpy as np
import pytest

from buresq.oracle import Bipartition, concurrence, negativity
from buresq.simulator import DensityMatrix, SimulationError
from buresq.states import (
    KrausChannel,
    apply_channel,
    bell_state,
    dephased_cluster,
    dephasing_channel,
    dump_density_matrix,
    linear_cluster3,
    load_density_matrix,
    noisy_smolin,
    werner,
)

from conftest import random_density


def dm_partial_trace(rho: np.ndarray, keep: list[int], n: int) -> np.ndarray:
    """Test-local density-matrix partial trace by explicit index sums."""
    dk = 1 << len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    env = [q for q in range(n) if q not in keep]
    for i in range(1 << n):
        for j in range(1 << n):
            if any(((i >> q) & 1) != ((j >> q) & 1) for q in env):
                continue
            ik = sum(((i >> q) & 1) << pos for pos, q in enumerate(keep))
            jk = sum(((j >> q) & 1) << pos for pos, q in enumerate(keep))
            out[ik, jk] += rho[i, j]
    return out


class TestWerner:
    def test_p0_is_maximally_mixed(self):
        assert np.allclose(werner(0.0).entries, np.eye(4) / 4, atol=1e-12)

    def test_p1_is_bell_projector(self):
        phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        assert np.allclose(werner(1.0).entries, np.outer(phi, phi.conj()), atol=1e-12)

    def test_third_point_eigenvalues(self):
        evals = np.sort(np.linalg.eigvalsh(werner(1 / 3).entries))[::-1]
        assert np.allclose(evals, [1 / 2, 1 / 6, 1 / 6, 1 / 6], atol=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(SimulationError):
            werner(1.2)

    def test_separable_iff_p_below_third(self):
        for p in np.linspace(0, 1, 101):
            c = concurrence(werner(p))
            if p <= 1 / 3 + 1e-12:
                assert c < 1e-9
            else:
                assert c > 1e-9


class TestDephasedCluster:
    def test_p0_is_pure(self):
        rho = dephased_cluster(0.0)
        assert abs(np.trace(rho.entries @ rho.entries).real - 1.0) < 1e-12
        vec = linear_cluster3()
        assert np.allclose(rho.entries, np.outer(vec, vec.conj()), atol=1e-12)

    def test_p1_fully_dephased(self):
        rho = dephased_cluster(1.0).entries
        assert np.max(np.abs(rho - np.diag(np.diag(rho)))) < 1e-12

    def test_bound_entanglement_point(self):
        # inside the window the outer cuts are PPT while the middle one is not
        rho = dephased_cluster(0.87)
        assert negativity(rho, Bipartition.of([0], 3)) <= 1e-10
        assert negativity(rho, Bipartition.of([2], 3)) <= 1e-10
        assert negativity(rho, Bipartition.of([1], 3)) > 1e-3


class TestSmolin:
    def test_full_noise_is_maximally_mixed(self):
        assert np.allclose(noisy_smolin(1.0).entries, np.eye(16) / 16, atol=1e-12)

    def test_rank_four_flat_spectrum(self):
        evals = np.sort(np.linalg.eigvalsh(noisy_smolin(0.0).entries))
        assert np.allclose(evals[-4:], 0.25, atol=1e-12)
        assert np.max(np.abs(evals[:-4])) < 1e-12

    def test_single_qubit_marginals_maximally_mixed(self):
        for p in (0.0, 0.4, 1.0):
            rho = noisy_smolin(p).entries
            for q in range(4):
                marg = dm_partial_trace(rho, [q], 4)
                assert np.allclose(marg, np.eye(2) / 2, atol=1e-10)

    def test_bell_states_are_the_four_bell_states(self):
        want = {
            (0, 0): [1, 0, 0, 1],
            (0, 1): [1, 0, 0, -1],
            (1, 0): [0, 1, 1, 0],
            (1, 1): [0, -1, 1, 0],
        }
        for (j, k), ref in want.items():
            got = bell_state(j, k)
            ref = np.array(ref, dtype=complex) / np.sqrt(2)
            phase = np.vdot(ref, got)
            assert abs(abs(phase) - 1.0) < 1e-12
            assert np.allclose(got, phase * ref, atol=1e-12)

    def test_two_two_cuts_stay_ppt(self):
        # separability across every 2|2 cut is what makes the entanglement bound
        for p in np.linspace(0, 1, 21):
            rho = noisy_smolin(p)
            for cut in ([0, 1], [0, 2], [0, 3]):
                assert negativity(rho, Bipartition.of(cut, 4)) <= 1e-10

    def test_one_three_cuts_turn_ppt_at_two_thirds(self):
        # NPT below the separability threshold, PPT from 2/3 on
        for p in np.linspace(0, 1, 21):
            rho = noisy_smolin(p)
            negs = [negativity(rho, Bipartition.of([q], 4)) for q in range(4)]
            if p < 2 / 3 - 1e-9:
                assert min(negs) > 1e-6
            else:
                assert max(negs) <= 1e-10


class TestChannels:
    def test_identity_channel_is_identity(self, rng):
        rho = random_density(2, rng)
        chan = KrausChannel((np.eye(2, dtype=complex),))
        out = apply_channel(rho, chan, 1)
        assert np.allclose(out.entries, rho.entries, atol=1e-12)

    def test_full_dephasing_kills_plus_coherence(self):
        plus = np.full((2, 2), 0.5, dtype=complex)
        out = apply_channel(DensityMatrix(2, plus), dephasing_channel(1.0), 0)
        assert np.allclose(out.entries, np.diag([0.5, 0.5]), atol=1e-12)

    def test_trace_preserved(self, rng):
        rho = random_density(3, rng)
        out = apply_channel(rho, dephasing_channel(0.37), 2)
        assert abs(np.trace(out.entries).real - 1.0) < 1e-12

    def test_incomplete_kraus_set_rejected(self):
        with pytest.raises(SimulationError):
            KrausChannel((np.diag([1.0, 0.5]).astype(complex),))


class TestConstructorInvariants:
    @pytest.mark.parametrize("builder", [werner, dephased_cluster, noisy_smolin])
    def test_valid_density_matrices(self, builder):
        for p in np.linspace(0, 1, 11):
            rho = builder(p)  # DensityMatrix validates on construction
            assert abs(np.trace(rho.entries).real - 1.0) < 1e-10
            assert np.max(np.abs(rho.entries - rho.entries.conj().T)) < 1e-10
            assert np.linalg.eigvalsh(rho.entries)[0] >= -1e-9


class TestJsonInterface:
    def test_roundtrip(self, rng, tmp_path):
        rho = random_density(2, rng)
        path = tmp_path / "rho.json"
        dump_density_matrix(rho, path)
        back = load_density_matrix(path)
        assert np.max(np.abs(back.entries - rho.entries)) < 1e-12

    def test_rejects_invalid_matrix(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"dim": 2, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}')
        with pytest.raises(SimulationError):
            load_density_matrix(path)  # trace 2

    def test_rejects_malformed_payload(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"dim": 2, "re": [[1, 0]]}')
        with pytest.raises(SimulationError):
            load_density_matrix(path)
