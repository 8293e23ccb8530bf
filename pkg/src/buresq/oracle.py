"""Exact classical references.

Everything here is computed by dense linear algebra, independent of the
statevector/variational path, so it can serve as ground truth in tests:
Uhlmann fidelity, Wootters concurrence, negativity, the closed-form
two-qubit Bures curve for the Werner family, and a brute-force minimizer
over explicitly parameterized two-qubit separable states that validates
that closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .simulator import DensityMatrix, SimulationError
from .states import werner

PSD_CLIP = -1e-9
# eigh noise on trace-one matrices sits at ~1e-16; square roots would blow
# it up to ~1e-8, so eigenvalues below this floor are treated as exact zeros
EIG_NOISE_FLOOR = 1e-14

_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def _clipped_eigvals(evals: np.ndarray) -> np.ndarray:
    if evals[0] < PSD_CLIP:
        raise SimulationError(f"matrix has negative eigenvalue {evals[0]:.3e}")
    return np.where(evals < EIG_NOISE_FLOOR, 0.0, evals)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(mat)
    evals = _clipped_eigvals(evals)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def fidelity_exact(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2."""
    if rho.dim != sigma.dim:
        raise SimulationError("dimension mismatch")
    root = _psd_sqrt(rho.entries)
    inner = root @ sigma.entries @ root
    inner = 0.5 * (inner + inner.conj().T)
    evals = _clipped_eigvals(np.linalg.eigvalsh(inner))
    return float(np.sum(np.sqrt(evals)) ** 2)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    evals = np.linalg.eigvalsh(rho.entries - sigma.entries)
    return 0.5 * float(np.sum(np.abs(evals)))


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state."""
    if rho.dim != 4:
        raise SimulationError("concurrence is defined for two qubits")
    flip = np.kron(_Y, _Y)
    rho_tilde = flip @ rho.entries.conj() @ flip
    evals = np.linalg.eigvals(rho.entries @ rho_tilde)
    lams = np.sqrt(np.clip(np.real(evals), 0.0, None))
    lams = np.sort(lams)[::-1]
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def werner_bures_reference(p: float) -> float:
    """Analytic R/2 = 1 - sqrt((1 + sqrt(1 - C^2))/2) for the Werner family.

    Derived from the two-qubit closed form via the concurrence; validated
    against :func:`closest_separable_bures` before acceptance use.
    """
    if not 0.0 <= p <= 1.0:
        raise SimulationError(f"p = {p} outside [0, 1]")
    c = concurrence(werner(p))
    return 1.0 - np.sqrt((1.0 + np.sqrt(max(0.0, 1.0 - c * c))) / 2.0)


@dataclass(frozen=True)
class Bipartition:
    """A cut of the qubit register into two disjoint, covering sides."""

    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    def __post_init__(self):
        a, b = set(self.side_a), set(self.side_b)
        if not a or not b or a & b:
            raise SimulationError("cut sides must be nonempty and disjoint")
        n = len(a) + len(b)
        if a | b != set(range(n)):
            raise SimulationError("cut sides must cover qubits 0..n-1")

    @classmethod
    def of(cls, side_a: Sequence[int], num_qubits: int) -> "Bipartition":
        a = tuple(sorted(side_a))
        b = tuple(q for q in range(num_qubits) if q not in a)
        return cls(a, b)


def partial_transpose(rho: DensityMatrix | np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Transpose the given qubits' indices of rho (row axis <-> column axis)."""
    mat = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    tensor = mat.reshape((2,) * (2 * n))
    perm = list(range(2 * n))
    for q in qubits:
        row_ax = n - 1 - q
        col_ax = 2 * n - 1 - q
        perm[row_ax], perm[col_ax] = perm[col_ax], perm[row_ax]
    return tensor.transpose(perm).reshape(dim, dim)


def negativity(rho: DensityMatrix, cut: Bipartition) -> float:
    """(||rho^{T_B}||_1 - 1)/2 across the cut."""
    if len(cut.side_a) + len(cut.side_b) != rho.num_qubits:
        raise SimulationError("cut does not match the state width")
    pt = partial_transpose(rho, cut.side_b)
    evals = np.linalg.eigvalsh(pt)
    return float(max(0.0, (np.sum(np.abs(evals)) - 1.0) / 2.0))


# --- brute-force two-qubit separable minimization --------------------------


def _bloch_ket(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)],
        dtype=np.complex128,
    )


def separable_from_params(params: np.ndarray, terms: int) -> DensityMatrix:
    """Assemble sum_j p_j |a_j><a_j| x |b_j><b_j| from a flat parameter vector.

    Layout per term: (weight logit, theta_a, phi_a, theta_b, phi_b).
    """
    params = np.asarray(params, dtype=np.float64).reshape(terms, 5)
    logits = params[:, 0] - np.max(params[:, 0])
    weights = np.exp(logits)
    weights /= np.sum(weights)
    rho = np.zeros((4, 4), dtype=np.complex128)
    for w, (_, ta, pa, tb, pb) in zip(weights, params):
        a = _bloch_ket(ta, pa)
        b = _bloch_ket(tb, pb)
        prod = np.kron(b, a)
        rho += w * np.outer(prod, prod.conj())
    return DensityMatrix(4, rho)


def closest_separable_bures(
    rho: DensityMatrix,
    terms: int = 6,
    restarts: int = 8,
    seed: int = 0,
    maxiter: int = 600,
) -> tuple[float, DensityMatrix]:
    """Minimize 1 - sqrt(F(rho, sigma)) over explicitly separable two-qubit sigma.

    Dense local search over Bloch angles and mixture logits with several
    seeded restarts; returns (best R/2, best sigma). Spot-check oracle only:
    every output is an upper bound on the true Bures distance. The
    finite-difference step handed to L-BFGS sits well above the ~1e-9
    noise of the eigendecomposition-based fidelity.
    """
    if rho.dim != 4:
        raise SimulationError("brute-force search is two-qubit only")
    rng = np.random.default_rng(seed)

    def cost(x: np.ndarray) -> float:
        sigma = separable_from_params(x, terms)
        return 1.0 - np.sqrt(max(0.0, fidelity_exact(rho, sigma)))

    best_val, best_x = np.inf, None
    for _ in range(restarts):
        x0 = rng.uniform(-1.0, 1.0, size=5 * terms)
        x0[1::5] = rng.uniform(0.0, np.pi, size=terms)
        x0[3::5] = rng.uniform(0.0, np.pi, size=terms)
        res = optimize.minimize(
            cost, x0, method="L-BFGS-B", options={"maxiter": maxiter, "eps": 1e-6}
        )
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    return best_val, separable_from_params(best_x, terms)
