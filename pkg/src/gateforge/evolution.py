"""Differentiable evolution under parametrized Hamiltonians.

H(lambda) = sum_i lambda_i O_i over a fixed operator basis; the state
map is psi -> exp(iH) psi. Everything is dense eigendecomposition at
these dimensions (d <= 16), which makes the gradient of the matrix
exponential exact: no step-size or series truncation anywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .gates import GateTarget

_IY = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass
class HamiltonianModel:
    """An operator basis plus the current parameter vector."""

    basis: "OperatorBasis"
    lam: np.ndarray = None
    _stack: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.lam is None:
            self.lam = np.zeros(len(self.basis))
        self.lam = np.asarray(self.lam, dtype=float)
        if self.lam.shape != (len(self.basis),):
            raise ValueError(
                f"lambda has {self.lam.shape[0]} entries for a "
                f"{len(self.basis)}-element basis")

    @property
    def stack(self):
        if self._stack is None:
            self._stack = self.basis.stack()
        return self._stack

    def with_lambda(self, lam):
        return HamiltonianModel(self.basis, np.asarray(lam, dtype=float),
                                self._stack)

    def matrix(self):
        return np.tensordot(self.lam, self.stack, axes=1)


def _gate_matrix(g):
    return g.matrix if isinstance(g, GateTarget) else np.asarray(g, dtype=complex)


def evolve(m, psi):
    """exp(iH(lambda)) psi for a state or column-stacked states."""
    H = m.matrix()
    w, V = np.linalg.eigh(H)
    psi = np.asarray(psi, dtype=complex)
    phase = np.exp(1j * w) if psi.ndim == 1 else np.exp(1j * w)[:, None]
    return V @ (phase * (V.conj().T @ psi))


def fidelity(m, g, psi):
    """|<psi| G^dag exp(iH(lambda)) |psi>|^2."""
    psi = np.asarray(psi, dtype=complex)
    phi = _gate_matrix(g) @ psi
    return float(np.abs(np.vdot(phi, evolve(m, psi))) ** 2)


def fidelity_gradient(m, g, psi):
    """Exact d fidelity / d lambda_i at the current parameters."""
    psi = np.asarray(psi, dtype=complex)
    fids, grads = kernels.fidelity_grad_batch(
        m.stack, m.lam, _gate_matrix(g), psi[None, :])
    return grads[0]


def fidelity_and_gradient_batch(m, g, psis):
    """Per-state fidelities and gradients for a batch of states (rows)."""
    return kernels.fidelity_grad_batch(
        m.stack, m.lam, _gate_matrix(g), np.asarray(psis, dtype=complex))


def unitary_fidelity(U, g):
    """Average-over-states gate fidelity of a unitary U against target G:
    (d + |Tr(G^dag U)|^2) / (d (d + 1)), the Haar mean of the per-state
    squared-modulus fidelity.
    """
    G = _gate_matrix(g)
    d = G.shape[0]
    t = np.abs(np.trace(G.conj().T @ U)) ** 2
    return float((d + t) / (d * (d + 1)))


def average_gate_fidelity(m, g):
    """Closed-form Haar average of fidelity(m, g, psi) over states psi."""
    H = m.matrix()
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(1j * w)) @ V.conj().T
    return unitary_fidelity(U, g)


def real_embed(a):
    """Represent complex matrices/vectors over the reals.

    Matrices map to [[A_R, -A_I], [A_I, A_R]] and vectors to the stacked
    (psi_R, psi_I); the map preserves products and matrix-vector action,
    so complex linear algebra can be carried out entirely in real
    arithmetic.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return np.concatenate([a.real, a.imag])
    if a.ndim == 2:
        return np.kron(np.eye(2), a.real) - np.kron(_IY, a.imag)
    raise ValueError("expected a vector or a matrix")


def haar_state(n_qubits, rng):
    """One Haar-random state: i.i.d. complex Gaussian amplitudes, normalized."""
    return haar_states(2 ** n_qubits, 1, rng)[0]


def haar_states(dim, count, rng):
    """count Haar-random states of dimension dim, as rows."""
    z = rng.normal(size=(count, dim, 2))
    psi = z[..., 0] + 1j * z[..., 1]
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)
