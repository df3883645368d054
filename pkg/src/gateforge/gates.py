"""Target gate library: exact constructions, file IO, spectral structure."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .pauli import SIGMA

UNITARITY_TOL = 1e-12
FILE_UNITARITY_TOL = 1e-8
CLUSTER_TOL = 1e-8


@dataclass
class GateTarget:
    """A unitary target G together with its spectral structure.

    n_qubits is None for targets that do not live on a qubit register
    (the reflection gate acts on an N-site walk space of any size).
    """

    name: str
    matrix: np.ndarray
    n_qubits: int = None
    eigen_cache: tuple = field(default=None, repr=False)

    def __post_init__(self):
        U = np.asarray(self.matrix, dtype=complex)
        d = U.shape[0]
        if U.shape != (d, d):
            raise ValueError("gate matrix must be square")
        if np.max(np.abs(U.conj().T @ U - np.eye(d))) > FILE_UNITARITY_TOL:
            raise ValueError(f"matrix of {self.name!r} is not unitary")
        self.matrix = U
        if self.n_qubits is None:
            n = int(round(np.log2(d)))
            self.n_qubits = n if 2 ** n == d else None

    @property
    def dim(self):
        return self.matrix.shape[0]

    def eigensystem(self):
        """Eigenphases in (-pi, pi] and an orthonormal eigenvector matrix."""
        if self.eigen_cache is None:
            T, Q = sla.schur(self.matrix, output="complex")
            theta = np.angle(np.diag(T))
            theta[np.isclose(theta, -np.pi, atol=1e-12)] = np.pi
            self.eigen_cache = (theta, Q)
        return self.eigen_cache


def _permutation_gate(name, n, swaps):
    U = np.eye(2 ** n)
    for a, b in swaps:
        U[[a, b]] = U[[b, a]]
    return GateTarget(name, U, n)


def _fredkin_block():
    # conditional swap of qubits 2,3 on control qubit 1
    return _permutation_gate("fredkin", 3, [(0b101, 0b110)]).matrix


def _fredkin_bar_block():
    # mirrored variant: control sits on the last qubit, targets are the
    # first two, so |011> <-> |101>
    return _permutation_gate("fredkin_bar", 3, [(0b011, 0b101)]).matrix


def _double_fredkin():
    F = _fredkin_block()
    Fbar = _fredkin_bar_block()
    U = np.zeros((16, 16), dtype=complex)
    U[:8, :8] = F
    U[8:, 8:] = Fbar
    return GateTarget("double_fredkin", U, 4)


def _ccy():
    U = np.eye(8, dtype=complex)
    U[6:8, 6:8] = SIGMA["Y"]
    return GateTarget("ccy", U, 3)


def reflection_matrix(N):
    """The exchange matrix: ones on the anti-diagonal."""
    return np.fliplr(np.eye(N))


BUILTIN_GATES = ("cnot", "toffoli", "fredkin", "ccy", "double_fredkin",
                 "identity:n", "reflection:N")


def builtin_gate(name):
    """Construct a named gate. identity and reflection take a size after
    a colon, e.g. 'identity:3' or 'reflection:5'.
    """
    base, _, arg = name.partition(":")
    if base == "cnot":
        return _permutation_gate("cnot", 2, [(0b10, 0b11)])
    if base == "toffoli":
        return _permutation_gate("toffoli", 3, [(0b110, 0b111)])
    if base == "fredkin":
        return GateTarget("fredkin", _fredkin_block(), 3)
    if base == "ccy":
        return _ccy()
    if base == "double_fredkin":
        return _double_fredkin()
    if base == "identity":
        if not arg:
            raise ValueError("identity needs a qubit count, e.g. identity:2")
        n = int(arg)
        return GateTarget(name, np.eye(2 ** n), n)
    if base == "reflection":
        if not arg:
            raise ValueError("reflection needs a size, e.g. reflection:4")
        N = int(arg)
        if N < 2:
            raise ValueError("reflection size must be >= 2")
        return GateTarget(name, reflection_matrix(N))
    raise ValueError(f"unknown gate {name!r}; builtins: {BUILTIN_GATES}")


def gate_from_file(path):
    """Read a unitary from the plain-text matrix format.

    Line 1 is the dimension d; the next d lines hold d complex entries
    each, in Python literal form like 0.5-0.5j.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty matrix file")
    d = int(tokens[0])
    if d < 2 or 2 ** int(round(np.log2(d))) != d:
        raise ValueError(f"{path}: dimension {d} is not a power of two")
    if len(tokens) != 1 + d * d:
        raise ValueError(f"{path}: expected {d * d} entries, got {len(tokens) - 1}")
    U = np.array([complex(t) for t in tokens[1:]]).reshape(d, d)
    if np.max(np.abs(U.conj().T @ U - np.eye(d))) > FILE_UNITARITY_TOL:
        raise ValueError(f"{path}: matrix is not unitary")
    return GateTarget(path, U)


def gate_to_file(g, path):
    with open(path, "w") as fh:
        fh.write(f"{g.dim}\n")
        for row in g.matrix:
            fh.write(" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row))
            fh.write("\n")


def spectral_decomposition(g):
    """Distinct eigenphases and the projectors onto their eigenspaces.

    Eigenphases from the solver split exact degeneracies at machine
    noise; phases closer than CLUSTER_TOL are merged back into one
    degenerate projector.
    """
    theta, Q = g.eigensystem()
    order = np.argsort(theta)
    theta = theta[order]
    Q = Q[:, order]

    phases = []
    projectors = []
    start = 0
    for k in range(1, len(theta) + 1):
        if k == len(theta) or theta[k] - theta[start] > CLUSTER_TOL:
            block = Q[:, start:k]
            phases.append(float(np.mean(theta[start:k])))
            projectors.append(block @ block.conj().T)
            start = k
    return np.array(phases), projectors
