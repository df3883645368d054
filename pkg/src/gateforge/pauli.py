"""Multi-qubit Pauli strings and the interaction bases built from them.

Qubit 1 is the leftmost tensor factor throughout, so "ZZX" means
Z on qubit 1, Z on qubit 2, X on qubit 3. Dimensions in scope are
small (n <= 4), so everything is dense complex arithmetic.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

FAMILIES = (
    "full_two_local",
    "two_local_no_Y",
    "diagonal_pairwise",
    "xx_yy_coupled",
    "xx_and_yy",
    "one_local",
)


@lru_cache(maxsize=None)
def _dense_unit(label):
    out = np.array([[1.0 + 0j]])
    for ch in label:
        if ch not in SIGMA:
            raise ValueError(f"unknown Pauli factor {ch!r} in {label!r}")
        out = np.kron(out, SIGMA[ch])
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PauliString:
    """A coefficient times a tensor product of single-qubit Paulis."""

    label: str
    coefficient: float = 1.0

    def __post_init__(self):
        if not self.label:
            raise ValueError("empty Pauli label")
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        bad = set(self.label) - set(SIGMA)
        if bad:
            raise ValueError(f"unknown Pauli factors {sorted(bad)}")

    @property
    def n_qubits(self):
        return len(self.label)

    def dense(self):
        return self.coefficient * _dense_unit(self.label)

    def __str__(self):
        return format_term(self.label, self.coefficient)


def dense_matrix(p):
    """Dense matrix of a PauliString (or of a bare label string)."""
    if isinstance(p, str):
        p = PauliString(p)
    return p.dense()


def commutator(a, b):
    """AB - BA for equal-dimension square matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def format_term(label, coefficient):
    return f"{coefficient:.12g} * {label}"


def parse_term(text):
    """Inverse of format_term: '-0.392699 * ZZX' -> ('ZZX', -0.392699)."""
    coeff, star, label = text.partition("*")
    label = label.strip()
    if not star or not label or any(ch not in "IXYZ" for ch in label):
        raise ValueError(f"malformed Pauli term {text!r}")
    try:
        return label, float(coeff)
    except ValueError:
        raise ValueError(f"malformed Pauli term {text!r}")


def terms_to_matrix(terms):
    """Sum of (label, coefficient) pairs as a dense matrix."""
    return sum(c * _dense_unit(l) for l, c in terms)


@dataclass
class OperatorBasis:
    """Ordered list of Hermitian operators, each a real combination of
    Pauli strings. The term lists keep the exact combination so bases
    serialize losslessly; matrices are realized once on construction.
    """

    n_qubits: int
    terms: list  # per element: list of (label, coefficient)
    matrices: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.matrices is None:
            self.matrices = [terms_to_matrix(t) for t in self.terms]
        for m in self.matrices:
            if np.max(np.abs(m - m.conj().T)) > 1e-12:
                raise ValueError("basis element is not Hermitian")

    def __len__(self):
        return len(self.terms)

    @property
    def dim(self):
        return 2 ** self.n_qubits

    def stack(self):
        return np.array(self.matrices)

    def gram_rank(self):
        """Rank of the Hilbert-Schmidt Gram matrix (independence check)."""
        V = np.array([m.reshape(-1) for m in self.matrices])
        G = np.real(V.conj() @ V.T)
        return np.linalg.matrix_rank(G, tol=1e-10)


def _one_local_labels(n, axes="XYZ"):
    labels = []
    for i in range(n):
        for a in axes:
            s = ["I"] * n
            s[i] = a
            labels.append("".join(s))
    return labels


def _pair_label(n, i, j, a, b):
    s = ["I"] * n
    s[i] = a
    s[j] = b
    return "".join(s)


def standard_bases(n_qubits, family):
    """The interaction families the package trains over.

    Every family starts with the identity element; ordering is
    lexicographic by (weight, qubit indices, axis labels) so parameter
    vectors mean the same thing across runs.
    """
    n = n_qubits
    if n < 1:
        raise ValueError("n_qubits must be >= 1")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")

    elements = [[("I" * n, 1.0)]]
    if family == "two_local_no_Y":
        singles = _one_local_labels(n, axes="XZ")
    else:
        singles = _one_local_labels(n)
    elements += [[(l, 1.0)] for l in singles]

    for i, j in combinations(range(n), 2):
        if family == "one_local":
            break
        if family == "full_two_local":
            pairs = [[(_pair_label(n, i, j, a, b), 1.0)]
                     for a in "XYZ" for b in "XYZ"]
        elif family == "two_local_no_Y":
            pairs = [[(_pair_label(n, i, j, a, b), 1.0)]
                     for a in "XZ" for b in "XZ"]
        elif family == "diagonal_pairwise":
            pairs = [[(_pair_label(n, i, j, a, a), 1.0)] for a in "XYZ"]
        elif family == "xx_and_yy":
            pairs = [[(_pair_label(n, i, j, a, a), 1.0)] for a in "XY"]
        elif family == "xx_yy_coupled":
            pairs = [[(_pair_label(n, i, j, "X", "X"), 1.0),
                      (_pair_label(n, i, j, "Y", "Y"), 1.0)]]
        elements += pairs

    return OperatorBasis(n_qubits=n, terms=elements)


def pauli_decompose(A, drop_below=1e-12):
    """Expand a Hermitian matrix over the Pauli-string basis.

    Coefficients are Tr(sigma_s A) / 2^n, real for Hermitian input.
    Terms with |coefficient| <= drop_below are omitted.
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    n = int(round(np.log2(d)))
    if 2 ** n != d or A.shape != (d, d):
        raise ValueError(f"expected a 2^n x 2^n matrix, got {A.shape}")
    if np.max(np.abs(A - A.conj().T)) > 1e-10:
        raise ValueError("matrix is not Hermitian")

    out = []
    for idx in np.ndindex(*(4,) * n):
        label = "".join("IXYZ"[k] for k in idx)
        c = np.real(np.trace(_dense_unit(label) @ A)) / d
        if abs(c) > drop_below:
            out.append((label, float(c)))
    return out
