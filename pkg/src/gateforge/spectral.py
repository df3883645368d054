"""Spectral tests and closed-form generators for exact gate Hamiltonians.

A Hamiltonian H solves exp(iH) = G exactly iff it lives in the allowed
interaction span, commutes with the principal generator H_G of G, and
the eigenvalues of H - H_G all sit on the 2*pi integer lattice. This
module computes H_G, restricts interaction bases to the commutant of
H_G, checks candidate solutions against all three requirements, and
carries the closed-form solution families used as regression anchors.
"""

import itertools
from dataclasses import dataclass
from math import gcd

import numpy as np

from .gates import GateTarget
from .pauli import (OperatorBasis, commutator, format_term, pauli_decompose,
                    terms_to_matrix)

COMMUTANT_RTOL = 1e-10   # relative SVD cutoff for the commutator null space
COMMUTE_TOL = 1e-10      # max-abs tolerance on [O, H_G]
LATTICE_TOL = 1e-8       # default distance to the 2*pi integer lattice


def _as_gate(g):
    if isinstance(g, GateTarget):
        return g
    return GateTarget("gate", np.asarray(g, dtype=complex))


def _expi(H):
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)) @ V.conj().T


def principal_generator(g):
    """The Hermitian H_G with exp(iH_G) = G and eigenvalues in (-pi, pi].

    Built from the Schur eigensystem of G, mapping each unit eigenvalue
    to its principal-branch phase.
    """
    g = _as_gate(g)
    theta, Q = g.eigensystem()
    H = (Q * theta) @ Q.conj().T
    return 0.5 * (H + H.conj().T)


def _commutant_coefficients(basis, H_G):
    """Rows spanning {lambda : [sum_i lambda_i O_i, H_G] = 0}.

    Null space of the vectorized commutator map, via SVD with a
    relative threshold so exact degeneracies are kept together.
    """
    if len(basis) == 0:
        raise ValueError("empty basis")
    cols = []
    for O in basis.matrices:
        C = commutator(O, H_G)
        v = C.reshape(-1)
        cols.append(np.concatenate([v.real, v.imag]))
    A = np.array(cols).T
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return vt
    return vt[s <= COMMUTANT_RTOL * s[0]]


def _hs_orthonormal(mats):
    """Orthonormalize Hermitian matrices in the Hilbert-Schmidt metric."""
    if not mats:
        return []
    d = mats[0].shape[0]
    M = np.array([m.reshape(-1) for m in mats])
    X = np.concatenate([M.real, M.imag], axis=1)
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    rows = vt[s > 1e-10 * s[0]] if s.size and s[0] > 0 else vt[:0]
    out = []
    for r in rows:
        re, im = r[:d * d], r[d * d:]
        m = (re + 1j * im).reshape(d, d)
        out.append(0.5 * (m + m.conj().T))
    return out


def commutant_restrict(basis, H_G):
    """Orthonormal basis of span(basis) intersected with the commutant of H_G."""
    ns = _commutant_coefficients(basis, H_G)
    combos = [sum(c * m for c, m in zip(row, basis.matrices)) for row in ns]
    mats = _hs_orthonormal(combos)
    terms = [pauli_decompose(m) for m in mats]
    return OperatorBasis(n_qubits=basis.n_qubits, terms=terms, matrices=mats)


def _rref(A, tol=1e-9):
    """Reduced row echelon form with partial pivoting; returns (rows, pivots)."""
    A = np.array(A, dtype=float)
    nr, nc = A.shape
    r = 0
    pivots = []
    for c in range(nc):
        if r >= nr:
            break
        p = np.argmax(np.abs(A[r:, c])) + r
        if abs(A[p, c]) < tol:
            continue
        A[[r, p]] = A[[p, r]]
        A[r] = A[r] / A[r, c]
        for k in range(nr):
            if k != r and abs(A[k, c]) > tol:
                A[k] -= A[k, c] * A[r]
        pivots.append(c)
        r += 1
    A[np.abs(A) < tol] = 0.0
    return A[:r], pivots


def commutant_directions(basis, H_G, drop_identity=False):
    """Commutant of H_G within span(basis), in sparse canonical coordinates.

    Where commutant_restrict returns an orthonormal frame, this returns
    the same subspace re-expressed by row reduction over the original
    family elements, so each direction touches as few family elements as
    possible and coefficients stay O(1). These are the coordinates the
    trainer optimizes over. With drop_identity, directions proportional
    to the identity are removed: they only shift the global phase of
    exp(iH), which the training objective cannot see.
    """
    ns = _commutant_coefficients(basis, H_G)
    rows, _ = _rref(ns)
    d = basis.dim
    out_terms = []
    for row in rows:
        merged = {}
        for c, element in zip(row, basis.terms):
            if c == 0.0:
                continue
            for label, coeff in element:
                merged[label] = merged.get(label, 0.0) + c * coeff
        terms = [(l, v) for l, v in merged.items() if abs(v) > 1e-12]
        M = terms_to_matrix(terms)
        if drop_identity:
            tr = np.trace(M) / d
            if abs(tr) > 0 and np.max(np.abs(M - tr * np.eye(d))) <= 1e-10:
                continue
        out_terms.append(terms)
    return OperatorBasis(n_qubits=basis.n_qubits, terms=out_terms)


@dataclass
class SpectralReport:
    """Outcome of checking one Hamiltonian against one target gate."""

    principal_generator: np.ndarray
    commutant_dimension: int
    reduced_basis: OperatorBasis
    eigenphase_residuals: np.ndarray
    verdicts: dict

    @property
    def passed(self):
        return all(v for v in self.verdicts.values() if v is not None)

    def to_dict(self):
        try:
            gen = [format_term(l, c)
                   for l, c in pauli_decompose(self.principal_generator)]
        except ValueError:
            gen = None
        return {
            "principal_generator": gen,
            "commutant_dimension": self.commutant_dimension,
            "residuals": [float(r) for r in self.eigenphase_residuals],
            "verdicts": dict(self.verdicts),
        }


def lattice_residuals(values):
    """Distance of each value to the nearest point of 2*pi*Z."""
    values = np.asarray(values, dtype=float)
    return np.abs(values - 2 * np.pi * np.round(values / (2 * np.pi)))


def verify_solution(H, g, tol=LATTICE_TOL, basis=None):
    """Check exp(iH) = G entrywise (no global-phase slack) plus the two
    spectral requirements: [H, H_G] = 0 and Eig(H - H_G) on 2*pi*Z.

    With a basis, additionally checks H lies in its span and reports
    the commutant dimension of the basis under H_G.
    """
    H = np.asarray(H, dtype=complex)
    if np.max(np.abs(H - H.conj().T)) > 1e-10:
        raise ValueError("candidate Hamiltonian is not Hermitian")
    g = _as_gate(g)
    if H.shape != g.matrix.shape:
        raise ValueError(f"dimension mismatch: {H.shape} vs {g.matrix.shape}")

    H_G = principal_generator(g)
    matches = bool(np.max(np.abs(_expi(H) - g.matrix)) <= tol)
    commutes = bool(np.max(np.abs(commutator(H, H_G))) <= COMMUTE_TOL)
    residuals = lattice_residuals(np.linalg.eigvalsh(H - H_G))
    lattice = bool(np.max(residuals) <= tol)

    physical = None
    dim = None
    reduced = None
    if basis is not None:
        reduced = commutant_restrict(basis, H_G)
        dim = len(reduced)
        V = np.array([m.reshape(-1) for m in basis.matrices]).T
        coeff = np.linalg.lstsq(V, H.reshape(-1), rcond=None)[0]
        recon = (V @ coeff).reshape(H.shape)
        physical = bool(np.max(np.abs(recon - H)) <= 1e-8 * max(1.0, np.max(np.abs(H))))

    return SpectralReport(
        principal_generator=H_G,
        commutant_dimension=dim,
        reduced_basis=reduced,
        eigenphase_residuals=residuals,
        verdicts={"physical": physical, "commutes": commutes,
                  "lattice": lattice, "matches_gate": matches},
    )


@dataclass(frozen=True)
class NuAssignment:
    """Integer labels selecting one member of the Toffoli solution family."""

    nu1: int
    nu2: int
    nu3: int
    nu4: int

    def __post_init__(self):
        for v in (self.nu1, self.nu2, self.nu3, self.nu4):
            if v != int(v):
                raise ValueError(f"assignment entries must be integers, got {v}")

    @property
    def c(self):
        d12 = self.nu1 - self.nu2
        d34 = self.nu3 - self.nu4
        return -((1 + 4 * d12) ** 2 - (4 * d34) ** 2)

    @property
    def valid(self):
        return self.c >= 0 and self.nu3 != self.nu4


def toffoli_family(nu):
    """Closed-form two-local Hamiltonian with exp(iH) = Toffoli.

    nu is a NuAssignment, a 4-tuple of integers, or a single non-zero
    integer v meaning (0, 0, 0, v); each valid choice gives a distinct
    exact solution. Validity requires c(nu) >= 0, which cannot hold
    when nu3 = nu4.
    """
    if isinstance(nu, (int, np.integer)):
        nu = NuAssignment(0, 0, 0, int(nu))
    elif not isinstance(nu, NuAssignment):
        nu = NuAssignment(*(int(x) for x in nu))
    if not nu.valid:
        raise ValueError(
            f"invalid assignment {nu}: c = {nu.c} must be >= 0, "
            "which requires nu3 != nu4")
    n1, n2, n3, n4 = nu.nu1, nu.nu2, nu.nu3, nu.nu4
    root = abs(n3 - n4)
    sc = np.sqrt(float(nu.c))
    terms = [
        ("III", float(1 + 4 * (n1 + n2 + 2 * n3 + root))),
        ("ZII", -1.0), ("IZI", -1.0),
        ("ZIX", 1.0), ("IZX", 1.0),
        ("IIX", float(-2 - 8 * n1 + 8 * n2)),
        ("ZZI", float(4 * (0.25 + n1 + n2 - 2 * n3 - root))),
        ("IZZ", sc), ("ZIZ", -sc),
    ]
    return (np.pi / 8) * terms_to_matrix(terms)


def _builtin_solution_terms():
    s3 = 5 * np.sqrt(3.0)
    r143 = np.sqrt(143 / 5)
    r7 = 6 * np.sqrt(7 / 5)
    fredkin = [
        ("III", 3.0), ("ZII", 4.0),
        ("IXI", r143), ("IIX", r143), ("XXI", s3), ("XIX", s3),
        ("IXX", -3.0), ("IYY", -3.0), ("IZZ", -3.0),
        ("ZZI", r7), ("ZIZ", r7),
    ]
    alt = [
        ("III", 9.0), ("IIX", 6.0), ("ZII", -1.0), ("IZI", -1.0),
        ("ZZI", 1.0), ("ZIX", 1.0), ("IZX", 1.0),
        ("ZIZ", -np.sqrt(7.0)), ("IZZ", np.sqrt(7.0)),
    ]
    zplus = [
        ("III", 9.0), ("IIX", -7.0), ("IIZ", np.sqrt(15.0)),
        ("ZII", -1.0), ("IZI", -1.0), ("ZZI", 1.0),
        ("ZIX", 2.5), ("IZX", 2.5),
        ("ZIZ", np.sqrt(15.0) / 2), ("IZZ", np.sqrt(15.0) / 2),
    ]
    scale = np.pi / 8
    return {
        "fredkin_eq7": ("fredkin", [(l, scale * c) for l, c in fredkin]),
        "toffoli_alt_sm": ("toffoli", [(l, scale * c) for l, c in alt]),
        "toffoli_zplus_sm": ("toffoli", [(l, scale * c) for l, c in zplus]),
    }


_BUILTIN_SOLUTIONS = _builtin_solution_terms()


def builtin_solution(name, with_terms=False):
    """A named closed-form solution Hamiltonian (see builtin_solution_names).

    Returns the dense operator; with_terms additionally returns the
    (gate_name, pauli_terms) pair it was built from.
    """
    if name not in _BUILTIN_SOLUTIONS:
        raise ValueError(
            f"unknown solution {name!r}; have {sorted(_BUILTIN_SOLUTIONS)}")
    gate_name, terms = _BUILTIN_SOLUTIONS[name]
    H = terms_to_matrix(terms)
    if with_terms:
        return H, (gate_name, terms)
    return H


def builtin_solution_names():
    return tuple(sorted(_BUILTIN_SOLUTIONS))


@dataclass
class ScanVerdict:
    """Result of an integer lattice-assignment search.

    feasible means a witness Hamiltonian in the span was found with
    Eig(H - H_G) = 2*pi*nu and exp(iH) = G, both within 1e-8. exhaustive
    is True when infeasibility is proven for every integer assignment
    (a rational obstruction); otherwise an infeasible verdict only
    covers the scanned |nu| <= nu_max box.
    """

    feasible: bool
    exhaustive: bool
    nu_max: int
    assignments_tried: int
    witness: np.ndarray = None
    witness_assignment: tuple = None
    obstruction: dict = None

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "exhaustive": self.exhaustive,
            "nu_max": self.nu_max,
            "assignments_tried": self.assignments_tried,
            "witness_assignment": self.witness_assignment,
            "obstruction": self.obstruction,
        }


def _pairwise_commuting(mats, tol=COMMUTE_TOL):
    for a, b in itertools.combinations(mats, 2):
        if np.max(np.abs(commutator(a, b))) > tol:
            return False
    return True


def _joint_eigenvectors(H_G, mats, tol=1e-8):
    """Common eigenbasis of H_G and a pairwise-commuting operator list.

    Sequential refinement: eigenspaces of H_G are split by each operator
    in turn, so every returned column is an eigenvector of all of them.
    """
    d = H_G.shape[0]
    w, V = np.linalg.eigh(H_G)
    blocks = []
    start = 0
    for k in range(1, d + 1):
        if k == d or w[k] - w[start] > tol:
            blocks.append(list(range(start, k)))
            start = k
    for O in mats:
        new_blocks = []
        for idx in blocks:
            Vb = V[:, idx]
            B = Vb.conj().T @ O @ Vb
            ev, W = np.linalg.eigh(0.5 * (B + B.conj().T))
            V[:, idx] = Vb @ W
            s = 0
            for k in range(1, len(ev) + 1):
                if k == len(ev) or ev[k] - ev[s] > tol:
                    new_blocks.append([idx[j] for j in range(s, k)])
                    s = k
        blocks = new_blocks
    return V


def _rationalize(x, max_den=10 ** 6, tol=1e-8):
    from sympy import Rational
    q = Rational(float(x)).limit_denominator(max_den)
    if abs(float(q) - float(x)) > tol:
        return None
    return q


def _rational_obstruction(E, theta):
    """Exact linear obstruction to E lam = theta + 2 pi nu over integer nu.

    Left-null vectors u of E force u . nu = -u . theta / (2 pi). When u
    rationalizes to integers and the forced value is a non-integer
    rational, no integer assignment can work, closing the search for
    every nu. Returns the canonicalized obstruction or None.
    """
    u_, s_, vt_ = np.linalg.svd(E.T, full_matrices=True)
    rank = int(np.sum(s_ > 1e-10 * s_[0])) if s_.size and s_[0] > 0 else 0
    left_null = vt_[rank:]
    if left_null.shape[0] == 0:
        return None
    # pivot-normalized rows rationalize cleanly when the space is rational
    rows, _ = _rref(left_null)

    th = [_rationalize(t / np.pi) for t in theta]
    if any(q is None for q in th):
        return None

    for u in rows:
        ru = [_rationalize(x) for x in u]
        if any(q is None for q in ru):
            continue
        den = 1
        for q in ru:
            den = den * q.q // gcd(den, q.q)
        ints = [int(q * den) for q in ru]
        g = 0
        for i in ints:
            g = gcd(g, abs(i))
        if g > 1:
            ints = [i // g for i in ints]
        value = -sum(i * q for i, q in zip(ints, th)) / 2
        if value.is_integer:
            continue
        if value > 0:
            value = -value
            ints = [-i for i in ints]
        expr = " + ".join(f"{i}*nu[{k}]" for k, i in enumerate(ints) if i)
        return {
            "coefficients": ints,
            "value": str(value),
            "text": f"{expr} = {value} has no integer solution".replace("+ -", "- "),
        }
    return None


def _scan_abelian(basis, g, H_G, nu_max):
    stack = np.array(basis.matrices)
    V = _joint_eigenvectors(H_G, basis.matrices)
    theta = np.real(np.einsum("ij,ij->j", V.conj(), H_G @ V))
    E = np.real(np.einsum("ij,kil,lj->jk", V.conj(), stack, V))

    rows = [tuple(r) for r in np.round(np.column_stack([E, theta]), 9)]
    slots = sorted(set(rows), reverse=True)
    keep = []
    seen = set()
    for j, r in enumerate(rows):
        if r not in seen:
            seen.add(r)
            keep.append(j)
    keep.sort(key=lambda j: slots.index(rows[j]))
    E, theta = E[keep], theta[keep]
    m = len(keep)

    obstruction = _rational_obstruction(E, theta)
    if obstruction is not None:
        return ScanVerdict(feasible=False, exhaustive=True, nu_max=nu_max,
                           assignments_tried=0, obstruction=obstruction)

    pinv = np.linalg.pinv(E)
    tried = 0
    for nu in sorted(itertools.product(range(-nu_max, nu_max + 1), repeat=m),
                     key=lambda t: sum(abs(x) for x in t)):
        tried += 1
        rhs = theta + 2 * np.pi * np.array(nu, dtype=float)
        lam = pinv @ rhs
        if np.max(np.abs(E @ lam - rhs)) > 1e-8:
            continue
        H = np.tensordot(lam, stack, axes=1)
        if np.max(np.abs(_expi(H) - g.matrix)) <= 1e-8:
            return ScanVerdict(feasible=True, exhaustive=False, nu_max=nu_max,
                               assignments_tried=tried, witness=H,
                               witness_assignment=tuple(int(x) for x in nu))
    return ScanVerdict(feasible=False, exhaustive=False, nu_max=nu_max,
                       assignments_tried=tried)


def _scan_nonabelian(basis, g, H_G, nu_max, iters, restarts, seed):
    """Alternating projections between the interaction span and the set of
    operators block-diagonal over the H_G eigenspaces with block spectra
    theta + 2 pi nu, one seeded run per per-block integer multiset.
    """
    Q = _hs_orthonormal(basis.matrices)
    w, V = np.linalg.eigh(H_G)
    th = np.round(w, 9)
    uniq = sorted(set(th))
    blocks = [(t, np.where(th == t)[0]) for t in uniq]

    per_block = [
        list(itertools.combinations_with_replacement(
            range(-nu_max, nu_max + 1), len(idx)))
        for _, idx in blocks
    ]
    assignments = sorted(itertools.product(*per_block),
                         key=lambda a: sum(abs(x) for ms in a for x in ms))
    children = np.random.SeedSequence(seed).spawn(len(assignments) * restarts)

    def project_span(M):
        out = np.zeros_like(M)
        for q in Q:
            out += np.real(np.sum(q.conj() * M)) * q
        return out

    def project_spectrum(M, assignment):
        out = np.zeros_like(M)
        for (t, idx), ms in zip(blocks, assignment):
            Vb = V[:, idx]
            B = Vb.conj().T @ M @ Vb
            ev, W = np.linalg.eigh(0.5 * (B + B.conj().T))
            target = t + 2 * np.pi * np.array(sorted(ms), dtype=float)
            out += Vb @ ((W * target) @ W.conj().T) @ Vb.conj().T
        return out

    tried = 0
    for ai, a in enumerate(assignments):
        for r in range(restarts):
            rng = np.random.default_rng(children[ai * restarts + r])
            M = sum(c * q for c, q in zip(rng.normal(size=len(Q)) * np.pi, Q))
            resid = np.inf
            for _ in range(iters):
                S = project_spectrum(M, a)
                M = project_span(S)
                resid = np.linalg.norm(S - M)
                if resid <= 1e-10:
                    break
            tried += 1
            if resid <= 1e-8 and np.max(np.abs(_expi(M) - g.matrix)) <= 1e-8:
                flat = tuple(int(x) for ms in a for x in sorted(ms))
                return ScanVerdict(feasible=True, exhaustive=False,
                                   nu_max=nu_max, assignments_tried=tried,
                                   witness=M, witness_assignment=flat)
    return ScanVerdict(feasible=False, exhaustive=False, nu_max=nu_max,
                       assignments_tried=tried)


def integer_infeasibility_scan(basis, g, nu_max, iters=400, restarts=3,
                               seed=20260816):
    """Search for H in span(basis) with Eig(H - H_G) on 2 pi Z and
    exp(iH) = G, over integer assignments bounded by nu_max.

    The basis must already commute with H_G. Pairwise-commuting bases
    get an exact linear treatment per joint eigenvector, including a
    rational-obstruction certificate that can close the search for all
    integers; otherwise a seeded alternating-projection search runs per
    assignment, and an infeasible verdict certifies only the scanned box.
    """
    g = _as_gate(g)
    if nu_max < 1:
        raise ValueError("nu_max must be >= 1")
    H_G = principal_generator(g)
    worst = max(np.max(np.abs(commutator(O, H_G))) for O in basis.matrices)
    if worst > COMMUTE_TOL:
        raise ValueError(
            f"basis does not commute with the principal generator "
            f"(max commutator entry {worst:.2e}); reduce it first")
    if _pairwise_commuting(basis.matrices):
        return _scan_abelian(basis, g, H_G, nu_max)
    return _scan_nonabelian(basis, g, H_G, nu_max, iters, restarts, seed)
