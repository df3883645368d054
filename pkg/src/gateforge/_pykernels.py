"""Reference numpy implementation of the training hot path.

The compiled twin in _fastkernels implements the same contract; the
dispatcher in kernels.py picks whichever is available. Keep the two in
numerical lockstep: the cross-backend test pins their agreement.
"""

import numpy as np

CLUSTER_TOL = 1e-9  # below this eigenvalue gap, use the analytic limit

BACKEND = "python"


def fidelity_grad_batch(Os, lam, G, psis):
    """Per-state fidelities |<psi|G^dag e^{iH}|psi>|^2 and their exact
    gradients in lambda, for a batch of states.

    Os: (p, d, d) Hermitian stack; lam: (p,); G: (d, d); psis: (B, d).
    Returns (fids (B,), grads (B, p)).

    The derivative of e^{iH} along O is V (L o (V^dag O V)) V^dag with
    H = V mu V^dag and L the divided-difference table of e^{i mu}.
    """
    Os = np.asarray(Os, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    G = np.asarray(G, dtype=complex)
    psis = np.atleast_2d(np.asarray(psis, dtype=complex))

    H = np.tensordot(lam, Os, axes=1)
    w, V = np.linalg.eigh(H)
    e = np.exp(1j * w)

    gap = w[:, None] - w[None, :]
    small = np.abs(gap) <= CLUSTER_TOL
    L = np.where(small, 1j * e[:, None],
                 (e[:, None] - e[None, :]) / np.where(small, 1.0, gap))

    # states and targets in the eigenbasis
    Pt = psis @ V.conj()                # rows are V^dag psi
    Ft = (psis @ G.T) @ V.conj()        # rows are V^dag G psi
    A = np.einsum("bi,i,bi->b", Ft.conj(), e, Pt)

    Ot = np.einsum("ki,pkl,lj->pij", V.conj(), Os, V, optimize=True)
    M = Ft.conj()[:, :, None] * L[None, :, :] * Pt[:, None, :]
    S = np.einsum("pij,bij->bp", Ot, M, optimize=True)

    fids = np.abs(A) ** 2
    grads = 2.0 * np.real(A.conj()[:, None] * S)
    return fids, grads
