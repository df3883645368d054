# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled implementation of the training hot path.

Same contract as _pykernels.fidelity_grad_batch, with the
eigendecomposition done in-place through LAPACK zheevd and the
divided-difference contractions hand-rolled. Matrices are tiny
(d <= 16), so the win is avoiding per-call temporaries and letting
C loops chew through the batch.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND = "compiled"

cdef double CLUSTER_TOL = 1e-9


cdef int _eigh_rows(double complex[:, ::1] R, double[::1] w,
                    double complex[::1] work, double[::1] rwork,
                    int[::1] iwork) nogil:
    """Diagonalize in place. On entry R holds a Hermitian H row-major;
    on exit row j of R is the j-th left eigenrow, i.e. R = V^dag with
    H = V diag(w) V^dag. Works because the row-major buffer is seen by
    LAPACK as H^T = conj(H), whose eigenvectors are conj(V columns).
    """
    cdef int n = R.shape[0]
    cdef int lwork = work.shape[0]
    cdef int lrwork = rwork.shape[0]
    cdef int liwork = iwork.shape[0]
    cdef int info = 0
    zheevd("V", "L", &n, &R[0, 0], &n, &w[0], &work[0], &lwork,
           &rwork[0], &lrwork, &iwork[0], &liwork, &info)
    return info


def fidelity_grad_batch(Os, lam, G, psis):
    """Per-state fidelities and exact lambda-gradients; see _pykernels."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] Os_ = \
        np.ascontiguousarray(Os, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lam_ = \
        np.ascontiguousarray(lam, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] G_ = \
        np.ascontiguousarray(G, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] psis_ = \
        np.ascontiguousarray(np.atleast_2d(psis), dtype=np.complex128)

    cdef int p = Os_.shape[0]
    cdef int d = Os_.shape[1]
    cdef int B = psis_.shape[0]

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Rbuf = np.zeros((d, d), dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.zeros(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] work = \
        np.zeros(2 * d + d * d + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rwork = \
        np.zeros(1 + 5 * d + 2 * d * d, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] iwork = \
        np.zeros(3 + 5 * d, dtype=np.int32)

    cdef cnp.ndarray[cnp.complex128_t, ndim=1] e = np.zeros(d, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] L = np.zeros((d, d), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] Ot = np.zeros((p, d, d), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] T1 = np.zeros((d, d), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] W = np.zeros((d, d), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] pt = np.zeros(d, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ft = np.zeros(d, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] phi = np.zeros(d, dtype=np.complex128)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] fids = np.zeros(B, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grads = np.zeros((B, p), dtype=np.float64)

    cdef double complex[:, :, ::1] Osv = Os_
    cdef double complex[:, ::1] Rv = Rbuf, Gv = G_, Lv = L, T1v = T1, Wv = W, Pv = psis_
    cdef double complex[:, :, ::1] Otv = Ot
    cdef double complex[::1] ev = e, ptv = pt, ftv = ft, phiv = phi
    cdef double[::1] wv = w, lamv = lam_, fv = fids
    cdef double[:, ::1] gv = grads

    cdef int a, b, i, j, k, q, info
    cdef double gap
    cdef double complex A, S, acc
    cdef double complex one = 1, zero = 0

    # H = sum lam_q O_q, then R <- V^dag in place
    for i in range(d):
        for j in range(d):
            acc = 0
            for q in range(p):
                acc = acc + lamv[q] * Osv[q, i, j]
            Rv[i, j] = acc
    info = _eigh_rows(Rv, wv, work, rwork, iwork)
    if info != 0:
        raise RuntimeError(f"zheevd failed with info={info}")

    for a in range(d):
        ev[a] = cos(wv[a]) + 1j * sin(wv[a])
    for a in range(d):
        for b in range(d):
            gap = wv[a] - wv[b]
            if gap < CLUSTER_TOL and gap > -CLUSTER_TOL:
                Lv[a, b] = 1j * ev[a]
            else:
                Lv[a, b] = (ev[a] - ev[b]) / gap

    # Ot_q = R O_q R^dag. BLAS sees the row-major buffers transposed,
    # so compute conj(R) O^T R^T column-major; reading the result
    # row-major undoes the transpose.
    for q in range(p):
        zgemm("C", "N", &d, &d, &d, &one, &Rv[0, 0], &d,
              &Osv[q, 0, 0], &d, &zero, &T1v[0, 0], &d)
        zgemm("N", "N", &d, &d, &d, &one, &T1v[0, 0], &d,
              &Rv[0, 0], &d, &zero, &Otv[q, 0, 0], &d)

    for b in range(B):
        for i in range(d):
            acc = 0
            for k in range(d):
                acc = acc + Gv[i, k] * Pv[b, k]
            phiv[i] = acc
        for i in range(d):
            acc = 0
            for k in range(d):
                acc = acc + Rv[i, k] * Pv[b, k]
            ptv[i] = acc
            acc = 0
            for k in range(d):
                acc = acc + Rv[i, k] * phiv[k]
            ftv[i] = acc
        A = 0
        for i in range(d):
            A = A + ftv[i].conjugate() * ev[i] * ptv[i]
        fv[b] = A.real * A.real + A.imag * A.imag
        for i in range(d):
            for j in range(d):
                Wv[i, j] = ftv[i].conjugate() * Lv[i, j] * ptv[j]
        for q in range(p):
            S = 0
            for i in range(d):
                for j in range(d):
                    S = S + Otv[q, i, j] * Wv[i, j]
            gv[b, q] = 2.0 * (A.conjugate() * S).real

    return fids, grads
