# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tuple accumulation for the order-n cumulant sums."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, pow

cdef enum:
    MAXP = 16


cdef double _binom(int n, int k) noexcept nogil:
    cdef double r = 1.0
    cdef int i
    for i in range(k):
        r = r * (n - i) / (i + 1)
    return r


cdef int _partial_fractions(const long* labels, int npoles, const double* w,
                            long* out_lab, int* out_r, double* out_beta) noexcept nogil:
    cdef long uniq[MAXP]
    cdef int mult[MAXP]
    cdef double ser[MAXP]
    cdef double fac[MAXP]
    cdef double tmp[MAXP]
    cdef int nu = 0, i, u, v, k, kk, m, mb, nout = 0
    cdef double d, fact
    for i in range(npoles):
        for u in range(nu):
            if uniq[u] == labels[i]:
                mult[u] += 1
                break
        else:
            uniq[nu] = labels[i]
            mult[nu] = 1
            nu += 1
    for u in range(nu):
        m = mult[u]
        ser[0] = 1.0
        for k in range(1, m):
            ser[k] = 0.0
        for v in range(nu):
            if v == u:
                continue
            d = w[uniq[u]] - w[uniq[v]]
            mb = mult[v]
            for k in range(m):
                fac[k] = _binom(mb + k - 1, k) * (1.0 if k % 2 == 0 else -1.0) * pow(d, -mb - k)
            for k in range(m):
                tmp[k] = 0.0
                for kk in range(k + 1):
                    tmp[k] += ser[kk] * fac[k - kk]
            for k in range(m):
                ser[k] = tmp[k]
        fact = 1.0
        for k in range(m):
            if k > 0:
                fact *= k
            out_lab[nout] = uniq[u]
            out_r[nout] = k
            out_beta[nout] = ser[m - 1 - k] / fact
            nout += 1
    return nout


def accumulate(theta, cls, cls_energy, int n, int start, int stop):
    """Compiled counterpart of ``residues.accumulate_python``."""
    cdef cnp.ndarray[double, ndim=1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef cnp.ndarray[long, ndim=1] cl = np.ascontiguousarray(cls, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] w = np.ascontiguousarray(cls_energy, dtype=np.float64)
    cdef int nm = th.shape[0], kc = w.shape[0], nm1 = max(n - 1, 1)
    if n < 2 or n >= MAXP:
        raise ValueError("order out of range for the compiled kernel")
    cdef cnp.ndarray[double, ndim=2] sn = np.sin(th[:, None] + th[None, :])
    cdef cnp.ndarray[double, ndim=2] cs = np.cos(th[:, None] + th[None, :])
    cdef cnp.ndarray[double, ndim=3] acc_arr = np.zeros((kc, kc, nm1))
    cdef double[:, :, ::1] acc = acc_arr
    cdef double[:, ::1] S = sn
    cdef double[:, ::1] C = cs
    cdef long[::1] CL = cl
    cdef double* wp = &w[0]
    cdef long qq[MAXP]
    cdef long b1[MAXP]
    cdef long b2[MAXP]
    cdef long l1[MAXP]
    cdef long l2[MAXP]
    cdef int r1[MAXP]
    cdef int r2[MAXP]
    cdef double be1[MAXP]
    cdef double be2[MAXP]
    cdef int i, j, pos, n1, n2, x, x2, y
    cdef double head, amp, ax
    cdef bint done
    with nogil:
        for x in range(start, stop):
            qq[0] = x
            for i in range(1, n):
                qq[i] = 0
            done = False
            while not done:
                head = S[qq[n - 1], qq[0]]
                if head != 0.0:
                    for j in range(2, n + 1):
                        amp = head * S[qq[j - 2], qq[j - 1]]
                        for i in range(0, j - 2):
                            amp *= C[qq[i], qq[i + 1]]
                        for i in range(j - 1, n - 1):
                            amp *= C[qq[i], qq[i + 1]]
                        if amp == 0.0:
                            continue
                        for i in range(j - 1):
                            b1[i] = CL[qq[i]]
                        for i in range(j - 1, n):
                            b2[i - j + 1] = CL[qq[i]]
                        n1 = _partial_fractions(b1, j - 1, wp, l1, r1, be1)
                        n2 = _partial_fractions(b2, n - j + 1, wp, l2, r2, be2)
                        for x2 in range(n1):
                            ax = amp * be1[x2]
                            for y in range(n2):
                                acc[l1[x2], l2[y], r1[x2] + r2[y]] += ax * be2[y]
                # odometer over qq[1..n-1]
                pos = n - 1
                while pos >= 1:
                    qq[pos] += 1
                    if qq[pos] < nm:
                        break
                    qq[pos] = 0
                    pos -= 1
                if pos < 1:
                    done = True
    return acc_arr
