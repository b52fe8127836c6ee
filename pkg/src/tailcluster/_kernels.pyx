# cython: language_level=3
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

BACKEND = "cython"


def path_stats(x, double alpha, double tau, double b, Py_ssize_t center):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = xv.shape[1], i, k
    s_alpha_a = np.zeros(n)
    b_tau_a = np.zeros(n)
    sup_a = np.zeros(n)
    argsup_a = np.full(n, -1, dtype=np.int64)
    first_a = np.full(n, -1, dtype=np.int64)
    after_a = np.zeros(n)
    from_a = np.zeros(n)
    cdef double[::1] s_alpha = s_alpha_a, b_tau = b_tau_a, sup = sup_a
    cdef double[::1] after = after_a, frm = from_a
    cdef cnp.int64_t[::1] argsup = argsup_a, first = first_a
    cdef double v, bv, s, bt, mx, aft
    cdef Py_ssize_t am, fe
    cdef bint alpha_one = alpha == 1.0
    with nogil:
        for i in range(n):
            s = 0.0
            bt = 0.0
            mx = 0.0
            aft = 0.0
            am = -1
            fe = -1
            for k in range(p):
                v = xv[i, k]
                if v == 0.0:
                    continue
                if alpha_one:
                    s += v
                else:
                    s += pow(v, alpha)
                bv = b * v
                if bv >= 1.0:
                    bt += pow(bv, tau)
                if v > mx:
                    mx = v
                    am = k
                if fe < 0 and v > 1.0:
                    fe = k
                if k > center and v > aft:
                    aft = v
            s_alpha[i] = s
            b_tau[i] = bt
            sup[i] = mx
            argsup[i] = am
            first[i] = fe
            after[i] = aft
            v = xv[i, center]
            frm[i] = v if v > aft else aft
    return s_alpha_a, b_tau_a, sup_a, argsup_a, first_a, after_a, from_a


def dehaan_update(m, gamma, incr, z, double alpha, thresh):
    cdef double[:, ::1] mv = m
    cdef double[::1] gv = gamma
    cdef double[:, ::1] ev = np.ascontiguousarray(incr, dtype=np.float64)
    cdef double[:, :, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(thresh, dtype=np.float64)
    cdef Py_ssize_t n = ev.shape[0], T = ev.shape[1], k = zv.shape[2], i, j, q
    stopped_a = np.zeros(n, dtype=bool)
    used_a = np.zeros(n, dtype=np.int64)
    cdef cnp.npy_bool[::1] stopped = stopped_a.view(np.uint8)
    cdef cnp.int64_t[::1] used = used_a
    cdef double g, w, c, mmin, inv = -1.0 / alpha
    with nogil:
        for i in range(n):
            g = gv[i]
            for j in range(T):
                g = g + ev[i, j]
                w = pow(g, inv)
                mmin = 1e308
                for q in range(k):
                    c = w * zv[i, j, q]
                    if c > mv[i, q]:
                        mv[i, q] = c
                    if mv[i, q] < mmin:
                        mmin = mv[i, q]
                if mmin > 0.0 and g * pow(mmin, alpha) > th[i]:
                    stopped[i] = 1
                    used[i] = j + 1
                    break
            if not stopped[i]:
                used[i] = T
            gv[i] = g
    return stopped_a, used_a
