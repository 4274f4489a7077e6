# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training/scoring kernels.

Same contracts as ``_kernels_py``; the hot loops run without the GIL so
island workers scale on real threads.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log1p

cnp.import_array()

MAX_HALVINGS = 20
cdef int _MAX_HALVINGS = 20


cdef double _nll(double[::1] z, const double[::1] y, double[::1] w,
                 double l2, Py_ssize_t m, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0, zi, pen
    for i in range(m):
        zi = z[i]
        # log(1 + e^z) - y*z, computed stably on both signs of z
        if zi > 0.0:
            s += zi + log1p(exp(-zi)) - y[i] * zi
        else:
            s += log1p(exp(zi)) - y[i] * zi
    s /= m
    if l2 > 0.0:
        pen = 0.0
        for j in range(n):
            pen += w[j] * w[j]
        s += 0.5 * l2 * pen
    return s


cdef int _train_core(const double[:, ::1] X, const double[::1] y,
                     double learning_rate, int max_iters, double tolerance, double l2,
                     double[::1] w, double* b_out, double[::1] z,
                     double[::1] r, double[::1] gw, double[::1] w_new, double[::1] z_new,
                     int* iters_out, double* loss_out) noexcept nogil:
    cdef Py_ssize_t m = X.shape[0], n = X.shape[1]
    cdef Py_ssize_t i, j
    cdef int it, h, accepted, iters = 0
    cdef double b = 0.0, b_new, loss, loss_new, gb, ginf, step, dot

    loss = _nll(z, y, w, l2, m, n)
    for it in range(max_iters):
        gb = 0.0
        for j in range(n):
            gw[j] = 0.0
        for i in range(m):
            r[i] = (1.0 / (1.0 + exp(-z[i])) - y[i]) / m
            gb += r[i]
            for j in range(n):
                gw[j] += X[i, j] * r[i]
        ginf = fabs(gb)
        if l2 > 0.0:
            for j in range(n):
                gw[j] += l2 * w[j]
        for j in range(n):
            if fabs(gw[j]) > ginf:
                ginf = fabs(gw[j])
        if not (isfinite(loss) and isfinite(ginf)):
            return 1
        if ginf < tolerance:
            break
        step = learning_rate
        accepted = 0
        for h in range(_MAX_HALVINGS + 1):
            for j in range(n):
                w_new[j] = w[j] - step * gw[j]
            b_new = b - step * gb
            for i in range(m):
                dot = b_new
                for j in range(n):
                    dot += X[i, j] * w_new[j]
                z_new[i] = dot
            loss_new = _nll(z_new, y, w_new, l2, m, n)
            if loss_new <= loss:
                accepted = 1
                break
            step *= 0.5
        if not accepted:
            break
        for j in range(n):
            w[j] = w_new[j]
        b = b_new
        for i in range(m):
            z[i] = z_new[i]
        loss = loss_new
        iters += 1

    b_out[0] = b
    iters_out[0] = iters
    loss_out[0] = loss
    return 0


def lr_train(X, y, learning_rate, max_iters, tolerance, l2):
    """Full-batch gradient descent on the logistic loss from zero init.

    Returns (coef, intercept, iterations_accepted, final_loss); see the
    pure-Python kernel for the step-halving contract.
    """
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    yc = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] Xv = Xc
    cdef const double[::1] yv = yc
    cdef Py_ssize_t m = Xv.shape[0], n = Xv.shape[1]
    w_arr = np.zeros(n)
    cdef double[::1] w = w_arr
    cdef double[::1] z = np.zeros(m)
    cdef double[::1] r = np.empty(m)
    cdef double[::1] gw = np.empty(n)
    cdef double[::1] w_new = np.empty(n)
    cdef double[::1] z_new = np.empty(m)
    cdef double b = 0.0, loss = 0.0
    cdef int iters = 0, status
    cdef int mi = max_iters
    cdef double lr = learning_rate, tol = tolerance, lam = l2
    with nogil:
        status = _train_core(Xv, yv, lr, mi, tol, lam,
                             w, &b, z, r, gw, w_new, z_new, &iters, &loss)
    if status != 0:
        raise ArithmeticError("non-finite loss or gradient (check feature scaling)")
    return w_arr, b, iters, loss


def rank_auc(scores, labels):
    """Mann-Whitney AUC via rank sums with midrank tie handling, O(n log n)."""
    s = np.ascontiguousarray(scores, dtype=np.float64)
    lab = np.ascontiguousarray(labels, dtype=np.int64)
    order = np.argsort(s, kind="stable")
    cdef const double[::1] sv = s
    cdef const cnp.int64_t[::1] lv = lab
    cdef const cnp.intp_t[::1] ov = order
    cdef Py_ssize_t n = sv.shape[0]
    cdef Py_ssize_t i, j, k, n_pos = 0
    cdef long long grp_pos
    cdef double pos_rank_sum = 0.0, midrank

    for i in range(n):
        n_pos += lv[i]
    if n_pos == 0 or n_pos == n:
        raise ValueError("AUC undefined: both classes must be present")

    with nogil:
        i = 0
        while i < n:
            j = i + 1
            while j < n and sv[ov[j]] == sv[ov[i]]:
                j += 1
            # 0-based slots i..j-1 hold 1-based ranks i+1..j
            midrank = (i + j + 1) / 2.0
            grp_pos = 0
            for k in range(i, j):
                grp_pos += lv[ov[k]]
            pos_rank_sum += grp_pos * midrank
            i = j
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * (<double> (n - n_pos)))
