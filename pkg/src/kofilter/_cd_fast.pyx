# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-descent kernel for the Gram-form LASSO objective.

    f(b) = b' G b - 2 c' b + lam * ||b||_1

Cyclic sweeps in fixed coordinate order; q = G @ b is maintained
incrementally so a full sweep costs O(d^2).  Must stay semantically
identical to ``kofilter._cd_py.cd_gram_sweeps``.
"""

import numpy as np


def cd_gram_sweeps(const double[:, ::1] G, const double[::1] c, double lam,
                   double tol, int max_sweeps, double[::1] b):
    cdef int d = b.shape[0]
    cdef double[::1] q = np.asarray(G) @ np.asarray(b)
    cdef double half_lam = 0.5 * lam
    cdef int sweeps = 0
    cdef double max_change = 0.0
    cdef int j, k, s
    cdef double gjj, z, bj_new, step, astep

    with nogil:
        for s in range(max_sweeps):
            sweeps += 1
            max_change = 0.0
            for j in range(d):
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                z = c[j] - q[j] + gjj * b[j]
                if z > half_lam:
                    bj_new = (z - half_lam) / gjj
                elif z < -half_lam:
                    bj_new = (z + half_lam) / gjj
                else:
                    bj_new = 0.0
                step = bj_new - b[j]
                if step != 0.0:
                    b[j] = bj_new
                    for k in range(d):
                        q[k] += G[j, k] * step
                    astep = step if step > 0.0 else -step
                    if astep > max_change:
                        max_change = astep
            if max_change < tol:
                break
    return sweeps, max_change
