"""Pure-numpy coordinate-descent kernel (fallback for the compiled extension).

Semantics are identical to ``kofilter._cd_fast.cd_gram_sweeps``: cyclic
coordinate descent on the Gram-form objective

    f(b) = b' G b - 2 c' b + lam * ||b||_1

visiting coordinates in fixed order 0..d-1, maintaining q = G @ b
incrementally, stopping when the largest coordinate change in a sweep falls
below ``tol`` or after ``max_sweeps`` sweeps.  ``b`` is updated in place.
"""


def cd_gram_sweeps(G, c, lam, tol, max_sweeps, b):
    d = b.shape[0]
    q = G @ b
    half_lam = 0.5 * lam
    sweeps = 0
    max_change = 0.0
    for _ in range(max_sweeps):
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
                q += G[j] * step
                if abs(step) > max_change:
                    max_change = abs(step)
        if max_change < tol:
            break
    return sweeps, max_change
