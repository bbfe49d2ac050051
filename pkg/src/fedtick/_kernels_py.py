"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def quadratic_round(x, A, B, eta, k, noise):
    m, d = B.shape
    out = np.empty((m, d))
    first = np.empty(m)
    for c in range(m):
        cur = np.array(x, dtype=np.float64)
        Ac = A[c]
        bc = B[c]
        for step in range(k):
            diff = cur - bc
            g = Ac @ diff
            if step == 0:
                first[c] = 0.5 * float(diff @ g)
            cur -= eta * (g + noise[c, step])
        out[c] = cur
    return out, first


def k_rounds_total(k0, rounds):
    total = 0
    k = k0
    k0_cubed = k0**3
    for r in range(1, rounds + 1):
        while k > 1 and (k - 1) ** 3 * r >= k0_cubed:
            k -= 1
        total += k
    return total
