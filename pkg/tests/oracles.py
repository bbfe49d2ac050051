"""Independent reference computations used as test oracles.

Nothing here imports the package's numerical code, so agreement with it is
evidence rather than tautology.
"""
from __future__ import annotations

import math

import numpy as np


def k_rounds_sum(k0: int, rounds: int) -> int:
    """sum_r ceil(k0 / r^(1/3)) by exact integer search per round."""
    total = 0
    for r in range(1, rounds + 1):
        k = 1
        while k**3 * r < k0**3:
            k += 1
        total += k
    return total


def k_rounds_sum_fast(k0: int, rounds: int) -> int:
    """Same sum grouped by value: K_r = k exactly for r in ((k0/k)^3, (k0/(k-1))^3]."""
    total = 0
    for k in range(1, k0 + 1):
        # rounds where the smallest admissible K is k: (k-1)^3 r < k0^3 <= k^3 r
        lo = -(-(k0**3) // k**3)  # ceil(k0^3 / k^3)
        hi = (k0**3 - 1) // (k - 1) ** 3 if k > 1 else rounds
        lo, hi = max(lo, 1), min(hi, rounds)
        if hi >= lo:
            total += k * (hi - lo + 1)
    return total


def power_iteration_eigs(A, iters=20000, tol=1e-15):
    """All eigenvalues of a symmetric PD matrix by power iteration plus deflation."""
    A = np.array(A, dtype=np.float64)
    d = A.shape[0]
    rng = np.random.default_rng(12345)
    eigs = []
    M = A.copy()
    for _ in range(d):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = M @ v
            nrm = np.linalg.norm(w)
            if nrm == 0:
                break
            w /= nrm
            new = float(w @ M @ w)
            if abs(new - lam) <= tol * max(1.0, abs(new)) and np.linalg.norm(w - v) < 1e-12:
                lam = new
                v = w
                break
            lam, v = new, w
        eigs.append(lam)
        M = M - lam * np.outer(v, v)
    return np.sort(np.array(eigs))


def central_fd(f, x, h=1e-6):
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rolling_means(stream, window):
    """Naive re-averaging of the last ``window`` values after each push."""
    out = []
    for i in range(len(stream)):
        if i + 1 < window:
            out.append(None)
        else:
            chunk = stream[i + 1 - window : i + 1]
            out.append(sum(chunk) / window)
    return out


def plateau_sim(history, patience, min_rel):
    """Direct simulation of the patience rule on a maximised metric.

    Returns the 1-based evaluation index at which it fires, or None.
    """
    best = None
    stale = 0
    for i, v in enumerate(history, start=1):
        if best is None or v > best + min_rel * abs(best):
            best, stale = v, 0
            continue
        stale += 1
        if stale >= patience:
            return i
    return None


def gd_minimize(grad, x0, step, tol=1e-13, max_iter=1_000_000):
    x = np.array(x0, dtype=np.float64)
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) < tol:
            break
        x = x - step * g
    return x


def walltime(megabits, down, up, beta, ks):
    """Scalar-loop evaluation of the per-round time sum."""
    total = 0.0
    for k in ks:
        total += megabits / down + k * beta + megabits / up
    return total


def restart_value(L, mu, gamma, g2, sigw, fstar, f0, n, comm, beta, w, k, eta):
    kappa = L / mu
    drive = kappa * f0 - fstar
    z = sigw + 6 * L * gamma + (8 + 4 / n) * g2 * k * k
    return 2 * kappa * drive / (eta * w * k) * (comm + beta * k) + eta * kappa * L * z


def theorem1_value(L, mu, gamma, g2, sigw, fstar, f0, n, eta, ks):
    kappa = L / mu
    T = sum(ks)
    ratio = sum(k**3 for k in ks) / T
    z = sigw + 6 * L * gamma + (8 + 4 / n) * g2 * ratio
    return 2 * kappa * (kappa * f0 - fstar) / (eta * T) + eta * kappa * L * z


def sequential_fedavg_quadratic(A, centers, x0, eta, k, rounds, participants):
    """Scalar-loop FedAvg on quadratics with no noise; ``participants[r]`` lists client ids."""
    x = np.array(x0, dtype=np.float64)
    d = x.size
    for r in range(rounds):
        acc = np.zeros(d)
        ids = participants[r]
        for c in ids:
            y = x.copy()
            for _ in range(k):
                g = np.zeros(d)
                for i in range(d):
                    for j in range(d):
                        g[i] += A[i][j] * (y[j] - centers[c][j])
                y = y - eta * g
            acc += y
        x = acc / len(ids)
    return x


def stationary_k(drive, eta, L, n, g2, comm, w):
    """Root of d/dK of the restart bound, by bisection on the derivative."""
    def dfdk(k):
        return -2 * drive * comm / (eta * w * k * k) * 1.0 + eta * L * (8 + 4 / n) * g2 * 2 * k

    lo, hi = 1e-12, 1.0
    while dfdk(hi) < 0:
        hi *= 2
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if dfdk(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ceil_cuberoot_ratio(ratio, k0):
    return math.ceil(ratio ** (1 / 3) * k0)
