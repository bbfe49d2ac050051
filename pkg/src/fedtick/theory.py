"""Convergence bounds for FedAvg with decaying local steps, and the K / eta
that minimise the restart bound, with brute-force grid oracles.

Notation: ``drive = kappa * F0 - F*`` (or ``F0 - F*`` with
``variant="appendix"``), ``comm = |x|/D + |x|/U`` and
``Z = sum_c p_c^2 sigma_c^2 + 6 L Gamma + (8 + 4/N) G^2 K^2``.

The restart bound for a constant K and eta over a time budget W is::

    2 kappa drive (comm + beta K) / (eta W K)  +  eta kappa L Z(K)

:func:`optimal_k` and :func:`optimal_eta` return its exact stationary points.
With ``printed=True`` they instead return the commonly quoted closed forms,
which omit the ``G^2`` factor (for K) and the ``1/K`` factor (for eta); the
two agree when ``G^2 = 1`` and ``K = 1`` respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from fedtick.federation import Federation, TheoryConstants, UnsupportedOperation
from fedtick.runtime_model import RuntimeConfig


class PremiseViolation(ValueError):
    """Inputs break a premise of the bound (step size too large, K increasing)."""


class DomainError(ValueError):
    """A closed form is undefined for these inputs."""


def make_constants(
    L: float,
    mu: float,
    *,
    gamma: float = 0.0,
    g_squared: float = 1.0,
    sigma_weighted: float = 0.0,
    f_star: float = 0.0,
    f0: float = 1.0,
    n_participants: int = 1,
    c_total: int | None = None,
) -> TheoryConstants:
    """TheoryConstants from raw numbers, for inputs not tied to a federation."""
    if not 0 < mu <= L:
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    return TheoryConstants(
        L=L,
        mu=mu,
        kappa=L / mu,
        gamma=gamma,
        g_squared=g_squared,
        sigma_weighted=sigma_weighted,
        f_star=f_star,
        x_star=None,
        n_participants=n_participants,
        c_total=c_total or n_participants,
        f0=f0,
    )


@dataclass(frozen=True)
class BoundInputs:
    constants: TheoryConstants
    eta: float
    f0: float | None = None
    k_sequence: tuple | None = None
    k: float | None = None
    runtime: RuntimeConfig | None = None
    w: float | None = None
    variant: str = "theorem"

    def __post_init__(self):
        if self.variant not in ("theorem", "appendix"):
            raise ValueError("variant must be 'theorem' or 'appendix'")
        if self.k_sequence is not None:
            object.__setattr__(self, "k_sequence", tuple(int(k) for k in self.k_sequence))

    @property
    def start_loss(self) -> float:
        return self.constants.f0 if self.f0 is None else self.f0

    @property
    def drive(self) -> float:
        c = self.constants
        if self.variant == "appendix":
            return self.start_loss - c.f_star
        return c.kappa * self.start_loss - c.f_star

    def with_(self, **changes) -> "BoundInputs":
        return replace(self, **changes)


def _check_eta(inp, eta=None):
    eta = inp.eta if eta is None else eta
    L = inp.constants.L
    if not eta > 0:
        raise PremiseViolation(f"eta must be > 0, got {eta}")
    if eta > 1.0 / (4.0 * L) * (1 + 1e-12):
        raise PremiseViolation(f"eta={eta} exceeds 1/(4L)={1 / (4 * L)}")


def _variance_term(c: TheoryConstants, k_sq):
    n = c.n_participants
    return c.sigma_weighted + 6.0 * c.L * c.gamma + (8.0 + 4.0 / n) * c.g_squared * k_sq


def theorem1_bound(inp: BoundInputs) -> float:
    """Bound on min_t E||grad F(x_t)||^2 after T = sum(K_r) iterations."""
    _check_eta(inp)
    ks = inp.k_sequence
    if not ks:
        raise ValueError("theorem1_bound needs a non-empty k_sequence")
    if min(ks) < 1:
        raise PremiseViolation("every K_r must be >= 1")
    if any(b > a for a, b in zip(ks, ks[1:])):
        raise PremiseViolation("k_sequence must be monotone non-increasing")
    c = inp.constants
    T = float(sum(ks))
    ratio = sum(float(k) ** 3 for k in ks) / T
    first = 2.0 * c.kappa * inp.drive / (inp.eta * T)
    return first + inp.eta * c.kappa * c.L * _variance_term(c, ratio)


def _need_runtime(inp):
    if inp.runtime is None or inp.w is None:
        raise ValueError("this bound needs runtime and w")
    if not inp.w > 0:
        raise DomainError(f"time budget W must be > 0, got {inp.w}")


def restart_curve(inp: BoundInputs, k=None, eta=None):
    """Restart bound evaluated at (arrays of) K and eta, without premise checks."""
    _need_runtime(inp)
    c = inp.constants
    k = np.asarray(inp.k if k is None else k, dtype=np.float64)
    eta = np.asarray(inp.eta if eta is None else eta, dtype=np.float64)
    rt = inp.runtime
    first = 2.0 * c.kappa * inp.drive / (eta * inp.w * k) * (rt.comm_seconds + rt.beta_seconds * k)
    return first + eta * c.kappa * c.L * _variance_term(c, k * k)


def restart_bound(inp: BoundInputs) -> float:
    """Bound for a constant K and eta over the time budget ``w``, restarted from
    a model with loss ``f0``."""
    _check_eta(inp)
    if inp.k is None or not inp.k >= 1:
        raise PremiseViolation(f"K must be >= 1, got {inp.k}")
    return float(restart_curve(inp))


def _positive_drive(inp):
    drive = inp.drive
    if not drive > 0:
        raise DomainError(f"kappa*F0 - F* must be > 0, got {drive}")
    return drive


def _k_denominator(inp, printed):
    c = inp.constants
    den = 8.0 * inp.eta**2 * c.L * (1.0 + 1.0 / (2.0 * c.n_participants))
    if not printed:
        if not c.g_squared > 0:
            raise DomainError("G^2 = 0: the bound does not penalise K, no finite optimum")
        den *= c.g_squared
    return den


def optimal_k(inp: BoundInputs, printed: bool = False) -> float:
    """Continuous minimiser over K of :func:`restart_bound`."""
    _need_runtime(inp)
    drive = _positive_drive(inp)
    return float(np.cbrt(drive / _k_denominator(inp, printed) * inp.runtime.comm_seconds / inp.w))


def optimal_k_rounds(inp: BoundInputs, r: int, printed: bool = False) -> float:
    """:func:`optimal_k` when compute time is negligible and W = r * comm."""
    if r < 1:
        raise ValueError("r must be >= 1")
    drive = _positive_drive(inp)
    return float(np.cbrt(drive / _k_denominator(inp, printed) / r))


def _z(inp, k):
    z = _variance_term(inp.constants, float(k) ** 2)
    if not z > 0:
        raise DomainError(f"Z must be > 0, got {z}")
    return z


def optimal_eta(inp: BoundInputs, printed: bool = False) -> float:
    """Continuous minimiser over eta of :func:`restart_bound` (ignores the
    eta <= 1/(4L) cap; compare against ``1 / (4 * L)`` separately)."""
    _need_runtime(inp)
    drive = _positive_drive(inp)
    k = inp.k
    rt = inp.runtime
    per_round = rt.comm_seconds + rt.beta_seconds * k
    value = 2.0 * drive / (inp.constants.L * _z(inp, k)) * per_round / inp.w
    if not printed:
        value /= k
    return math.sqrt(value)


def optimal_eta_rounds(inp: BoundInputs, r: int, printed: bool = False) -> float:
    if r < 1:
        raise ValueError("r must be >= 1")
    drive = _positive_drive(inp)
    value = 2.0 * drive / (inp.constants.L * _z(inp, inp.k)) / r
    if not printed:
        value /= inp.k
    return math.sqrt(value)


def grid_argmin_k(inp: BoundInputs, k_max: int | None = None) -> int:
    """Integer K in [1, k_max] minimising the restart bound by exhaustive search.

    ``k_max`` defaults to ``10 * K* + 10``.
    """
    if k_max is None:
        k_max = int(math.ceil(10 * optimal_k(inp) + 10))
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    return int(ks[np.argmin(restart_curve(inp, k=ks))])


def eta_grid(center: float, n: int = 2000, decades: float = 3.0) -> np.ndarray:
    return center * np.logspace(-decades, decades, n)


def grid_argmin_eta(inp: BoundInputs, grid=None) -> tuple[int, np.ndarray]:
    """Index of the eta-grid point minimising the restart bound at fixed K."""
    if grid is None:
        grid = eta_grid(optimal_eta(inp))
    values = restart_curve(inp, eta=grid)
    return int(np.argmin(values)), grid


def second_differences(f, xs, h) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    return (f(xs + h) - 2.0 * f(xs) + f(xs - h)) / (h * h)


def empirical_min_grad_norm(trace, fed: Federation) -> float:
    """min over recorded global models of ||grad F(x_r)||^2 (exact gradient)."""
    if not fed.is_quadratic:
        raise UnsupportedOperation("exact gradients need a quadratic federation")
    if not trace.params_history:
        raise ValueError("trace has no parameter history; run with record_params=True")
    best = math.inf
    for x in trace.params_history:
        g = fed.global_grad(x)
        best = min(best, float(g @ g))
    return best


def bound_inputs_for(fed: Federation, eta: float, k_sequence, **kwargs) -> BoundInputs:
    """BoundInputs for a quadratic federation started from ``fed.x0``."""
    if fed.global_constants is None:
        raise UnsupportedOperation("federation has no closed-form constants")
    return BoundInputs(constants=fed.global_constants, eta=eta, k_sequence=tuple(k_sequence), **kwargs)
