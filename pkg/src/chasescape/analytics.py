"""Closed-form quantities: thresholds, bounds, and the critical speed.

All operations are pure and stateless; identical inputs give bit-identical
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .geometry import ball_volume

_BISECT_MAX_ITER = 200
_BISECT_REL_TOL = 1e-10


def rho(x: float) -> float:
    """Tree-comparison survival threshold, defined for x >= 1.

    Algebraically 2x - 1 - 2*sqrt(x^2 - x) = (sqrt(x) - sqrt(x-1))^2;
    evaluated through the reciprocal 1/(sqrt(x) + sqrt(x-1))^2, which is
    the same quantity with no cancellation at any x.  Strictly decreasing
    from rho(1) = 1 toward 0.
    """
    if not (x >= 1.0):
        raise ParameterError(f"rho requires x >= 1, got {x}")
    s = math.sqrt(x) + math.sqrt(x - 1.0)
    return 1.0 / (s * s)


def tree_critical_rate(k: int) -> float:
    """Critical infection rate on the rooted k-ary tree: 2k - 1 - 2*sqrt(k^2 - k)."""
    if k < 1:
        raise ParameterError(f"branching factor must be >= 1, got {k}")
    return 2.0 * k - 1.0 - 2.0 * math.sqrt(float(k) * k - k)


def local_survival_bounds(mu_s: float, mu_w: float, r: float, d: int,
                          theta: float) -> tuple[float, float]:
    """Void-probability bounds on the local-survival probability.

    lower = exp(-(mu_s + mu_w) * kappa_r): the origin is isolated.
    upper = (1 - theta) * exp(-mu_w * kappa_r): the susceptible cluster is
    finite and carries no knight within reach.
    """
    if mu_s < 0 or mu_w < 0:
        raise ParameterError("intensities must be nonnegative")
    if not (0.0 <= theta <= 1.0):
        raise ParameterError("theta must be a probability")
    kappa = ball_volume(d, r)
    lower = math.exp(-(mu_s + mu_w) * kappa)
    upper = (1.0 - theta) * math.exp(-mu_w * kappa)
    return lower, upper


def closed_node_prob(k: int, n: int, lambda_i: float) -> float:
    """Probability that a node with k knight and n susceptible neighbors is
    patched before transmitting to any of them: k / (k + n*lambda_i)."""
    if n < 1:
        raise ParameterError("closed_node_prob requires >= 1 susceptible neighbor")
    if k < 0:
        raise ParameterError("knight count must be >= 0")
    if lambda_i <= 0:
        raise ParameterError("lambda_i must be positive")
    return k / (k + n * lambda_i)


def open_node_lower_bound(n: int, m: int, lambda_i: float) -> float:
    """Lower bound (lambda_i / (lambda_i + n + m))^n on the probability of
    transmitting to all n susceptible neighbors before any patch attempt."""
    if n < 0 or m < 0:
        raise ParameterError("neighbor counts must be >= 0")
    if lambda_i <= 0:
        raise ParameterError("lambda_i must be positive")
    if n == 0:
        return 1.0
    return (lambda_i / (lambda_i + n + m)) ** n


def reflection_decay(lambda_i: float) -> float:
    """Exponential decay rate 4*lambda_i/(1 + lambda_i)^2 of the chain
    reach probability; equals 1 only at lambda_i = 1."""
    if lambda_i < 0:
        raise ParameterError("lambda_i must be nonnegative")
    return 4.0 * lambda_i / ((1.0 + lambda_i) ** 2)


def speed_constant(gamma: float, lambda_i: float, r: float, alpha: float) -> float:
    """Large-deviation rate C(alpha) = t - 1 - log t - log gamma at t = lambda_i*r/alpha.

    Positive C(alpha) makes speed alpha an asymptotic upper barrier for the
    infection front.  Requires alpha > r*lambda_i > 0 and gamma >= 1.
    """
    if gamma < 1.0:
        raise ParameterError("gamma must be >= 1")
    if lambda_i <= 0 or r <= 0:
        raise ParameterError("lambda_i and r must be positive")
    if alpha <= r * lambda_i:
        raise ParameterError("alpha must exceed r * lambda_i")
    t = lambda_i * r / alpha
    return t - 1.0 - math.log(t) - math.log(gamma)


@dataclass(frozen=True)
class SpeedSolution:
    """Critical minimal-speed bound alpha_c = lambda_i * r / t_star where
    t_star in (0,1) solves t - 1 - log t = log gamma."""

    gamma: float
    lambda_i: float
    r: float
    alpha_c: float
    t_star: float


def critical_speed(gamma: float, lambda_i: float, r: float) -> SpeedSolution:
    """Solve for the critical speed by bisection on t in (0, 1).

    f(t) = t - 1 - log t - log gamma is decreasing on (0, 1) from +inf to
    -log gamma < 0, so it has a unique root there; relative tolerance 1e-10
    with a hard iteration cap.
    """
    if gamma <= 1.0:
        raise ParameterError("critical_speed requires gamma > 1")
    if lambda_i <= 0 or r <= 0:
        raise ParameterError("lambda_i and r must be positive")
    target = math.log(gamma)

    def f(t: float) -> float:
        return t - 1.0 - math.log(t) - target

    lo = 1e-300
    hi = 1.0
    # f(hi) = -log gamma < 0; shrink lo until f(lo) > 0 (true for tiny t)
    while f(lo) <= 0:  # pragma: no cover - lo is already far below the root
        lo *= 0.5
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_REL_TOL * hi:
            break
    t_star = 0.5 * (lo + hi)
    alpha_c = lambda_i * r / t_star
    if speed_constant(gamma, lambda_i, r, alpha_c * (1.0 + 1e-6)) <= 0:
        raise RuntimeError("critical speed failed verification")
    return SpeedSolution(gamma=gamma, lambda_i=lambda_i, r=r,
                         alpha_c=alpha_c, t_star=t_star)


def expected_saw_count(mu_s: float, r: float, d: int, n: int) -> float:
    """Expected number of n-edge self-avoiding paths from the origin:
    (mu_s * kappa_r)^n, by the Slivnyak-Mecke identity."""
    if n < 0:
        raise ParameterError("path length must be >= 0")
    if mu_s < 0:
        raise ParameterError("mu_s must be nonnegative")
    return (mu_s * ball_volume(d, r)) ** n
