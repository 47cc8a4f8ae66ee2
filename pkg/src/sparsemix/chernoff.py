"""Chernoff bounds on pairwise support misranking, and their Monte Carlo check.

The bounded event: a candidate support S at symmetric-difference size m
from the truth scores a loss no worse than the truth's. Each sample row
contributes one moment-generating-function factor per noise block, so
the bound is M1(theta)^n1 * M2(theta)^n2, minimized over theta inside
the MGF domain. Everything is accumulated in log space; the agnostic
optimum is the positive root of a cubic, solved in closed form and
polished by two Newton steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import beta as _beta_dist

from . import rng
from .model import NoiseProfile, Setting, SparseSignal

__all__ = [
    "ChernoffQuery",
    "OptimalTheta",
    "MisrankEstimate",
    "block_mgf",
    "chernoff_log_bound",
    "chernoff_bound",
    "optimal_theta_agnostic",
    "lq_domain_limit",
    "empirical_misrank",
    "m_for_error_budget",
]


@dataclass(frozen=True)
class ChernoffQuery:
    """One bound evaluation: block layout, variances, overlap size m.

    m is the size of the symmetric difference between the candidate and
    true supports (equal-cardinality supports always give an even m).
    theta overrides the setting's default evaluation point when given.
    """

    setting: Setting
    n1: int
    n2: int
    sigma1_sq: float
    sigma2_sq: float
    m: int
    theta: float | None = None

    def __post_init__(self) -> None:
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("block sizes must be nonnegative")
        if not 0.0 < self.sigma1_sq <= self.sigma2_sq:
            raise ValueError("variances must satisfy 0 < sigma1_sq <= sigma2_sq")
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.theta is not None and (
            not math.isfinite(self.theta) or self.theta < 0.0
        ):
            raise ValueError("theta must be a finite nonnegative real when given")

    def default_theta(self) -> float:
        """Relaxed agnostic point 1/(4 sigma2_sq); exact informed point 1/4."""
        if self.setting is Setting.AGNOSTIC:
            return 1.0 / (4.0 * self.sigma2_sq)
        return 0.25


class OptimalTheta(NamedTuple):
    theta: float
    log_bound: float


class MisrankEstimate(NamedTuple):
    estimate: float
    ci95: float


def m_for_error_budget(delta: float, s: int) -> int:
    """Map an error budget to the overlap size m = 2 delta s.

    The product must be an integer (within rounding fuzz): a budget of
    delta means strictly fewer than 2 delta s misplaced indices, and the
    bound is evaluated at the smallest excluded overlap.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if s < 1:
        raise ValueError("s must be positive")
    m = 2.0 * delta * s
    if abs(m - round(m)) > 1e-9 or round(m) < 1:
        raise ValueError("2 * delta * s must be a positive integer")
    return int(round(m))


def _mgf_arg(setting: Setting, theta: float, m: int, sigma_sq: float) -> float:
    if setting is Setting.AGNOSTIC:
        return m * (-theta + 2.0 * theta**2 * sigma_sq)
    return m * (-theta + 2.0 * theta**2) / sigma_sq


def block_mgf(query: ChernoffQuery, block: int) -> float:
    """Per-sample MGF factor of one block at the query's theta.

    Returns (1 - 2 g)^(-1/2) with g the setting's exponent argument, or
    +inf when g >= 1/2 (theta outside the MGF domain).
    """
    if block not in (1, 2):
        raise ValueError("block must be 1 or 2")
    theta = query.theta if query.theta is not None else query.default_theta()
    sigma_sq = query.sigma1_sq if block == 1 else query.sigma2_sq
    g = _mgf_arg(query.setting, theta, query.m, sigma_sq)
    if g >= 0.5:
        return math.inf
    return (1.0 - 2.0 * g) ** -0.5


def chernoff_log_bound(query: ChernoffQuery) -> float:
    """ln of the misranking bound at the query's theta; +inf off-domain."""
    theta = query.theta if query.theta is not None else query.default_theta()
    g1 = _mgf_arg(query.setting, theta, query.m, query.sigma1_sq)
    g2 = _mgf_arg(query.setting, theta, query.m, query.sigma2_sq)
    if g1 >= 0.5 or g2 >= 0.5:
        return math.inf
    return -0.5 * (query.n1 * math.log1p(-2.0 * g1) + query.n2 * math.log1p(-2.0 * g2))


def chernoff_bound(query: ChernoffQuery) -> float:
    """Misranking probability bound in (0, 1] at the query's theta.

    At the default theta both exponent arguments are negative, so the
    bound is always finite and at most 1; a caller-supplied theta outside
    the MGF domain yields +inf, the useless-bound marker.
    """
    lb = chernoff_log_bound(query)
    if math.isinf(lb):
        return math.inf
    return math.exp(lb)


def lq_domain_limit(query: ChernoffQuery) -> float:
    """Supremum of feasible theta > 0; the low-quality block binds.

    Solves m(-theta + 2 theta^2 v) = 1/2 for the agnostic argument (or
    its informed rescaling) at the larger variance, whose domain is
    contained in the other block's.
    """
    m = query.m
    if query.setting is Setting.AGNOSTIC:
        v = query.sigma2_sq
        # 2 m v t^2 - m t - 1/2 = 0
        return (m + math.sqrt(m * m + 4.0 * m * v)) / (4.0 * m * v)
    # informed: m(-t + 2 t^2)/v = 1/2  =>  2 m t^2 - m t - v/2 = 0
    v = query.sigma2_sq
    return (m + math.sqrt(m * m + 4.0 * m * v)) / (4.0 * m)


def _cubic_real_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of a cubic by the closed-form trigonometric/Cardano split."""
    a = c2 / c3
    b = c1 / c3
    c = c0 / c3
    # depress with t = x + a/3: t^3 + p t + q
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = a / 3.0
    disc = -4.0 * p**3 - 27.0 * q * q
    roots: list[float] = []
    if disc > 0.0:
        # three distinct real roots
        r = math.sqrt(-p / 3.0)
        phi = math.acos(max(-1.0, min(1.0, 3.0 * q / (2.0 * p * r))))
        for k in range(3):
            roots.append(2.0 * r * math.cos((phi - 2.0 * math.pi * k) / 3.0) - shift)
    else:
        # one real root (Cardano); the duplicated-root edge lands here too
        half_q = q / 2.0
        inner = half_q * half_q + p**3 / 27.0
        if inner >= 0.0:
            su = math.sqrt(inner)
            u = math.copysign(abs(-half_q + su) ** (1.0 / 3.0), -half_q + su)
            v = math.copysign(abs(-half_q - su) ** (1.0 / 3.0), -half_q - su)
            roots.append(u + v - shift)
        else:  # pragma: no cover - disc <= 0 implies inner >= 0
            roots.append(-shift)
    return roots


def optimal_theta_agnostic(query: ChernoffQuery) -> OptimalTheta:
    """Best feasible theta for the agnostic bound, with its log-bound.

    The stationarity condition is the cubic

        n1 (4 s1 t - 1)(1 - 2m(-t + 2 t^2 s2))
      + n2 (4 s2 t - 1)(1 - 2m(-t + 2 t^2 s1)) = 0

    (s_b the block variances). Roots come from the closed form, get two
    Newton polish steps each, are filtered to the feasible interval, and
    compete against the relaxed point 1/(4 s2), which is always feasible;
    the smallest log-bound wins, so the result never loses to the
    relaxed bound.
    """
    if query.setting is not Setting.AGNOSTIC:
        raise ValueError("theta optimization applies to the agnostic setting")
    m, n1, n2 = query.m, query.n1, query.n2
    a1, a2 = 4.0 * query.sigma1_sq, 4.0 * query.sigma2_sq
    c3 = -m * a1 * a2 * (n1 + n2)
    c2 = m * (n1 * (2.0 * a1 + a2) + n2 * (2.0 * a2 + a1))
    c1 = n1 * (a1 - 2.0 * m) + n2 * (a2 - 2.0 * m)
    c0 = -float(n1 + n2)

    def poly(t: float) -> float:
        return ((c3 * t + c2) * t + c1) * t + c0

    def dpoly(t: float) -> float:
        return (3.0 * c3 * t + 2.0 * c2) * t + c1

    limit = lq_domain_limit(query)
    candidates = [query.default_theta()]
    for t in _cubic_real_roots(c3, c2, c1, c0):
        for _ in range(2):
            d = dpoly(t)
            if d != 0.0:
                t -= poly(t) / d
        if 0.0 < t < limit:
            candidates.append(t)

    best: OptimalTheta | None = None
    for t in candidates:
        lb = chernoff_log_bound(
            ChernoffQuery(
                setting=Setting.AGNOSTIC,
                n1=n1,
                n2=n2,
                sigma1_sq=query.sigma1_sq,
                sigma2_sq=query.sigma2_sq,
                m=m,
                theta=t,
            )
        )
        if math.isinf(lb):
            continue
        if best is None or lb < best.log_bound:
            best = OptimalTheta(theta=t, log_bound=lb)
    assert best is not None  # the relaxed point is always feasible
    return best


_BATCH = 4096
_X_STREAM = 1
_NOISE_STREAM = 2


def empirical_misrank(
    signal: SparseSignal,
    noise: NoiseProfile,
    candidate: Sequence[int],
    trials: int,
    seed: int,
    setting: Setting = Setting.AGNOSTIC,
) -> MisrankEstimate:
    """Monte Carlo probability that a candidate support outscores the truth.

    Each trial draws a fresh design and noise vector from its own
    substream derive(seed, trial) and counts loss(candidate) <=
    loss(true support) under the requested setting's loss. Only design
    columns appearing in either support are materialized; the others
    cannot affect either loss. The half-width ci95 is the exact binomial
    (Clopper-Pearson) 95% interval's.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cand = sorted(int(j) for j in candidate)
    if len(cand) != signal.s or len(set(cand)) != len(cand):
        raise ValueError("candidate support must hold s distinct indices")
    if cand[0] < 0 or cand[-1] >= signal.p:
        raise ValueError("candidate indices must lie in [0, p)")
    if setting is Setting.INFORMED and noise.sigma1_sq <= 0.0:
        raise ValueError("informed loss requires positive variances")

    union = sorted(set(cand) | set(signal.support))
    beta_u = np.zeros(len(union))
    for j, v in zip(signal.support, signal.values):
        beta_u[union.index(j)] = v
    ind_cand = np.zeros(len(union))
    ind_true = np.zeros(len(union))
    for j in cand:
        ind_cand[union.index(j)] = 1.0
    for j in signal.support:
        ind_true[union.index(j)] = 1.0
    coef_cand = beta_u - ind_cand
    coef_true = beta_u - ind_true

    n, u = noise.n, len(union)
    sig = np.sqrt(noise.row_variances())
    if setting is Setting.INFORMED:
        w = 1.0 / noise.row_variances()
    else:
        w = np.ones(n)

    successes = 0
    for start in range(0, trials, _BATCH):
        stop = min(start + _BATCH, trials)
        t_arr = np.arange(start, stop, dtype=np.uint64)
        st = rng.derive_vec(seed, t_arr)
        xu = rng.normals_grid(rng.derive_vec(st, _X_STREAM), n * u)
        z = rng.normals_grid(rng.derive_vec(st, _NOISE_STREAM), n) * sig[None, :]
        xu = xu.reshape(len(t_arr), n, u)
        resid_cand = xu @ coef_cand + z
        resid_true = xu @ coef_true + z
        loss_cand = np.add.reduce(w[None, :] * resid_cand * resid_cand, axis=1)
        loss_true = np.add.reduce(w[None, :] * resid_true * resid_true, axis=1)
        successes += int(np.count_nonzero(loss_cand <= loss_true))

    estimate = successes / trials
    lo = 0.0 if successes == 0 else float(
        _beta_dist.ppf(0.025, successes, trials - successes + 1)
    )
    hi = 1.0 if successes == trials else float(
        _beta_dist.ppf(0.975, successes + 1, trials - successes)
    )
    return MisrankEstimate(estimate=estimate, ci95=(hi - lo) / 2.0)
