"""Distribution-level link statistics: KS validation, collaboration schemes,
and exact SIR / rate distributions.

The SIR density of a ratio of two exponential-polynomial mixtures has a closed
form: every (signal term, interference term) pair contributes
a_s * a_i * (2+b_s+b_i-1)! * g^b_s * (c_i + c_s*g)^-(2+b_s+b_i).  Its CDF
integrates term-wise to regularized incomplete beta functions, so medians come
from root-finding on an exact CDF rather than from sampling or quadrature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy import special as sc

from .circular import CENTRAL_NODE, CircularScenario, NodeRef
from .gamma_sum import ExpPolyMixture

_PDF_MASS_TOL = 1e-6


class EmpiricalCdf:
    """Sorted sample set with step-function evaluation."""

    def __init__(self, samples):
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.flags.writeable = False
        self.samples = arr

    @property
    def n(self) -> int:
        return self.samples.size

    def evaluate(self, x):
        """Fraction of samples <= x."""
        return np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / self.n


def ks_distance(analytic_cdf, empirical: EmpiricalCdf) -> float:
    """Exact sup-distance between an analytic CDF and an empirical one.

    The supremum over the step function is attained at a sample point, from
    the left or from the right, so both one-sided gaps are checked.
    """
    cdf = analytic_cdf.cdf if hasattr(analytic_cdf, "cdf") else analytic_cdf
    x = empirical.samples
    f = np.asarray(cdf(x), dtype=float)
    n = empirical.n
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(np.abs(f - hi)), np.max(np.abs(f - lo))))


def ks_distance_bounded(
    cdf, empirical: EmpiricalCdf, points: int = 1200
) -> tuple[float, float]:
    """Rigorous (lower, upper) bounds on the KS distance from a CDF subsample.

    For expensive CDFs (extended-precision evaluation of ill-conditioned
    mixtures) the analytic CDF is evaluated only at ``points`` of the order
    statistics; monotonicity of both curves bounds the supremum over each gap
    by the box corners, so no heuristic slack is involved.  The bounds
    coincide as ``points`` approaches the sample size.
    """
    f_eval = cdf.cdf if hasattr(cdf, "cdf") else cdf
    n = empirical.n
    idx = np.unique(np.round(np.linspace(0, n - 1, min(points, n))).astype(int))
    f = np.asarray(f_eval(empirical.samples[idx]), dtype=float)
    g_hi = (idx + 1) / n
    g_lo = idx / n
    lower = max(np.max(np.abs(f - g_hi)), np.max(np.abs(f - g_lo)))
    # between grid points x_j < x_{j+1}: F in [f_j, f_{j+1}], G in [g_hi_j, g_lo_{j+1}]
    gap_hi = np.maximum(f[1:] - g_hi[:-1], 0.0)
    gap_lo = np.maximum(g_lo[1:] - f[:-1], 0.0)
    upper = max(float(lower), float(np.max(gap_hi)), float(np.max(gap_lo)))
    upper = max(upper, 1.0 - float(f[-1]))  # beyond the last sample G is 1
    upper = max(upper, float(f[0]))  # before the first sample G is 0
    return float(lower), float(upper)


def ks_critical_value(n: int, significance: float = 0.01) -> float:
    """Asymptotic one-sample KS threshold at the given significance level."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < significance < 1:
        raise ValueError(f"significance must be in (0, 1), got {significance}")
    return float(sc.kolmogi(significance)) / math.sqrt(n)


class CollaborationScheme(enum.Enum):
    """How the central station and nearby interferers share the user's link."""

    NO_COLLABORATION = "none"
    INTERFERENCE_COORDINATION = "coordination"
    TRANSMITTER_COOPERATION = "cooperation"


def closest_inner_nodes(scenario: CircularScenario, r: float, m: int) -> tuple[NodeRef, ...]:
    """The m nodes of circle 1 closest to the user at (r, 0); ties by index."""
    circle = scenario.circle(1)
    order = sorted(
        range(1, circle.node_count + 1),
        key=lambda n: (scenario.node_distance(NodeRef(1, n), r), n),
    )
    return tuple(NodeRef(1, n) for n in order[:m])


def collaboration_sets(
    scenario: CircularScenario,
    scheme: CollaborationScheme,
    r: float,
    m: int = 2,
) -> tuple[tuple[NodeRef, ...], tuple[NodeRef, ...]]:
    """Signal and interference node sets for a collaboration scheme.

    The m collaborators are the circle-1 nodes closest to the user.  Under
    coordination they are silenced; under cooperation their signals join the
    central one.  With m = 0 every scheme reduces to the no-collaboration
    baseline.
    """
    if not scenario.circles:
        raise ValueError("scenario has no interferer circles")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    if scheme is not CollaborationScheme.NO_COLLABORATION and m >= scenario.circle(1).node_count:
        raise ValueError(
            f"m = {m} must be smaller than the {scenario.circle(1).node_count} nodes of circle 1"
        )

    everyone = scenario.all_circle_nodes()
    if scheme is CollaborationScheme.NO_COLLABORATION or m == 0:
        return (CENTRAL_NODE,), everyone

    removed = set(closest_inner_nodes(scenario, r, m))
    interferers = tuple(n for n in everyone if n not in removed)
    if scheme is CollaborationScheme.INTERFERENCE_COORDINATION:
        return (CENTRAL_NODE,), interferers
    if scheme is CollaborationScheme.TRANSMITTER_COOPERATION:
        return (CENTRAL_NODE,) + tuple(sorted(removed, key=lambda n: n.node)), interferers
    raise ValueError(f"unknown scheme {scheme!r}")


def _check_pdf(mix: ExpPolyMixture, label: str) -> None:
    mass = mix.total_mass
    if abs(mass - 1.0) > _PDF_MASS_TOL:
        raise ValueError(f"{label} mixture is not normalized (mass = {mass!r})")


@dataclass(frozen=True, eq=False)
class SirDensity:
    """Closed-form density of the ratio of two mixture-distributed powers.

    Stores one quadruple per (signal term, interference term) pair; evaluation
    is vectorized over the SIR argument.
    """

    amps: np.ndarray  # a_s * a_i * Gamma(2 + b_s + b_i)
    degs: np.ndarray  # b_s
    rate_s: np.ndarray  # c_s
    rate_i: np.ndarray  # c_i
    exps: np.ndarray  # 2 + b_s + b_i
    cdf_amps: np.ndarray  # a_s a_i b_s! b_i! c_s^-(b_s+1) c_i^-(b_i+1)
    beta_a: np.ndarray  # b_s + 1
    beta_b: np.ndarray  # b_i + 1

    def pdf(self, gamma):
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        out = np.zeros_like(g)
        pos = g >= 0
        gp = g[pos][:, None]
        val = self.amps * gp**self.degs * (self.rate_i + self.rate_s * gp) ** -self.exps
        out[pos] = val.sum(axis=1)
        return float(out[0]) if np.isscalar(gamma) else out.reshape(np.shape(gamma))

    def cdf(self, gamma):
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        out = np.zeros_like(g)
        pos = g > 0
        gp = g[pos][:, None]
        x = self.rate_s * gp / (self.rate_i + self.rate_s * gp)
        val = self.cdf_amps * sc.betainc(self.beta_a, self.beta_b, x)
        out[pos] = val.sum(axis=1)
        return float(out[0]) if np.isscalar(gamma) else out.reshape(np.shape(gamma))

    @property
    def median(self) -> float:
        return distribution_median(self.cdf)


def sir_pdf(signal: ExpPolyMixture, interference: ExpPolyMixture) -> SirDensity:
    """Exact SIR density for independent signal and interference mixtures.

    Derived from the quotient integral int_0^inf z f_S(z*g) f_I(z) dz, whose
    per-term value is a_s a_i Gamma(2+b_s+b_i) g^b_s (c_i + c_s g)^-(2+b_s+b_i).
    """
    _check_pdf(signal, "signal")
    _check_pdf(interference, "interference")
    a_s, b_s, c_s = zip(*signal.terms)
    a_i, b_i, c_i = zip(*interference.terms)
    a_s, b_s, c_s = (np.array(v, dtype=float) for v in (a_s, b_s, c_s))
    a_i, b_i, c_i = (np.array(v, dtype=float) for v in (a_i, b_i, c_i))

    bs = b_s[:, None] + np.zeros_like(b_i)[None, :]
    bi = np.zeros_like(b_s)[:, None] + b_i[None, :]
    e = 2.0 + bs + bi
    pair_a = a_s[:, None] * a_i[None, :]
    cs = np.broadcast_to(c_s[:, None], bs.shape)
    ci = np.broadcast_to(c_i[None, :], bs.shape)
    cdf_amps = pair_a * sc.factorial(bs) * sc.factorial(bi) / (cs ** (bs + 1) * ci ** (bi + 1))
    return SirDensity(
        amps=(pair_a * sc.gamma(e)).ravel(),
        degs=bs.ravel(),
        rate_s=cs.ravel(),
        rate_i=ci.ravel(),
        exps=e.ravel(),
        cdf_amps=cdf_amps.ravel(),
        beta_a=(bs + 1).ravel(),
        beta_b=(bi + 1).ravel(),
    )


def sir_cdf(density: SirDensity, gamma) -> float:
    """CDF of the SIR density (term-wise incomplete-beta closed form)."""
    return density.cdf(gamma)


def distribution_median(cdf, lo: float = 1e-9, hi: float = 1.0) -> float:
    """Median of a distribution given its CDF, by bracketed root finding."""
    f = cdf.cdf if hasattr(cdf, "cdf") else cdf
    while f(hi) < 0.5:
        hi *= 2.0
        if hi > 1e30:
            raise ArithmeticError("median bracket expansion failed upward")
    while f(lo) > 0.5:
        lo /= 2.0
        if lo < 1e-300:
            raise ArithmeticError("median bracket expansion failed downward")
    return float(optimize.brentq(lambda g: f(g) - 0.5, lo, hi, xtol=1e-300, rtol=4e-15))


@dataclass(frozen=True)
class RateDensity:
    """Distribution of the Shannon rate log2(1 + SIR).

    A deterministic monotone transform of the SIR law: the CDF satisfies
    F_rate(t) = F_sir(2^t - 1) and the median maps accordingly.
    """

    sir: SirDensity

    def pdf(self, tau):
        t = np.asarray(tau, dtype=float)
        return math.log(2.0) * 2.0**t * self.sir.pdf(2.0**t - 1.0)

    def cdf(self, tau):
        t = np.asarray(tau, dtype=float)
        return self.sir.cdf(2.0**t - 1.0)

    @property
    def median(self) -> float:
        return math.log2(1.0 + self.sir.median)


def rate_pdf(density: SirDensity) -> RateDensity:
    """Rate distribution induced by an SIR density via the Shannon map."""
    return RateDensity(density)
