"""Exact finite-sum statistics for sums of independent Gamma random variables
with integer shape parameters.

The sum of L independent Gamma[k_l, theta_l] variables (integer k_l, distinct
theta_l) has a density expressible as a finite mixture of terms a * y^b *
exp(-c*y).  This module builds that mixture exactly: per-scale partial-fraction
weights are combined with residue polynomials obtained from a complete-Bell-
polynomial recursion over closed-form Taylor data.  Coefficients are computed
in extended precision (mpmath) and downcast to float64 for fast vectorized
evaluation; a Monte Carlo sampler over the same term sets serves as an
independent validation oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy import special as sc


DEFAULT_PRECISION_BITS = 128
MERGE_TOL_DEFAULT = 1e-9
# Below this post-merge relative scale gap the partial-fraction weights blow up
# and results at default precision are not trustworthy.
CONDITION_GAP = 1e-6
_MAX_PRECISION_BITS = 1 << 14
_MASS_CHECK_BITS = 40  # required accuracy of the unit-mass identity, in bits

MC_CHUNK = 1 << 16  # partition unit for reproducible, order-independent sampling


class IllConditionedTermsError(ArithmeticError):
    """Raised when scale parameters are too close for reliable coefficients.

    Carries the offending pair of scales in ``.scales``.
    """

    def __init__(self, message: str, scales: tuple[float, float] | None = None):
        super().__init__(message)
        self.scales = scales


@dataclass(frozen=True)
class GammaTerm:
    """One Gamma[shape, scale] summand; shape is a positive integer."""

    shape: int
    scale: float

    def __post_init__(self):
        if not isinstance(self.shape, (int, np.integer)) or isinstance(self.shape, bool):
            raise ValueError(f"shape must be an integer, got {self.shape!r}")
        if self.shape < 1:
            raise ValueError(f"shape must be >= 1, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        object.__setattr__(self, "shape", int(self.shape))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def mean(self) -> float:
        return self.shape * self.scale


@dataclass(frozen=True)
class CanonicalTermSet:
    """Gamma terms with pairwise-distinct scales, sorted by descending scale.

    Built by :func:`canonicalize`; equal-scale inputs are merged by summing
    shapes (the Gamma summation property).
    """

    terms: tuple[GammaTerm, ...]

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def shapes(self) -> tuple[int, ...]:
        return tuple(t.shape for t in self.terms)

    @property
    def scales(self) -> tuple[float, ...]:
        return tuple(t.scale for t in self.terms)

    @property
    def mean(self) -> float:
        return sum(t.mean for t in self.terms)

    def min_relative_gap(self) -> float:
        """Smallest relative gap between adjacent scales (inf for L=1)."""
        s = self.scales
        if len(s) < 2:
            return math.inf
        return min((s[i] - s[i + 1]) / s[i] for i in range(len(s) - 1))

    def truncated(self, count: int) -> "CanonicalTermSet":
        """First ``count`` terms (largest scales, i.e. dominant summands)."""
        if not 1 <= count <= len(self.terms):
            raise ValueError(f"count must be in [1, {len(self.terms)}], got {count}")
        return CanonicalTermSet(self.terms[:count])


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients in ascending degree order."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        # normalize: strip trailing zeros, keep at least the constant term
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, y):
        acc = 0.0 * y + float(self.coefficients[-1])
        for c in reversed(self.coefficients[:-1]):
            acc = acc * y + float(c)
        return acc


@dataclass(frozen=True)
class ExpPolyMixture:
    """Finite sum of a * y^b * exp(-c*y) terms on y >= 0.

    The universal carrier for the densities produced here: amplitudes may be
    huge and signed (they cancel), degrees are small non-negative integers and
    rates are positive.
    """

    terms: tuple[tuple[float, int, float], ...]

    def __post_init__(self):
        for a, b, c in self.terms:
            if not (math.isfinite(a) and b >= 0 and c > 0 and math.isfinite(c)):
                raise ValueError(f"invalid mixture term (a={a}, b={b}, c={c})")

    def __len__(self) -> int:
        return len(self.terms)

    def _arrays(self):
        a = np.array([t[0] for t in self.terms])
        b = np.array([t[1] for t in self.terms])
        c = np.array([t[2] for t in self.terms])
        return a, b, c

    def pdf(self, y):
        return mixture_pdf(self, y)

    def cdf(self, y):
        return mixture_cdf(self, y)

    @property
    def total_mass(self) -> float:
        """Integral over [0, inf): sum of a * b! / c^(b+1)."""
        a, b, c = self._arrays()
        return float(np.sum(a * sc.factorial(b) / c ** (b + 1)))

    @property
    def mean(self) -> float:
        """First moment, term-wise closed form a * (b+1)! / c^(b+2)."""
        a, b, c = self._arrays()
        return float(np.sum(a * sc.factorial(b + 1) / c ** (b + 2)))


def canonicalize(raw_terms: Iterable[GammaTerm], merge_tol: float = MERGE_TOL_DEFAULT) -> CanonicalTermSet:
    """Merge near-equal scales (summing shapes) and sort by descending scale.

    Scales within relative distance ``merge_tol`` of each other are treated as
    equal; the merged term uses the shape-weighted mean scale, which preserves
    the mean of the sum.
    """
    terms = list(raw_terms)
    if not terms:
        raise ValueError("term list must not be empty")
    if not 0 < merge_tol < 1e-3:
        raise ValueError(f"merge_tol must be in (0, 1e-3), got {merge_tol}")
    for t in terms:
        if not isinstance(t, GammaTerm):
            t = GammaTerm(*t)  # accept bare (shape, scale) pairs
    terms = [t if isinstance(t, GammaTerm) else GammaTerm(*t) for t in terms]
    terms.sort(key=lambda t: t.scale, reverse=True)

    merged: list[list[GammaTerm]] = [[terms[0]]]
    for t in terms[1:]:
        anchor = merged[-1][-1].scale
        if (anchor - t.scale) <= merge_tol * anchor:
            merged[-1].append(t)
        else:
            merged.append([t])

    out = []
    for group in merged:
        shape = sum(t.shape for t in group)
        scale = sum(t.shape * t.scale for t in group) / shape
        out.append(GammaTerm(shape, scale))
    return CanonicalTermSet(tuple(out))


def condense(term_set: CanonicalTermSet, tol: float) -> CanonicalTermSet:
    """Coarsen a canonical set by merging scales within relative ``tol``.

    Model-reduction knob for large mapped term sets: merging preserves the
    mean exactly (shape-weighted mean scale) and perturbs the distribution by
    O(tol^2), while bounding the partial-fraction blow-up that makes float64
    evaluation of near-tied scales unusable.  Unlike canonicalize's strict
    merge tolerance this may change the modeled distribution, so the tolerance
    is explicit and capped.
    """
    if not 0 < tol <= 0.25:
        raise ValueError(f"tol must be in (0, 0.25], got {tol}")
    groups: list[list[GammaTerm]] = [[term_set.terms[0]]]
    for t in term_set.terms[1:]:
        anchor = groups[-1][-1].scale
        if (anchor - t.scale) <= tol * anchor:
            groups[-1].append(t)
        else:
            groups.append([t])
    out = []
    for group in groups:
        shape = sum(t.shape for t in group)
        scale = sum(t.shape * t.scale for t in group) / shape
        out.append(GammaTerm(shape, scale))
    return CanonicalTermSet(tuple(out))


def _check_conditioning(term_set: CanonicalTermSet) -> None:
    gap = term_set.min_relative_gap()
    if gap < CONDITION_GAP:
        s = term_set.scales
        pair = next(
            (s[i], s[i + 1])
            for i in range(len(s) - 1)
            if (s[i] - s[i + 1]) / s[i] < CONDITION_GAP
        )
        raise IllConditionedTermsError(
            f"relative scale gap {gap:.3e} below {CONDITION_GAP:.0e}; merge the terms "
            "or pass an explicit precision_bits to accept the conditioning",
            scales=pair,
        )


def _require_index(term_set: CanonicalTermSet, index: int) -> int:
    if not 1 <= index <= len(term_set):
        raise IndexError(f"index must be in [1, {len(term_set)}], got {index}")
    return index - 1


def partial_fraction_weight(term_set: CanonicalTermSet, index: int) -> mpmath.mpf:
    """Extended-precision weight of the ``index``-th scale (1-based).

    Equals (-1)^(k+1)/(k-1)! times the product over the other terms of
    (1 - theta_i/theta_l)^(-k_i).  Blows up for clustered scales, hence the
    conditioning guard.
    """
    l = _require_index(term_set, index)
    _check_conditioning(term_set)
    return _weight_mp(term_set, l)


def _weight_mp(term_set: CanonicalTermSet, l: int) -> mpmath.mpf:
    k_l = term_set.terms[l].shape
    th_l = mpmath.mpf(term_set.terms[l].scale)
    acc = mpmath.mpf(-1) ** (k_l + 1) / mpmath.factorial(k_l - 1)
    for i, t in enumerate(term_set.terms):
        if i != l:
            acc *= (1 - mpmath.mpf(t.scale) / th_l) ** (-t.shape)
    return acc


def residue_taylor_data(
    term_set: CanonicalTermSet, index: int, max_order: int
) -> tuple[Polynomial, tuple[mpmath.mpf, ...]]:
    """Taylor data driving the residue polynomial of one scale (1-based index).

    Returns (H0, (H1, ..., H_max_order)) where H0 is degree-1 in the aggregate
    variable y: H0(y) = -y + sum_{i != l} k_i (1/theta_i - 1/theta_l)^{-1}, and
    H_m = m! * sum_{i != l} k_i (1/theta_i - 1/theta_l)^{-m-1} are constants.
    """
    l = _require_index(term_set, index)
    k_l = term_set.terms[l].shape
    if max_order > k_l - 1:
        raise ValueError(f"max_order must be <= shape-1 = {k_l - 1}, got {max_order}")
    h0, hm = _taylor_mp(term_set, l, max_order)
    return Polynomial(tuple(h0)), tuple(hm)


def _taylor_mp(term_set: CanonicalTermSet, l: int, max_order: int):
    th_l = mpmath.mpf(term_set.terms[l].scale)
    inv_gaps = []
    for i, t in enumerate(term_set.terms):
        if i != l:
            inv_gaps.append((t.shape, 1 / (1 / mpmath.mpf(t.scale) - 1 / th_l)))
    s1 = mpmath.fsum(k * g for k, g in inv_gaps)
    h0 = [s1, mpmath.mpf(-1)]  # -y + s1, ascending coefficients
    hm = [
        mpmath.factorial(m) * mpmath.fsum(k * g ** (m + 1) for k, g in inv_gaps)
        for m in range(1, max_order + 1)
    ]
    return h0, hm


def _poly_add(p, q):
    n = max(len(p), len(q))
    return [
        (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)
    ]


def _poly_mul(p, q):
    out = [mpmath.mpf(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        for j, qj in enumerate(q):
            out[i + j] += pi * qj
    return out


def _bell_polys(h0, hm, order: int):
    """Complete Bell polynomials B_0..B_order over (H0(y), H1, H2, ...).

    Each B_d is a polynomial in y (list of ascending mpf coefficients); the
    recursion B_{d+1} = sum_i C(d, i) B_{d-i} x_{i+1} mirrors the defining
    product-plus-derivative recurrence of the residue functions, with
    B_0 = 1 fixed by the single-scale reduction.
    """
    xs = [h0] + [[v] for v in hm]  # x_1 = H0 (poly), x_{m+1} = H_m (constants)
    bells = [[mpmath.mpf(1)]]
    for d in range(order):
        nxt = [mpmath.mpf(0)]
        for i in range(d + 1):
            if i >= len(xs):
                break
            term = _poly_mul(bells[d - i], xs[i])
            nxt = _poly_add(nxt, [mpmath.binomial(d, i) * c for c in term])
        bells.append(nxt)
    return bells


def residue_polynomial(term_set: CanonicalTermSet, index: int, order: int) -> Polynomial:
    """Degree-``order`` residue polynomial in y for one scale (1-based index).

    order 0 gives the constant 1; order d is the complete Bell polynomial over
    the Taylor data of :func:`residue_taylor_data`.
    """
    l = _require_index(term_set, index)
    k_l = term_set.terms[l].shape
    if not 0 <= order <= k_l - 1:
        raise ValueError(f"order must be in [0, shape-1] = [0, {k_l - 1}], got {order}")
    h0, hm = _taylor_mp(term_set, l, max(0, order - 1))
    bells = _bell_polys(h0, hm, order)
    return Polynomial(tuple(bells[order]))


def _estimate_extra_bits(term_set: CanonicalTermSet) -> int:
    """Cheap upper estimate of the coefficient dynamic range, in bits."""
    shapes = np.array(term_set.shapes, dtype=float)
    scales = np.array(term_set.scales, dtype=float)
    worst = 0.0
    for l in range(len(scales)):
        ratio = np.delete(scales, l) / scales[l]
        picked = np.delete(shapes, l)
        log_w = -np.sum(picked * np.log2(np.abs(1.0 - ratio)))
        log_w -= shapes[l] * np.log2(scales[l])
        worst = max(worst, log_w)
    return int(max(0.0, worst)) + 16


def _mixture_components_mp(term_set: CanonicalTermSet, prec: int):
    """Per-scale lists of (a, b, c) mixture terms, all mpf, at binary precision prec."""
    with mpmath.workprec(prec):
        components = []
        for l, t in enumerate(term_set.terms):
            th_l = mpmath.mpf(t.scale)
            weight = _weight_mp(term_set, l) / th_l ** t.shape
            h0, hm = _taylor_mp(term_set, l, t.shape - 2 if t.shape >= 2 else 0)
            poly = _bell_polys(h0, hm, t.shape - 1)[t.shape - 1]
            rate = 1 / th_l
            components.append([(weight * coef, b, rate) for b, coef in enumerate(poly)])
        return components


def _total_mass_mp(components) -> mpmath.mpf:
    return mpmath.fsum(
        a * mpmath.factorial(b) / c ** (b + 1) for comp in components for a, b, c in comp
    )


def sum_pdf_components(
    term_set: CanonicalTermSet, precision_bits: int | None = None
) -> tuple[ExpPolyMixture, ...]:
    """Per-scale contributions to the density of the summed Gamma variables.

    Concatenating all components gives the full PDF; the first L' components
    form the dominant-scale truncation.  Working precision starts at
    ``precision_bits`` (default 128, raised by a dynamic-range estimate) and
    doubles until the exact unit-mass identity holds to ~1e-12; passing an
    explicit ``precision_bits`` waives the near-tie conditioning guard.
    """
    if precision_bits is None:
        _check_conditioning(term_set)
        base = DEFAULT_PRECISION_BITS
    else:
        if precision_bits < 16:
            raise ValueError(f"precision_bits must be >= 16, got {precision_bits}")
        base = precision_bits
    prec = max(base, 64 + _estimate_extra_bits(term_set))

    while True:
        components = _mixture_components_mp(term_set, prec)
        with mpmath.workprec(prec):
            residual = abs(_total_mass_mp(components) - 1)
            good = residual < mpmath.mpf(2) ** (-_MASS_CHECK_BITS)
        if good:
            break
        prec *= 2
        if prec > _MAX_PRECISION_BITS:
            raise IllConditionedTermsError(
                f"unit-mass residual {mpmath.nstr(residual, 5)} persists at "
                f"{_MAX_PRECISION_BITS} bits; scales are effectively coincident"
            )

    out = []
    for comp in components:
        terms = tuple((float(a), int(b), float(c)) for a, b, c in comp)
        for a, _, _ in terms:
            if math.isinf(a):
                raise IllConditionedTermsError(
                    "mixture amplitude overflows float64; scales too clustered "
                    "for machine-precision evaluation"
                )
        out.append(ExpPolyMixture(terms))
    return tuple(out)


def sum_pdf(term_set: CanonicalTermSet, precision_bits: int | None = None) -> ExpPolyMixture:
    """Exact PDF of the sum of the set's Gamma variables, as an ExpPolyMixture."""
    components = sum_pdf_components(term_set, precision_bits)
    return ExpPolyMixture(tuple(t for comp in components for t in comp.terms))


def mixture_pdf(mix: ExpPolyMixture, y):
    """Evaluate the mixture density; 0 for y < 0 by convention."""
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros_like(y_arr)
    pos = y_arr >= 0
    yp = y_arr[pos]
    acc = np.zeros_like(yp)
    for a, b, c in mix.terms:
        acc += a * yp**b * np.exp(-c * yp)
    out[pos] = acc
    return float(out) if np.isscalar(y) else out


def mixture_cdf(mix: ExpPolyMixture, y):
    """Evaluate the mixture CDF via the term-wise closed form.

    Each term integrates to a * b!/c^(b+1) * P(b+1, c*y) with P the
    regularized lower incomplete gamma function (the finite truncated
    exponential series for integer b); no quadrature is involved.
    """
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros_like(y_arr)
    pos = y_arr >= 0
    yp = y_arr[pos]
    acc = np.zeros_like(yp)
    for a, b, c in mix.terms:
        acc += a * sc.factorial(b) / c ** (b + 1) * sc.gammainc(b + 1, c * yp)
    out[pos] = acc
    return float(out) if np.isscalar(y) else out


def amplitude_bits(mix: ExpPolyMixture) -> float:
    """log2 of the largest per-term contribution to PDF or CDF values.

    Estimates how many leading bits cancel when the signed terms are summed in
    float64; values beyond ~40 bits leave too little of the 53-bit mantissa
    for reliable machine-precision evaluation.
    """
    worst = 0.0
    for a, b, c in mix.terms:
        if a == 0.0:
            continue
        log_a = math.log2(abs(a))
        # peak of y^b e^(-c y) over y > 0 is (b/(c*e))^b
        peak_pdf = log_a + (b * (math.log2(b / c) - math.log2(math.e)) if b else 0.0)
        mass = log_a + math.log2(math.factorial(b)) - (b + 1) * math.log2(c)
        worst = max(worst, peak_pdf, mass)
    return worst


def _components_at_sufficient_precision(term_set, precision_bits):
    if precision_bits is None:
        _check_conditioning(term_set)
        precision_bits = DEFAULT_PRECISION_BITS
    prec = max(precision_bits, 64 + _estimate_extra_bits(term_set))
    while True:
        components = _mixture_components_mp(term_set, prec)
        with mpmath.workprec(prec):
            if abs(_total_mass_mp(components) - 1) < mpmath.mpf(2) ** (-_MASS_CHECK_BITS):
                return components, prec
        prec *= 2
        if prec > _MAX_PRECISION_BITS:
            raise IllConditionedTermsError("scales effectively coincident")


def pdf_extended(term_set: CanonicalTermSet, ys, precision_bits: int | None = None) -> np.ndarray:
    """Density of the summed variables evaluated in extended precision.

    Companion of :func:`cdf_extended` for mixtures whose signed float64
    coefficients would cancel below machine precision.
    """
    ys = np.asarray(ys, dtype=float)
    components, prec = _components_at_sufficient_precision(term_set, precision_bits)
    out = np.empty(ys.shape, dtype=float)
    flat = ys.ravel()
    with mpmath.workprec(prec):
        for pos, y in enumerate(flat):
            if y < 0:
                out.ravel()[pos] = 0.0
                continue
            ym = mpmath.mpf(float(y))
            acc = mpmath.mpf(0)
            for comp in components:
                rate = comp[0][2]
                emx = mpmath.exp(-rate * ym)
                poly = mpmath.fsum(a * ym**b for a, b, _ in comp)
                acc += poly * emx
            out.ravel()[pos] = float(acc)
    return out


def cdf_extended(term_set: CanonicalTermSet, ys, precision_bits: int | None = None) -> np.ndarray:
    """CDF of the summed variables evaluated in extended precision.

    Slow path for ill-conditioned mixtures whose float64 evaluation would lose
    all significant bits: coefficients and the term-wise closed-form integral
    are both kept in mpmath until the final downcast of each CDF value.
    """
    ys = np.asarray(ys, dtype=float)
    components, prec = _components_at_sufficient_precision(term_set, precision_bits)
    out = np.empty(ys.shape, dtype=float)
    flat = ys.ravel()
    with mpmath.workprec(prec):
        for pos, y in enumerate(flat):
            if y <= 0:
                out.ravel()[pos] = 0.0
                continue
            ym = mpmath.mpf(float(y))
            acc = mpmath.mpf(0)
            for comp in components:
                rate = comp[0][2]
                x = rate * ym
                emx = mpmath.exp(-x)
                # partial sums of the truncated exponential series, reused
                # across the polynomial degrees of this scale
                series = mpmath.mpf(1)
                powterm = mpmath.mpf(1)
                for a, b, _ in comp:
                    if b > 0:
                        powterm = powterm * x / b
                        series += powterm
                    acc += a * mpmath.factorial(b) / rate ** (b + 1) * (1 - emx * series)
            out.ravel()[pos] = float(acc)
    return out


def mc_sample_sum(raw_terms: Sequence[GammaTerm], n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. samples of the summed Gamma variables.

    Integer-shape Gammas are sampled as sums of exponentials, independently of
    the analytic machinery.  Samples are generated in fixed-size chunks, each
    from a counter-based generator keyed by (seed, chunk index), so the result
    is identical however the chunks are partitioned across workers.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    terms = [t if isinstance(t, GammaTerm) else GammaTerm(*t) for t in raw_terms]
    out = np.empty(n)
    for j in range((n + MC_CHUNK - 1) // MC_CHUNK):
        lo = j * MC_CHUNK
        hi = min(n, lo + MC_CHUNK)
        out[lo:hi] = _sample_chunk(terms, hi - lo, seed, j)
    return out


def _sample_chunk(terms, m: int, seed: int, chunk_index: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed=[seed, chunk_index]))
    acc = np.zeros(m)
    for t in terms:
        acc += t.scale * rng.standard_exponential((m, t.shape)).sum(axis=1)
    return acc


def term_set_to_json(terms: Iterable[GammaTerm]) -> str:
    """Serialize (shape, scale) pairs to a JSON record."""
    items = [t if isinstance(t, GammaTerm) else GammaTerm(*t) for t in terms]
    return json.dumps(
        {"terms": [{"shape": t.shape, "scale": t.scale} for t in items]}, indent=2
    )


def term_set_from_json(text: str) -> tuple[GammaTerm, ...]:
    """Parse the JSON record written by :func:`term_set_to_json`."""
    doc = json.loads(text)
    if set(doc) != {"terms"}:
        raise ValueError(f"unexpected keys in term-set record: {sorted(set(doc) - {'terms'})}")
    return tuple(GammaTerm(int(t["shape"]), float(t["scale"])) for t in doc["terms"])
