"""Batch experiment runners: KS validation sweeps, profile peak-to-average
statistics, collaboration-scheme SIR/rate studies, and dominant-interferer
decompositions.

Each runner is a pure function of its config: per-snapshot randomness is keyed
by (seed, snapshot index), so result tables are byte-identical across runs and
worker partitionings.  Desk-scale defaults keep runtimes in minutes;
``paper_scale`` restores the published snapshot and sample counts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .circular import (
    Circle,
    CircularScenario,
    FadingLaw,
    PathLossLaw,
    aggregate_terms,
    scenario_to_json,
)
from .gamma_sum import (
    CanonicalTermSet,
    ExpPolyMixture,
    amplitude_bits,
    cdf_extended,
    condense,
    mc_sample_sum,
    sum_pdf,
    sum_pdf_components,
)
from .linkstats import (
    CollaborationScheme,
    EmpiricalCdf,
    RateDensity,
    SirDensity,
    collaboration_sets,
    ks_distance,
    ks_distance_bounded,
    rate_pdf,
    sir_pdf,
)
from .mapping import (
    PppTier,
    annulus_for_expected_count,
    map_deployment,
    mc_interference_original,
    profile_papr,
    sample_ppp,
)

# reference propagation setup shared by all studies: unit-power stations,
# fourth-power distance law, 2x1 maximum-ratio fading
REFERENCE_FADING = FadingLaw(2, 1.0)
MAPPING_PATH_LOSS = PathLossLaw(intercept=1.0, constant=1.0, exponent=4.0)
# the two-circle study's central link runs inside unit distance: unclipped law
STUDY_PATH_LOSS = PathLossLaw.power_law(1.0, 4.0)

_EVAL_BITS_LIMIT = 44.0  # float64 evaluation budget for signed mixtures
_CONDENSE_LADDER = (0.02, 0.05, 0.1, 0.15, 0.2)
_EXTENDED_GRID = 1200


def reference_two_circle_scenario(
    central_power: float = 0.1,
    radii: tuple[float, float] = (2.0, 4.0),
    nodes_per_circle: int = 10,
    phases: tuple[float, float] = (-math.pi / 10, 0.0),
) -> CircularScenario:
    """Generic symmetric two-circle study scenario with uniform profiles."""
    circles = tuple(
        Circle.uniform(r, nodes_per_circle, 1.0, phase=p) for r, p in zip(radii, phases)
    )
    return CircularScenario(central_power, circles, REFERENCE_FADING, STUDY_PATH_LOSS)


def reference_one_circle_scenario(**kwargs) -> CircularScenario:
    """Inner circle only, for the dominant-interferer decomposition study."""
    full = reference_two_circle_scenario(**kwargs)
    return CircularScenario(
        full.central_power, full.circles[:1], full.fading, full.path_loss
    )


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    parameters: dict
    metric: str
    value: float
    half_width: float = math.nan  # 95% CI half width where applicable

    def as_record(self, seed: int) -> dict:
        rec = {
            "experiment": self.experiment,
            "metric": self.metric,
            "value": self.value,
            "half_width": self.half_width,
            "seed": seed,
            "version": __version__,
        }
        rec.update({f"param_{k}": v for k, v in sorted(self.parameters.items())})
        return rec


@dataclass(frozen=True)
class ResultTable:
    """Rows plus provenance; serializes to CSV with a comment header."""

    experiment: str
    rows: tuple[ResultRow, ...]
    config: dict
    seed: int

    def to_csv(self) -> str:
        records = [r.as_record(self.seed) for r in self.rows]
        keys: list[str] = []
        for rec in records:
            for k in rec:
                if k not in keys:
                    keys.append(k)
        buf = io.StringIO()
        buf.write(f"# circint {__version__} experiment={self.experiment}\n")
        buf.write(f"# config={json.dumps(self.config, sort_keys=True)}\n")
        buf.write(",".join(keys) + "\n")
        for rec in records:
            buf.write(",".join(_csv_cell(rec.get(k)) for k in keys) + "\n")
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "version": __version__,
            "rows": len(self.rows),
            "config": self.config,
        }

    def values(self, metric: str, **params) -> list[float]:
        out = []
        for r in self.rows:
            if r.metric == metric and all(r.parameters.get(k) == v for k, v in params.items()):
                out.append(r.value)
        return out

    def value(self, metric: str, **params) -> float:
        vals = self.values(metric, **params)
        if len(vals) != 1:
            raise KeyError(f"{metric} with {params}: {len(vals)} matches")
        return vals[0]


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def analytic_interference_cdf(
    term_set: CanonicalTermSet, precision_bits: int = 256
) -> tuple[ExpPolyMixture | None, CanonicalTermSet, float]:
    """Evaluation-ready form of a mapped interference term set.

    Mapped deployments produce many near-equal sector scales whose exact
    mixture coefficients cancel catastrophically in float64.  The term set is
    condensed (mean-preserving, O(tol^2) distributional error, measured below
    1e-4 at the coarsest rung) until the mixture fits the float64 evaluation
    budget; when even the coarsest rung stays hot the mixture slot is None and
    callers must evaluate through :func:`circint.gamma_sum.cdf_extended`.

    Returns (mixture or None, condensed term set, condense tolerance used).
    """
    condensed = term_set
    tol_used = 0.0
    for tol in _CONDENSE_LADDER:
        condensed = condense(term_set, tol)
        tol_used = tol
        mix = sum_pdf(condensed, precision_bits=precision_bits)
        if amplitude_bits(mix) <= _EVAL_BITS_LIMIT:
            return mix, condensed, tol_used
    return None, condensed, tol_used


def ks_against_samples(
    term_set: CanonicalTermSet, empirical: EmpiricalCdf, precision_bits: int = 256
) -> float:
    """KS distance between a term set's analytic CDF and an empirical one.

    Uses fast float64 evaluation when the mixture is well conditioned,
    otherwise an extended-precision evaluation on a subsample of the order
    statistics with a rigorous interval bound (resolution ~1/grid, reported as
    the upper end, so ill-conditioned cases can only look worse, not better).
    """
    mix, condensed, _ = analytic_interference_cdf(term_set, precision_bits)
    if mix is not None:
        return ks_distance(mix, empirical)
    _, upper = ks_distance_bounded(
        lambda xs: cdf_extended(condensed, xs), empirical, _EXTENDED_GRID
    )
    return upper


@dataclass(frozen=True)
class KsSweepConfig:
    intensity: float = 0.1
    n_expected: float = 1000.0
    inner_radius: float = 2.0
    circle_counts: tuple[int, ...] = (1, 2, 3, 4, 5)
    nodes_per_circle: tuple[int, ...] = (20,)
    r_grid: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 1.0, 21), 6))
    snapshots: int = 100
    fading_draws: int = 10_000
    tx_power: float = 1.0
    overlay_intensity: float | None = None  # dense low-power tier, if any
    overlay_tx_power: float = 0.01
    precision_bits: int = 256


def _ks_snapshot(config: KsSweepConfig, seed: int, snap: int):
    """All (C, N, r) KS distances of one snapshot; pure in (config, seed, snap)."""
    region = annulus_for_expected_count(config.intensity, config.n_expected, config.inner_radius)
    tier = PppTier(config.intensity, region, config.tx_power, REFERENCE_FADING)
    law = MAPPING_PATH_LOSS
    dep = sample_ppp(tier, seed=_sub_seed(seed, snap, 0))
    if config.overlay_intensity is not None:
        overlay = PppTier(
            config.overlay_intensity, region, config.overlay_tx_power, REFERENCE_FADING
        )
        dep = dep.merged_with(sample_ppp(overlay, seed=_sub_seed(seed, snap, 1)))
    out: list[tuple[tuple[int, int, float], float]] = []
    skipped = 0
    for ri, r in enumerate(config.r_grid):
        emp = mc_interference_original(
            dep, law, r, config.fading_draws, seed=_sub_seed(seed, snap, 2 + ri)
        )
        for c_count in config.circle_counts:
            if c_count > len(dep):
                skipped += 1
                continue
            for n_nodes in config.nodes_per_circle:
                scn = map_deployment(dep, law, c_count, n_nodes, model_fading=REFERENCE_FADING)
                ts = aggregate_terms(scn, scn.all_circle_nodes(), r)
                d = ks_against_samples(ts, emp, config.precision_bits)
                out.append(((c_count, n_nodes, r), d))
    return out, skipped


def run_ks_sweep(config: KsSweepConfig, seed: int, jobs: int = 1) -> ResultTable:
    """Mean KS distance (with 95% CI) between mapped models and PPP originals.

    Per snapshot: sample the PPP (plus optional overlay tier), map it for every
    (C, N) pair, and compare the model's analytic aggregate-interference CDF
    against a Monte Carlo of the original deployment at each user eccentricity.
    Snapshots are independent and seeded by index, so the result is identical
    for any worker count.
    """
    snaps = range(config.snapshots)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ks_snapshot, *zip(*[(config, seed, s) for s in snaps])))
    else:
        results = [_ks_snapshot(config, seed, s) for s in snaps]

    distances: dict[tuple[int, int, float], list[float]] = {}
    skipped = 0
    for pairs, s in results:
        skipped += s
        for key, d in pairs:
            distances.setdefault(key, []).append(d)

    rows = []
    for (c_count, n_nodes, r), vals in sorted(distances.items()):
        arr = np.asarray(vals)
        params = {"C": c_count, "N": n_nodes, "r": r, "snapshots": len(vals)}
        rows.append(ResultRow("ks-sweep", params, "ks_mean", float(arr.mean()), _ci95(arr)))
    if skipped:
        rows.append(ResultRow("ks-sweep", {}, "snapshots_skipped", float(skipped)))
    return ResultTable("ks-sweep", tuple(rows), dataclasses.asdict(config), seed)


@dataclass(frozen=True)
class PaprConfig:
    intensity: float = 0.1
    n_expected_values: tuple[float, ...] = (100.0, 1000.0)
    # inner exclusion of the profile study; 1.25 reproduces the reported
    # peak-to-average spread (the KS sweep's 2.0 dilutes the dominant station)
    inner_radius: float = 1.25
    nodes_per_circle: int = 20
    snapshots: int = 300
    tx_power: float = 1.0


def run_papr(config: PaprConfig, seed: int) -> ResultTable:
    """Peak-to-average ratios of mapped single-circle power profiles."""
    rows = []
    for n_exp in config.n_expected_values:
        region = annulus_for_expected_count(config.intensity, n_exp, config.inner_radius)
        tier = PppTier(config.intensity, region, config.tx_power, REFERENCE_FADING)
        ratios = []
        for snap in range(config.snapshots):
            dep = sample_ppp(tier, seed=_sub_seed(seed, snap, int(n_exp)))
            scn = map_deployment(
                dep, MAPPING_PATH_LOSS, 1, config.nodes_per_circle, model_fading=REFERENCE_FADING
            )
            ratios.append(profile_papr(scn.circles[0].profile))
        arr = np.sort(np.asarray(ratios))
        params = {"n_expected": n_exp, "snapshots": config.snapshots}
        rows.append(ResultRow("papr", params, "papr_median", float(np.median(arr))))
        rows.append(ResultRow("papr", params, "papr_mean", float(arr.mean()), _ci95(arr)))
        rows.append(ResultRow("papr", params, "papr_min", float(arr[0])))
        rows.append(ResultRow("papr", params, "papr_max", float(arr[-1])))
        for q in (0.1, 0.25, 0.75, 0.9):
            rows.append(
                ResultRow("papr", params, f"papr_q{int(q * 100)}", float(np.quantile(arr, q)))
            )
    return ResultTable("papr", tuple(rows), dataclasses.asdict(config), seed)


@dataclass(frozen=True)
class CollaborationConfig:
    central_power: float = 0.1
    radii: tuple[float, float] = (2.0, 4.0)
    nodes_per_circle: int = 10
    phases: tuple[float, float] = (-math.pi / 10, 0.0)
    user_positions: tuple[float, ...] = (0.5, 1.0)
    collaborators: int = 2
    curve_points: int = 200
    sir_grid_decades: tuple[float, float] = (-3.0, 3.0)
    mc_draws: int = 0  # optional Monte Carlo verification overlay
    scheme_names: tuple[str, ...] = tuple(s.value for s in CollaborationScheme)


def run_collaboration(config: CollaborationConfig, seed: int) -> ResultTable:
    """SIR and rate statistics of the collaboration schemes on the two-circle
    study scenario: medians per scheme and user position, plus CDF curves."""
    scenario = reference_two_circle_scenario(
        config.central_power, config.radii, config.nodes_per_circle, config.phases
    )
    schemes = [CollaborationScheme(name) for name in config.scheme_names]
    grid = np.logspace(*config.sir_grid_decades, config.curve_points)
    tau_grid = np.linspace(0.0, 10.0, config.curve_points)
    rows = []
    for r in config.user_positions:
        for scheme in schemes:
            dens, rate = collaboration_densities(scenario, scheme, r, config.collaborators)
            med = dens.median
            params = {"scheme": scheme.value, "r": r}
            rows.append(ResultRow("collab", params, "sir_median", med))
            rows.append(ResultRow("collab", params, "sir_median_db", 10 * math.log10(med)))
            rows.append(ResultRow("collab", params, "rate_median", rate.median))
            for g, v in zip(grid, dens.cdf(grid)):
                rows.append(ResultRow("collab", {**params, "gamma": float(g)}, "sir_cdf", float(v)))
            for t, v in zip(tau_grid, rate.cdf(tau_grid)):
                rows.append(ResultRow("collab", {**params, "tau": float(t)}, "rate_cdf", float(v)))
            if config.mc_draws:
                mc = _mc_sir_samples(scenario, scheme, r, config.collaborators, config.mc_draws, seed)
                d = ks_distance(dens, EmpiricalCdf(mc))
                rows.append(ResultRow("collab", params, "mc_ks", d))
                rows.append(ResultRow("collab", params, "mc_median", float(np.median(mc))))
    return ResultTable("collab", tuple(rows), dataclasses.asdict(config), seed)


def collaboration_curve_files(
    config: CollaborationConfig, seed: int
) -> dict[str, str]:
    """Two-column CDF curve exports, one file body per (scheme, position).

    Each body carries a metadata header with the scenario digest, scheme,
    user position and seed; keys are relative file names.
    """
    scenario = reference_two_circle_scenario(
        config.central_power, config.radii, config.nodes_per_circle, config.phases
    )
    digest = scenario_digest(scenario)
    grid = np.logspace(*config.sir_grid_decades, config.curve_points)
    out: dict[str, str] = {}
    for r in config.user_positions:
        for name in config.scheme_names:
            dens, _ = collaboration_densities(
                scenario, CollaborationScheme(name), r, config.collaborators
            )
            meta = {"scenario": digest, "scheme": name, "r": r, "seed": seed, "kind": "sir_cdf"}
            out[f"sir_cdf_{name}_r{r:g}.csv"] = curve_csv(grid, dens.cdf(grid), meta)
    return out


def collaboration_densities(
    scenario: CircularScenario, scheme: CollaborationScheme, r: float, m: int = 2
) -> tuple[SirDensity, RateDensity]:
    """Exact SIR and rate densities of one scheme at one user position."""
    signal_nodes, interferer_nodes = collaboration_sets(scenario, scheme, r, m)
    f_s = sum_pdf(aggregate_terms(scenario, signal_nodes, r))
    f_i = sum_pdf(aggregate_terms(scenario, interferer_nodes, r))
    dens = sir_pdf(f_s, f_i)
    return dens, rate_pdf(dens)


def _mc_sir_samples(scenario, scheme, r, m, draws, seed) -> np.ndarray:
    signal_nodes, interferer_nodes = collaboration_sets(scenario, scheme, r, m)
    s = mc_sample_sum(list(aggregate_terms(scenario, signal_nodes, r)), draws, _sub_seed(seed, 0, 7))
    i = mc_sample_sum(list(aggregate_terms(scenario, interferer_nodes, r)), draws, _sub_seed(seed, 1, 7))
    return s / i


@dataclass(frozen=True)
class DecompositionConfig:
    central_power: float = 0.1
    radius: float = 2.0
    nodes_per_circle: int = 10
    phase: float = -math.pi / 10
    user_positions: tuple[float, ...] = (0.5, 1.0)
    mc_draws: int = 1_000_000
    grid_points: int = 4001
    curve_points: int = 200


def run_single_circle_decomposition(config: DecompositionConfig, seed: int) -> ResultTable:
    """Full one-circle interference PDF plus dominant-pair truncations.

    Emits the KS of the full analytic PDF against a fading Monte Carlo and the
    L1 distance of each truncation (first L' dominant scales) from the full
    PDF; partial curves are exported on a fixed grid.
    """
    scenario = reference_one_circle_scenario(
        central_power=config.central_power,
        radii=(config.radius, 2 * config.radius),
        nodes_per_circle=config.nodes_per_circle,
        phases=(config.phase, 0.0),
    )
    rows = []
    for r in config.user_positions:
        ts = aggregate_terms(scenario, scenario.all_circle_nodes(), r)
        components = sum_pdf_components(ts)
        full = ExpPolyMixture(tuple(t for comp in components for t in comp.terms))
        samples = mc_sample_sum(list(ts), config.mc_draws, _sub_seed(seed, 0, round(10 * r)))
        d = ks_distance(full, EmpiricalCdf(samples))
        y_max = 40.0 * max(t.mean for t in ts)
        grid = np.linspace(0.0, y_max, config.grid_points)
        full_pdf = full.pdf(grid)
        params_base = {"r": r, "L": len(ts)}
        rows.append(ResultRow("decompose", params_base, "ks_vs_mc", d))
        curve_grid = np.linspace(0.0, y_max / 4.0, config.curve_points)
        for lp in range(1, len(ts) + 1):
            part = ExpPolyMixture(tuple(t for comp in components[:lp] for t in comp.terms))
            l1 = float(np.trapezoid(np.abs(part.pdf(grid) - full_pdf), grid))
            params = {**params_base, "L_prime": lp}
            rows.append(ResultRow("decompose", params, "l1_to_full", l1))
            for x, v in zip(curve_grid, part.pdf(curve_grid)):
                rows.append(ResultRow("decompose", {**params, "x": float(x)}, "partial_pdf", float(v)))
    return ResultTable("decompose", tuple(rows), dataclasses.asdict(config), seed)


def _sub_seed(seed: int, snapshot: int, stream: int) -> int:
    """Stable per-(snapshot, stream) seed; independent of execution order."""
    digest = hashlib.sha256(f"{seed}:{snapshot}:{stream}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _ci95(arr: np.ndarray) -> float:
    if arr.size < 2:
        return math.nan
    return float(1.96 * arr.std(ddof=1) / math.sqrt(arr.size))


def curve_csv(xs, ys, metadata: dict) -> str:
    """Two-column curve CSV with a JSON metadata comment header."""
    buf = io.StringIO()
    buf.write(f"# circint {__version__}\n")
    buf.write(f"# {json.dumps(metadata, sort_keys=True)}\n")
    buf.write("x,value\n")
    for x, y in zip(xs, ys):
        buf.write(f"{float(x)!r},{float(y)!r}\n")
    return buf.getvalue()


def scenario_digest(scenario: CircularScenario) -> str:
    """Short content hash identifying a scenario in exported metadata."""
    return hashlib.sha256(scenario_to_json(scenario).encode()).hexdigest()[:16]
