"""Deployment generation and condensation onto the circular model.

Deployments (Poisson point processes, hexagonal grids, or hand-built station
lists) are condensed into a :class:`~circint.circular.CircularScenario`:
circles are anchored on the successively strongest stations, the annulus is
cut into per-circle rings and per-node angular sectors, and each sector's mean
received power at the origin becomes one power-profile weight.  Total circle
powers are set so that the model's mean received power at the origin equals
the original deployment's.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special as sc

from .circular import Circle, CircularScenario, FadingLaw, PathLossLaw, path_loss
from .gamma_sum import GammaTerm, mc_sample_sum
from .linkstats import EmpiricalCdf


@dataclass(frozen=True)
class Annulus:
    """Mapping region between two radii."""

    r_in: float
    r_out: float

    def __post_init__(self):
        if not (self.r_out > self.r_in >= 0):
            raise ValueError(f"need r_out > r_in >= 0, got ({self.r_in}, {self.r_out})")

    @property
    def area(self) -> float:
        return math.pi * (self.r_out**2 - self.r_in**2)

    def contains(self, distance: float) -> bool:
        return self.r_in <= distance <= self.r_out


@dataclass(frozen=True)
class BaseStation:
    """One transmitter at polar position (distance, angle)."""

    distance: float
    angle: float
    tx_power: float
    fading: FadingLaw

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError(f"distance must be >= 0, got {self.distance}")
        if self.tx_power <= 0:
            raise ValueError(f"tx_power must be positive, got {self.tx_power}")

    def distance_to(self, r: float) -> float:
        """Distance to a user at (r, 0)."""
        d_sq = self.distance**2 + r**2 - 2.0 * self.distance * r * math.cos(self.angle)
        return math.sqrt(max(d_sq, 0.0))


@dataclass(frozen=True)
class Deployment:
    """Stations inside a mapping region; stations outside are rejected."""

    stations: tuple[BaseStation, ...]
    region: Annulus

    def __post_init__(self):
        for s in self.stations:
            if not self.region.contains(s.distance):
                raise ValueError(
                    f"station at distance {s.distance} outside region "
                    f"[{self.region.r_in}, {self.region.r_out}]"
                )

    def __len__(self) -> int:
        return len(self.stations)

    def merged_with(self, other: "Deployment") -> "Deployment":
        """Union of two deployments over the enclosing region."""
        region = Annulus(
            min(self.region.r_in, other.region.r_in),
            max(self.region.r_out, other.region.r_out),
        )
        return Deployment(self.stations + other.stations, region)


@dataclass(frozen=True)
class PppTier:
    """Homogeneous Poisson tier: intensity, region, per-station power & fading."""

    intensity: float
    region: Annulus
    tx_power: float
    fading: FadingLaw

    def __post_init__(self):
        if self.intensity <= 0:
            raise ValueError(f"intensity must be positive, got {self.intensity}")

    @property
    def expected_count(self) -> float:
        return self.intensity * self.region.area


def annulus_for_expected_count(intensity: float, n_expected: float, r_in: float) -> Annulus:
    """Outer radius chosen so the annulus holds n_expected stations on average."""
    if n_expected <= 0:
        raise ValueError(f"n_expected must be positive, got {n_expected}")
    return Annulus(r_in, math.sqrt(n_expected / (math.pi * intensity) + r_in**2))


def sample_ppp(tier: PppTier, seed: int) -> Deployment:
    """One Poisson snapshot: Poisson count, area-uniform positions.

    Radii use the inverse-CDF transform sqrt(r_in^2 + U * (r_out^2 - r_in^2)),
    so the radial density is proportional to the circumference.
    """
    rng = np.random.Generator(np.random.Philox(seed=[seed]))
    count = rng.poisson(tier.expected_count)
    u = rng.random(count)
    radii = np.sqrt(tier.region.r_in**2 + u * (tier.region.r_out**2 - tier.region.r_in**2))
    angles = rng.random(count) * 2.0 * math.pi
    stations = tuple(
        BaseStation(float(d), float(a), tier.tx_power, tier.fading)
        for d, a in zip(radii, angles)
    )
    return Deployment(stations, tier.region)


def hex_grid(rings: int, spacing: float, tx_power: float, fading: FadingLaw) -> Deployment:
    """Hexagonal lattice around (and excluding) the origin.

    Ring r holds 6r stations; the lattice basis is (spacing, 0) and
    spacing * (1/2, sqrt(3)/2).
    """
    if rings < 1:
        raise ValueError(f"rings must be >= 1, got {rings}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    stations = []
    for i in range(-rings, rings + 1):
        for j in range(-rings, rings + 1):
            if (i, j) == (0, 0) or max(abs(i), abs(j), abs(i + j)) > rings:
                continue
            x = spacing * (i + 0.5 * j)
            y = spacing * (math.sqrt(3.0) / 2.0) * j
            stations.append(
                BaseStation(math.hypot(x, y), math.atan2(y, x) % (2.0 * math.pi), tx_power, fading)
            )
    r_out = rings * spacing * (1.0 + 1e-12)
    return Deployment(tuple(stations), Annulus(0.0, r_out))


def mean_rx_at_origin(station: BaseStation, law: PathLossLaw) -> float:
    """Average received power at the origin: tx power * path gain * fading mean."""
    return station.tx_power * path_loss(law, station.distance) * station.fading.mean


def _anchor_phase(angle: float, node_count: int) -> tuple[float, int]:
    """Phase putting a node of an N-node circle at the given angle.

    Returns (phase in [-pi/N, pi/N], node index in 1..N of the coinciding node).
    """
    step = 2.0 * math.pi / node_count
    n_star = round(angle / step)
    phase = n_star * step - angle
    index = n_star % node_count
    if index == 0:
        index = node_count
    return phase, index


def _sector_index(angle: float, phase: float, node_count: int) -> int:
    """Angular sector (1..N) whose node angle 2*pi*n/N - phase is nearest.

    The perpendicular bisectors between adjacent equidistant nodes cut the
    ring into equal sectors of width 2*pi/N centered on the nodes, so nearest
    node angle and bisector sector agree; half-way ties round to even.
    """
    step = 2.0 * math.pi / node_count
    n = round((angle + phase) / step) % node_count
    return node_count if n == 0 else n


def map_deployment(
    deployment: Deployment,
    law: PathLossLaw,
    n_circles: int,
    nodes_per_circle: int,
    r_in: float | None = None,
    r_out: float | None = None,
    model_fading: FadingLaw | None = None,
) -> CircularScenario:
    """Condense a deployment into a circular scenario.

    Stations are ranked by mean received power at the origin (ties: closer
    first, then smaller angle).  Circle c is anchored so its c-th strongest
    station coincides with one of its nodes; after sorting the anchored radii,
    ring c spans [R_c, R_{c+1}) (ring 1 starts at r_in, ring C ends at r_out)
    and is cut into per-node sectors.  Sector weights are tx power * path gain
    * fading mean; circle powers are normalized so the model's mean received
    power at the origin reproduces the deployment's.  Rings without stations
    are dropped.
    """
    if n_circles < 1 or nodes_per_circle < 1:
        raise ValueError("n_circles and nodes_per_circle must be >= 1")
    if len(deployment) == 0:
        raise ValueError("deployment is empty")
    if n_circles > len(deployment):
        raise ValueError(
            f"cannot anchor {n_circles} circles on {len(deployment)} stations"
        )
    r_in = deployment.region.r_in if r_in is None else r_in
    r_out = deployment.region.r_out if r_out is None else r_out
    if model_fading is None:
        laws = {s.fading for s in deployment.stations}
        if len(laws) > 1:
            raise ValueError("heterogeneous station fading; pass model_fading explicitly")
        model_fading = next(iter(laws))

    ranked = sorted(
        deployment.stations,
        key=lambda s: (-mean_rx_at_origin(s, law), s.distance, s.angle),
    )
    anchors = ranked[:n_circles]
    if any(a.distance <= 0 for a in anchors):
        raise ValueError("cannot anchor a circle on a station at the origin")

    placed = sorted(
        (_anchor_phase(a.angle, nodes_per_circle) + (a.distance,) for a in anchors),
        key=lambda t: t[2],
    )
    radii = [p[2] for p in placed]
    phases = [p[0] for p in placed]

    # ring boundaries: [r_in, R_2, ..., R_C, r_out]
    bounds = [r_in] + radii[1:] + [r_out]
    weights = np.zeros((n_circles, nodes_per_circle))
    for s in deployment.stations:
        c = int(np.searchsorted(bounds[1:-1], s.distance, side="right"))
        n = _sector_index(s.angle, phases[c], nodes_per_circle)
        weights[c, n - 1] += mean_rx_at_origin(s, law)

    circles = []
    for c in range(n_circles):
        total = weights[c].sum()
        if total <= 0.0:
            continue  # ring holds no station: dropped, per the empty-region rule
        power = total / (path_loss(law, radii[c]) * model_fading.mean)
        profile = tuple(float(w) for w in weights[c] / total)
        circles.append(Circle(radii[c], phases[c], nodes_per_circle, power, profile))
    if not circles:
        raise ValueError("every mapping ring came out empty")
    return CircularScenario(
        central_power=0.0,
        circles=tuple(circles),
        fading=model_fading,
        path_loss=law,
    )


def recommend_parameters(
    intensity: float, law: PathLossLaw, r_in: float = 0.0, max_circles: int = 20
) -> tuple[int, int]:
    """Suggested (circles, nodes per circle) for a PPP of the given intensity.

    Nodes per circle: floor(1/intensity).  Circles: the c in 1..max_circles
    whose mean c-th-nearest-neighbor distance d_c (PPP order statistic
    Gamma(c+1/2)/(Gamma(c)*sqrt(pi*intensity)), shifted by r_in) minimizes
    |gain(d_c)/gain(d_1) - 2*intensity|.
    """
    if intensity <= 0:
        raise ValueError(f"intensity must be positive, got {intensity}")
    n = int(1.0 / intensity)
    d = [
        r_in + float(sc.gamma(c + 0.5) / sc.gamma(c)) / math.sqrt(intensity * math.pi)
        for c in range(1, max_circles + 1)
    ]
    target = 2.0 * intensity
    scores = [abs(path_loss(law, dc) / path_loss(law, d[0]) - target) for dc in d]
    c_best = 1 + int(np.argmin(scores))
    return c_best, n


def profile_papr(profile: Iterable[float]) -> float:
    """Peak-to-average ratio max(p) * N of a normalized power profile."""
    p = np.asarray(list(profile), dtype=float)
    if p.size == 0:
        raise ValueError("profile is empty")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"profile must sum to 1, got {p.sum()!r}")
    return float(p.max() * p.size)


def mc_interference_original(
    deployment: Deployment,
    law: PathLossLaw,
    r: float,
    n_fading: int,
    seed: int,
) -> EmpiricalCdf:
    """Monte Carlo aggregate interference of the original deployment.

    One spatial snapshot, ``n_fading`` independent fading draws: each sample
    is the sum over stations of tx power * path gain to (r, 0) * Gamma fading.
    Reuses the chunked counter-based sampler, so results are reproducible and
    partition-independent.
    """
    if len(deployment) == 0:
        return EmpiricalCdf(np.zeros(max(n_fading, 1)))
    terms = [
        GammaTerm(
            s.fading.shape,
            s.tx_power * path_loss(law, s.distance_to(r)) * s.fading.scale,
        )
        for s in deployment.stations
    ]
    return EmpiricalCdf(mc_sample_sum(terms, n_fading, seed))


_DEPLOYMENT_MAGIC = "#circint-deployment "


def deployment_to_text(deployment: Deployment, metadata: dict | None = None) -> str:
    """Line-oriented record: JSON header, then one station per line.

    Station lines carry distance, angle, tx power, fading shape, fading scale;
    floats use shortest round-trip formatting, so parsing is bit-exact.
    """
    header = {
        "region": {"r_in": deployment.region.r_in, "r_out": deployment.region.r_out},
        "stations": len(deployment),
    }
    if metadata:
        header.update(metadata)
    lines = [_DEPLOYMENT_MAGIC + json.dumps(header)]
    for s in deployment.stations:
        lines.append(f"{s.distance!r} {s.angle!r} {s.tx_power!r} {s.fading.shape} {s.fading.scale!r}")
    return "\n".join(lines) + "\n"


def deployment_from_text(text: str) -> Deployment:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_DEPLOYMENT_MAGIC):
        raise ValueError("missing deployment header line")
    header = json.loads(lines[0][len(_DEPLOYMENT_MAGIC):])
    region = Annulus(header["region"]["r_in"], header["region"]["r_out"])
    stations = []
    for ln in lines[1:]:
        fields = ln.split()
        if len(fields) != 5:
            raise ValueError(f"malformed station line: {ln!r}")
        d, a, p, k, th = fields
        stations.append(BaseStation(float(d), float(a), float(p), FadingLaw(int(k), float(th))))
    if len(stations) != header["stations"]:
        raise ValueError(
            f"header promises {header['stations']} stations, found {len(stations)}"
        )
    return Deployment(tuple(stations), region)


def profiles_to_csv(scenario: CircularScenario) -> str:
    """CSV of all circle profiles: circle, node, weight, power, radius, phase."""
    lines = ["circle,node,p,P_c,R_c,phi_c"]
    for c, circ in enumerate(scenario.circles, start=1):
        for n, p in enumerate(circ.profile, start=1):
            lines.append(
                f"{c},{n},{p!r},{circ.total_power!r},{circ.radius!r},{circ.phase!r}"
            )
    return "\n".join(lines) + "\n"
