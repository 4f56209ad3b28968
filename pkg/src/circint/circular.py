"""Geometry and propagation of the circular interference model.

A scenario is a central base station plus concentric circles of equidistant
nodes, each circle carrying a total power split across its nodes by a power
profile.  Every (node, user) link contributes one scaled Gamma term; the
aggregate signal or interference over a node set is a canonical Gamma term set
ready for the exact sum machinery in :mod:`circint.gamma_sum`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Iterable

from .gamma_sum import (
    CanonicalTermSet,
    GammaTerm,
    MERGE_TOL_DEFAULT,
    canonicalize,
)


@dataclass(frozen=True)
class PathLossLaw:
    """Distance-dependent power gain min(intercept, constant * x^-exponent).

    The intercept caps the gain near the transmitter (x -> 0 stays finite);
    an infinite intercept gives the pure power law.
    """

    intercept: float = 1.0
    constant: float = 1.0
    exponent: float = 4.0

    def __post_init__(self):
        if not (self.intercept > 0 and self.constant > 0 and self.exponent > 0):
            raise ValueError("intercept, constant and exponent must all be positive")

    @classmethod
    def power_law(cls, constant: float = 1.0, exponent: float = 4.0) -> "PathLossLaw":
        """Unclipped power law constant * x^-exponent."""
        return cls(intercept=math.inf, constant=constant, exponent=exponent)

    def gain(self, x: float) -> float:
        return path_loss(self, x)


def path_loss(law: PathLossLaw, x: float) -> float:
    """Propagation gain at distance x > 0."""
    if x <= 0:
        raise ValueError(f"distance must be positive, got {x}")
    return min(law.intercept, law.constant * x ** -law.exponent)


def _gain_with_floor(law: PathLossLaw, x: float) -> float:
    # x == 0 is the user sitting on a node; the clipped law tends to the
    # intercept there, so no singularity for finite intercepts.
    if x == 0.0:
        if math.isinf(law.intercept):
            raise ValueError("zero distance under an unclipped power law")
        return law.intercept
    return path_loss(law, x)


@dataclass(frozen=True)
class FadingLaw:
    """Gamma fading with integer shape; mean = shape * scale."""

    shape: int
    scale: float

    def __post_init__(self):
        if not isinstance(self.shape, (int,)) or isinstance(self.shape, bool):
            raise ValueError(f"fading shape must be an integer, got {self.shape!r}")
        if self.shape < 1:
            raise ValueError(f"fading shape must be >= 1, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"fading scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale


@dataclass(frozen=True)
class Circle:
    """One circle: radius, phase, node count, total power and power profile."""

    radius: float
    phase: float
    node_count: int
    total_power: float
    profile: tuple[float, ...]

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {self.node_count}")
        bound = math.pi / self.node_count
        if abs(self.phase) > bound * (1 + 1e-9):
            raise ValueError(
                f"phase {self.phase} outside [-pi/N, pi/N] = [{-bound:.6g}, {bound:.6g}]"
            )
        prof = tuple(float(p) for p in self.profile)
        if len(prof) != self.node_count:
            raise ValueError(
                f"profile length {len(prof)} != node_count {self.node_count}"
            )
        if any(p < 0 or p > 1 for p in prof):
            raise ValueError("profile entries must lie in [0, 1]")
        if abs(sum(prof) - 1.0) > 1e-12:
            raise ValueError(f"profile must sum to 1, got {sum(prof)!r}")
        object.__setattr__(self, "profile", prof)

    @classmethod
    def uniform(
        cls, radius: float, node_count: int, total_power: float = 1.0, phase: float = 0.0
    ) -> "Circle":
        return cls(radius, phase, node_count, total_power, (1.0 / node_count,) * node_count)


@dataclass(frozen=True)
class NodeRef:
    """(circle, node) address; (0, 0) is the central base station.

    Circle and node indices are 1-based for nodes on circles.
    """

    circle: int
    node: int

    def __post_init__(self):
        if self.circle == 0:
            if self.node != 0:
                raise ValueError("central node is (0, 0)")
        elif self.circle < 0 or self.node < 1:
            raise ValueError(f"invalid node reference ({self.circle}, {self.node})")

    @property
    def is_central(self) -> bool:
        return self.circle == 0


CENTRAL_NODE = NodeRef(0, 0)


@dataclass(frozen=True)
class CircularScenario:
    """Central base station plus circles of interferers, with one global
    fading law and path loss law."""

    central_power: float
    circles: tuple[Circle, ...]
    fading: FadingLaw
    path_loss: PathLossLaw

    def __post_init__(self):
        if self.central_power < 0:
            raise ValueError(f"central_power must be >= 0, got {self.central_power}")
        radii = [c.radius for c in self.circles]
        if any(radii[i] >= radii[i + 1] for i in range(len(radii) - 1)):
            raise ValueError(f"circle radii must be strictly increasing, got {radii}")

    def circle(self, c: int) -> Circle:
        if not 1 <= c <= len(self.circles):
            raise IndexError(f"circle index must be in [1, {len(self.circles)}], got {c}")
        return self.circles[c - 1]

    def all_circle_nodes(self) -> tuple[NodeRef, ...]:
        """Every node on every circle, central node excluded."""
        return tuple(
            NodeRef(c, n)
            for c, circ in enumerate(self.circles, start=1)
            for n in range(1, circ.node_count + 1)
        )

    def node_power(self, node: NodeRef) -> float:
        """Transmit power assigned to one node."""
        if node.is_central:
            return self.central_power
        circ = self.circle(node.circle)
        if not 1 <= node.node <= circ.node_count:
            raise IndexError(f"node index {node.node} outside circle {node.circle}")
        return circ.total_power * circ.profile[node.node - 1]

    def node_distance(self, node: NodeRef, r: float) -> float:
        if node.is_central:
            return r
        return node_geometry(self.circle(node.circle), node.node, r)[1]

    def scaled(self, factor: float) -> "CircularScenario":
        """Scenario with all transmit powers multiplied by factor."""
        if factor <= 0:
            raise ValueError(f"factor must be positive, got {factor}")
        circles = tuple(
            Circle(c.radius, c.phase, c.node_count, c.total_power * factor, c.profile)
            for c in self.circles
        )
        return CircularScenario(self.central_power * factor, circles, self.fading, self.path_loss)


def node_geometry(circle: Circle, n: int, r: float) -> tuple[float, float]:
    """Angle and distance of node n (1-based) as seen from the user at (r, 0).

    The node sits at polar angle 2*pi*n/N - phase; the distance is the exact
    Euclidean one.
    """
    if not 1 <= n <= circle.node_count:
        raise IndexError(f"node index must be in [1, {circle.node_count}], got {n}")
    if r < 0:
        raise ValueError(f"user eccentricity must be >= 0, got {r}")
    psi = 2.0 * math.pi * n / circle.node_count - circle.phase
    d_sq = circle.radius**2 + r**2 - 2.0 * circle.radius * r * math.cos(psi)
    return psi, math.sqrt(max(d_sq, 0.0))


def rx_gamma_term(scenario: CircularScenario, node: NodeRef, r: float) -> GammaTerm:
    """Received power from one node as a scaled Gamma term.

    The fading variable is scaled by transmit power times path gain, so the
    term is Gamma[fading shape, power * gain * fading scale].
    """
    power = scenario.node_power(node)
    if power <= 0:
        raise ValueError(f"node {node} has no transmit power")
    d = scenario.node_distance(node, r)
    gain = _gain_with_floor(scenario.path_loss, d)
    return GammaTerm(scenario.fading.shape, power * gain * scenario.fading.scale)


def aggregate_terms(
    scenario: CircularScenario,
    nodes: Iterable[NodeRef],
    r: float,
    merge_tol: float = MERGE_TOL_DEFAULT,
) -> CanonicalTermSet:
    """Canonical Gamma term set of the aggregate power over a node set.

    Zero-power nodes (empty profile slots) contribute nothing and are skipped.
    Mirror-symmetric geometry collapses to merged terms with summed shapes.
    """
    raw = []
    for node in nodes:
        if scenario.node_power(node) > 0:
            raw.append(rx_gamma_term(scenario, node, r))
    if not raw:
        raise ValueError("no node with positive power in the aggregate set")
    return canonicalize(raw, merge_tol)


def scenario_to_json(scenario: CircularScenario) -> str:
    """Serialize a scenario to a JSON record that round-trips bit-exactly."""
    doc = {
        "central_power": scenario.central_power,
        "fading": {"shape": scenario.fading.shape, "scale": scenario.fading.scale},
        "path_loss": asdict(scenario.path_loss),
        "circles": [
            {
                "radius": c.radius,
                "phase": c.phase,
                "node_count": c.node_count,
                "total_power": c.total_power,
                "profile": list(c.profile),
            }
            for c in scenario.circles
        ],
    }
    return json.dumps(doc, indent=2)


def scenario_from_json(text: str) -> CircularScenario:
    doc = json.loads(text)
    expected = {"central_power", "fading", "path_loss", "circles"}
    if set(doc) != expected:
        raise ValueError(f"unexpected scenario keys: {sorted(set(doc) ^ expected)}")
    circles = tuple(
        Circle(
            radius=c["radius"],
            phase=c["phase"],
            node_count=int(c["node_count"]),
            total_power=c["total_power"],
            profile=tuple(c["profile"]),
        )
        for c in doc["circles"]
    )
    return CircularScenario(
        central_power=doc["central_power"],
        circles=circles,
        fading=FadingLaw(int(doc["fading"]["shape"]), doc["fading"]["scale"]),
        path_loss=PathLossLaw(**doc["path_loss"]),
    )
