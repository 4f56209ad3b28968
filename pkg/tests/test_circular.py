import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circint import (
    CENTRAL_NODE,
    Circle,
    CircularScenario,
    EmpiricalCdf,
    FadingLaw,
    GammaTerm,
    NodeRef,
    PathLossLaw,
    aggregate_terms,
    ks_critical_value,
    ks_distance,
    mc_sample_sum,
    node_geometry,
    path_loss,
    rx_gamma_term,
    scenario_from_json,
    scenario_to_json,
    sum_pdf,
)


# ------------------------------------------------------------------ path loss

def test_path_loss_reference_values(mapping_law):
    assert path_loss(mapping_law, 1.0) == 1.0
    assert path_loss(mapping_law, 2.0) == 0.0625
    assert path_loss(mapping_law, 0.5) == 1.0  # clipped at the intercept


def test_path_loss_unclipped_power_law():
    law = PathLossLaw.power_law(1.0, 4.0)
    assert path_loss(law, 0.5) == 16.0
    assert path_loss(law, 2.0) == 0.0625


def test_path_loss_rejects_nonpositive_distance(mapping_law):
    with pytest.raises(ValueError):
        path_loss(mapping_law, 0.0)
    with pytest.raises(ValueError):
        path_loss(mapping_law, -1.0)


@given(st.floats(0.01, 1e3), st.floats(0.01, 1e3))
def test_path_loss_nonincreasing_and_capped(x1, x2):
    law = PathLossLaw(intercept=2.0, constant=1.5, exponent=3.0)
    g1, g2 = path_loss(law, x1), path_loss(law, x2)
    assert g1 <= law.intercept and g2 <= law.intercept
    if x1 <= x2:
        assert g1 >= g2


def test_path_loss_validation():
    with pytest.raises(ValueError):
        PathLossLaw(intercept=-1.0)
    with pytest.raises(ValueError):
        PathLossLaw(exponent=0.0)


# -------------------------------------------------------------- node geometry

def test_node_geometry_center_user(small_circle):
    for n in range(1, 11):
        _, d = node_geometry(small_circle, n, 0.0)
        assert d == pytest.approx(small_circle.radius, abs=1e-15)


def test_node_geometry_collinear_and_antipodal():
    circle = Circle.uniform(2.0, 10, phase=0.0)
    _, d_near = node_geometry(circle, 10, 1.0)  # node angle 2*pi: same side
    assert d_near == pytest.approx(1.0, abs=1e-12)
    _, d_far = node_geometry(circle, 5, 1.0)  # node angle pi: opposite side
    assert d_far == pytest.approx(3.0, abs=1e-12)


def test_node_geometry_index_and_r_validation(small_circle):
    with pytest.raises(IndexError):
        node_geometry(small_circle, 0, 0.5)
    with pytest.raises(IndexError):
        node_geometry(small_circle, 11, 0.5)
    with pytest.raises(ValueError):
        node_geometry(small_circle, 1, -0.1)


def test_mirror_symmetry_pairs_and_scale_halving(fading):
    # phase pi/N places nodes at +-(2n-1)*pi/N: node n mirrors node N+1-n
    n_nodes = 10
    circle = Circle.uniform(2.0, n_nodes, phase=math.pi / n_nodes)
    scenario = CircularScenario(0.1, (circle,), fading, PathLossLaw.power_law())
    for r in (0.3, 0.5, 1.0):
        for n in range(1, n_nodes + 1):
            _, d1 = node_geometry(circle, n, r)
            _, d2 = node_geometry(circle, n_nodes + 1 - n, r)
            assert d1 == pytest.approx(d2, rel=1e-14)
        ts = aggregate_terms(scenario, scenario.all_circle_nodes(), r)
        assert len(ts) == n_nodes // 2
        assert ts.shapes == (2 * fading.shape,) * (n_nodes // 2)


# ------------------------------------------------------------ received power

def test_rx_gamma_term_circle_node(fading):
    circle = Circle.uniform(1.0, 10, total_power=1.0, phase=0.0)
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw(1.0, 1.0, 4.0))
    term = rx_gamma_term(scenario, NodeRef(1, 3), 0.0)  # d = 1, gain 1
    assert term == GammaTerm(2, 0.1)


def test_rx_gamma_term_central_node(fading, study_scenario):
    term = rx_gamma_term(study_scenario, CENTRAL_NODE, 1.0)
    assert term.shape == 2
    assert term.scale == pytest.approx(0.1)
    term_mid = rx_gamma_term(study_scenario, CENTRAL_NODE, 0.5)
    assert term_mid.scale == pytest.approx(0.1 * 16.0)  # unclipped fourth power


def test_rx_gamma_term_center_symmetry(fading):
    circle = Circle.uniform(3.0, 8, total_power=2.0, phase=0.3 / 8)
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw(1.0, 1.0, 4.0))
    scales = {rx_gamma_term(scenario, NodeRef(1, n), 0.0).scale for n in range(1, 9)}
    assert len(scales) == 1
    assert scales.pop() == pytest.approx(2.0 / 8 * 3.0**-4 * 1.0)


def test_rx_gamma_term_zero_power_rejected(fading):
    circle = Circle(2.0, 0.0, 4, 1.0, (1.0, 0.0, 0.0, 0.0))
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw())
    with pytest.raises(ValueError):
        rx_gamma_term(scenario, NodeRef(1, 2), 0.5)
    with pytest.raises(ValueError):
        rx_gamma_term(scenario, CENTRAL_NODE, 0.5)


def test_rx_gamma_term_user_on_node_uses_intercept(fading):
    circle = Circle.uniform(2.0, 4, phase=0.0)
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw(1.0, 1.0, 4.0))
    term = rx_gamma_term(scenario, NodeRef(1, 4), 2.0)  # node at (2, 0) = user
    assert term.scale == pytest.approx(0.25 * 1.0)


def test_monotone_scale_in_distance(study_scenario):
    circle = study_scenario.circle(1)
    n = 10  # node closest to the positive x axis
    rs = np.linspace(0.0, 1.0, 11)
    d = [node_geometry(circle, n, r)[1] for r in rs]
    th = [rx_gamma_term(study_scenario, NodeRef(1, n), r).scale for r in rs]
    order = np.argsort(d)
    assert np.all(np.diff(np.array(th)[order]) <= 1e-15)


# ------------------------------------------------------------ aggregate terms

def test_aggregate_one_circle_five_scales(one_circle_scenario):
    ts = aggregate_terms(one_circle_scenario, one_circle_scenario.all_circle_nodes(), 1.0)
    assert len(ts) == 5
    assert ts.shapes == (4, 4, 4, 4, 4)


def test_aggregate_central_only(study_scenario):
    ts = aggregate_terms(study_scenario, [CENTRAL_NODE], 0.5)
    assert len(ts) == 1
    assert ts.terms[0].shape == 2
    assert ts.terms[0].scale == pytest.approx(1.6)


def test_aggregate_two_circles_brute_force_census(study_scenario):
    # oracle: enumerate every node's distance directly and count unique scales
    r = 0.5
    seen = {}
    for c, circle in enumerate(study_scenario.circles, start=1):
        for n in range(1, circle.node_count + 1):
            psi = 2 * math.pi * n / circle.node_count - circle.phase
            d = math.sqrt(circle.radius**2 + r**2 - 2 * circle.radius * r * math.cos(psi))
            scale = circle.total_power / 10 * d**-4
            key = round(scale, 14)
            seen[key] = seen.get(key, 0) + 2  # fading shape 2 per node
    ts = aggregate_terms(study_scenario, study_scenario.all_circle_nodes(), r)
    assert len(ts) == len(seen) == 11
    assert sorted(ts.shapes) == sorted(seen.values())
    assert sum(ts.shapes) == 40


def test_aggregate_skips_zero_power_nodes(fading):
    circle = Circle(2.0, 0.0, 4, 1.0, (0.5, 0.5, 0.0, 0.0))
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw())
    ts = aggregate_terms(scenario, scenario.all_circle_nodes(), 0.3)
    assert sum(ts.shapes) == 2 * fading.shape


def test_aggregate_all_zero_power_rejected(fading):
    circle = Circle(2.0, 0.0, 2, 1.0, (1.0, 0.0))
    scenario = CircularScenario(0.0, (circle,), fading, PathLossLaw())
    with pytest.raises(ValueError):
        aggregate_terms(scenario, [NodeRef(1, 2)], 0.3)


def test_aggregate_matches_mc_oracle(one_circle_scenario):
    # draw each node's fading independently and sum, per the model definition
    r = 1.0
    nodes = one_circle_scenario.all_circle_nodes()
    raw = [rx_gamma_term(one_circle_scenario, nd, r) for nd in nodes]
    ts = aggregate_terms(one_circle_scenario, nodes, r)
    mix = sum_pdf(ts)
    emp = EmpiricalCdf(mc_sample_sum(raw, 200_000, seed=15))
    assert ks_distance(mix, emp) < ks_critical_value(emp.n, 0.01)


# -------------------------------------------------------------- value objects

def test_circle_validation():
    with pytest.raises(ValueError):
        Circle.uniform(-1.0, 4)
    with pytest.raises(ValueError):
        Circle(1.0, 0.0, 3, 1.0, (0.5, 0.5))  # wrong profile length
    with pytest.raises(ValueError):
        Circle(1.0, 0.0, 2, 1.0, (0.8, 0.1))  # does not sum to one
    with pytest.raises(ValueError):
        Circle(1.0, math.pi, 4, 1.0, (0.25,) * 4)  # phase outside [-pi/N, pi/N]


def test_energy_accounting(study_scenario):
    for c, circle in enumerate(study_scenario.circles, start=1):
        total = sum(
            study_scenario.node_power(NodeRef(c, n)) for n in range(1, circle.node_count + 1)
        )
        assert total == pytest.approx(circle.total_power, rel=1e-12)


def test_scenario_validation(fading):
    c1 = Circle.uniform(2.0, 4)
    c2 = Circle.uniform(1.0, 4)
    with pytest.raises(ValueError):
        CircularScenario(0.1, (c1, c2), fading, PathLossLaw())  # radii must increase
    with pytest.raises(ValueError):
        CircularScenario(-0.1, (c1,), fading, PathLossLaw())


def test_node_ref_validation():
    with pytest.raises(ValueError):
        NodeRef(0, 3)
    with pytest.raises(ValueError):
        NodeRef(1, 0)
    assert CENTRAL_NODE.is_central


def test_scenario_json_round_trip_bit_exact(study_scenario):
    text = scenario_to_json(study_scenario)
    back = scenario_from_json(text)
    assert back == study_scenario  # dataclass equality is field-exact
    assert scenario_to_json(back) == text
    assert math.isinf(back.path_loss.intercept)


def test_scenario_json_rejects_unknown_keys(study_scenario):
    text = scenario_to_json(study_scenario).replace(
        '"central_power"', '"mystery": 1, "central_power"', 1
    )
    with pytest.raises(ValueError):
        scenario_from_json(text)


def test_scenario_scaled(study_scenario):
    doubled = study_scenario.scaled(2.0)
    assert doubled.central_power == 0.2
    assert doubled.circles[0].total_power == 2.0
    assert doubled.circles[0].profile == study_scenario.circles[0].profile
