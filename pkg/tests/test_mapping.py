import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circint import (
    Annulus,
    BaseStation,
    Circle,
    CircularScenario,
    Deployment,
    FadingLaw,
    GammaTerm,
    PathLossLaw,
    PppTier,
    annulus_for_expected_count,
    canonicalize,
    deployment_from_text,
    deployment_to_text,
    hex_grid,
    ks_critical_value,
    ks_distance,
    map_deployment,
    mc_interference_original,
    mean_rx_at_origin,
    node_geometry,
    path_loss,
    profile_papr,
    profiles_to_csv,
    recommend_parameters,
    sample_ppp,
    sum_pdf,
)


# ------------------------------------------------------------------- sampling

def test_ppp_expected_count():
    tier = PppTier(0.5, Annulus(1.0, 7.0), 1.0, FadingLaw(2, 1.0))
    counts = [len(sample_ppp(tier, seed=s)) for s in range(250)]
    expected = tier.expected_count
    sigma = math.sqrt(expected / len(counts))
    assert abs(np.mean(counts) - expected) < 3 * sigma


def test_ppp_radial_distribution_area_uniform():
    tier = PppTier(5.0, Annulus(2.0, 12.0), 1.0, FadingLaw(2, 1.0))
    dep = sample_ppp(tier, seed=123)
    rho = np.sort([s.distance for s in dep.stations])
    target = (rho**2 - 2.0**2) / (12.0**2 - 2.0**2)
    n = len(rho)
    steps = np.arange(1, n + 1) / n
    d = max(np.max(np.abs(target - steps)), np.max(np.abs(target - (steps - 1 / n))))
    assert d < ks_critical_value(n, 0.01)


def test_ppp_thin_annulus_degenerates():
    tier = PppTier(0.1, Annulus(5.0, 5.0 + 1e-9), 1.0, FadingLaw(2, 1.0))
    assert len(sample_ppp(tier, seed=3)) == 0


def test_ppp_deterministic_per_seed():
    tier = PppTier(1.0, Annulus(0.5, 5.0), 1.0, FadingLaw(2, 1.0))
    a = sample_ppp(tier, seed=11)
    b = sample_ppp(tier, seed=11)
    assert a == b
    assert a != sample_ppp(tier, seed=12)


def test_hex_grid_counts_and_distances():
    one = hex_grid(1, 2.5, 1.0, FadingLaw(2, 1.0))
    assert len(one) == 6
    assert all(s.distance == pytest.approx(2.5, rel=1e-12) for s in one.stations)
    two = hex_grid(2, 1.0, 1.0, FadingLaw(2, 1.0))
    assert len(two) == 18


def test_hex_grid_mapped_profile_has_twelve_spikes(mapping_law):
    dep = hex_grid(2, 1.0, 1.0, FadingLaw(2, 1.0))
    scenario = map_deployment(dep, mapping_law, 1, 12)
    profile = np.array(scenario.circles[0].profile)
    assert int((profile > 0).sum()) == 12
    # six-fold lattice symmetry survives the mapping
    assert np.allclose(profile, np.roll(profile, 2), atol=1e-15)


# ----------------------------------------------------------- origin power law

def test_mean_rx_reference_values(mapping_law, fading):
    st_far = BaseStation(2.0, 0.0, 1.0, fading)
    assert mean_rx_at_origin(st_far, mapping_law) == pytest.approx(0.125)
    weak = BaseStation(2.0, 1.0, 0.01, fading)
    assert mean_rx_at_origin(weak, mapping_law) == pytest.approx(0.00125)
    near = BaseStation(0.5, 0.2, 1.0, fading)  # clipped region
    assert mean_rx_at_origin(near, mapping_law) == pytest.approx(1.0 * 1.0 * 2.0)


# -------------------------------------------------------------------- mapping

def test_map_single_station_is_reproduced(mapping_law, fading):
    station = BaseStation(3.0, 0.7, 2.0, fading)
    dep = Deployment((station,), Annulus(1.0, 10.0))
    scenario = map_deployment(dep, mapping_law, 1, 8)
    circle = scenario.circles[0]
    assert circle.radius == station.distance
    assert abs(circle.phase) <= math.pi / 8 + 1e-12
    assert sorted(circle.profile, reverse=True)[0] == 1.0
    # the anchored node coincides with the station
    n = 1 + int(np.argmax(circle.profile))
    psi, _ = node_geometry(circle, n, 0.0)
    assert math.cos(psi - station.angle) == pytest.approx(1.0, abs=1e-12)
    # model transmit power reproduces the station's mean received power
    assert circle.total_power == pytest.approx(station.tx_power, rel=1e-12)


def _scenario_deployment(scenario: CircularScenario, region: Annulus) -> Deployment:
    stations = []
    for c, circle in enumerate(scenario.circles, start=1):
        for n, p in enumerate(circle.profile, start=1):
            if p > 0:
                psi, _ = node_geometry(circle, n, 0.0)
                stations.append(
                    BaseStation(
                        circle.radius,
                        psi % (2 * math.pi),
                        circle.total_power * p,
                        scenario.fading,
                    )
                )
    return Deployment(tuple(stations), region)


def test_self_mapping_single_circle_fixed_point(mapping_law, fading):
    circle = Circle.uniform(2.0, 10, total_power=1.0, phase=-math.pi / 10)
    scenario = CircularScenario(0.0, (circle,), fading, mapping_law)
    dep = _scenario_deployment(scenario, Annulus(1.0, 5.0))
    back = map_deployment(dep, mapping_law, 1, 10)
    rec = back.circles[0]
    assert rec.radius == circle.radius
    assert np.allclose(rec.profile, circle.profile, atol=1e-12)
    assert rec.total_power == pytest.approx(circle.total_power, rel=1e-12)
    # recovered node set is the original one (phase may differ by a node step)
    orig = sorted((2 * math.pi * n / 10 - circle.phase) % (2 * math.pi) for n in range(1, 11))
    got = sorted((2 * math.pi * n / 10 - rec.phase) % (2 * math.pi) for n in range(1, 11))
    assert np.allclose(orig, got, atol=1e-9)


def test_self_mapping_two_circles_fixed_point(mapping_law, fading):
    # dominance order must match circle order for the anchoring to recover the
    # radii: an indicator inner circle guarantees that
    inner = Circle(2.0, 0.05, 10, 1.0, (0.0, 0.0, 1.0) + (0.0,) * 7)
    outer = Circle.uniform(4.0, 10, total_power=1.0, phase=0.0)
    scenario = CircularScenario(0.0, (inner, outer), fading, mapping_law)
    dep = _scenario_deployment(scenario, Annulus(1.0, 6.0))
    back = map_deployment(dep, mapping_law, 2, 10)
    assert [c.radius for c in back.circles] == [2.0, 4.0]
    for rec, orig in zip(back.circles, scenario.circles):
        assert rec.total_power == pytest.approx(orig.total_power, rel=1e-12)
        rec_w = np.array(sorted(rec.profile))
        orig_w = np.array(sorted(orig.profile))
        assert np.allclose(rec_w, orig_w, atol=1e-12)


def test_power_conservation_at_origin(mapping_law, fading):
    tier = PppTier(0.2, Annulus(2.0, 20.0), 1.0, fading)
    dep = sample_ppp(tier, seed=99)
    scenario = map_deployment(dep, mapping_law, 3, 12)
    model = sum(
        c.total_power * path_loss(mapping_law, c.radius) * fading.mean
        for c in scenario.circles
    )
    original = sum(mean_rx_at_origin(s, mapping_law) for s in dep.stations)
    assert model == pytest.approx(original, rel=1e-13)


def test_profiles_normalized_and_sectors_exhaustive(mapping_law, fading):
    tier = PppTier(0.3, Annulus(1.0, 15.0), 1.0, fading)
    dep = sample_ppp(tier, seed=41)
    scenario = map_deployment(dep, mapping_law, 4, 9)
    for circle in scenario.circles:
        assert sum(circle.profile) == pytest.approx(1.0, abs=1e-12)


def test_anchors_coincide_with_nodes(mapping_law, fading):
    tier = PppTier(0.1, annulus_for_expected_count(0.1, 300, 2.0), 1.0, fading)
    dep = sample_ppp(tier, seed=7)
    scenario = map_deployment(dep, mapping_law, 4, 10)
    ranked = sorted(dep.stations, key=lambda s: -mean_rx_at_origin(s, mapping_law))
    radii = {c.radius: c for c in scenario.circles}
    for station in ranked[:4]:
        assert station.distance in radii
        circle = radii[station.distance]
        angles = [node_geometry(circle, n, 0.0)[0] for n in range(1, 11)]
        assert min(abs(math.remainder(a - station.angle, 2 * math.pi)) for a in angles) < 1e-9


def test_inner_stations_absorbed_into_first_circle(mapping_law, fading):
    # weak station closer than the dominant: mapped back onto circle 1
    strong = BaseStation(3.0, 0.1, 1.0, fading)
    weak = BaseStation(1.5, 2.0, 0.001, fading)
    far = BaseStation(6.0, 4.0, 1.0, fading)
    dep = Deployment((strong, weak, far), Annulus(1.0, 10.0))
    scenario = map_deployment(dep, mapping_law, 2, 8)
    assert [c.radius for c in scenario.circles] == [3.0, 6.0]
    inner_total = scenario.circles[0].total_power * path_loss(mapping_law, 3.0) * fading.mean
    expected = mean_rx_at_origin(strong, mapping_law) + mean_rx_at_origin(weak, mapping_law)
    assert inner_total == pytest.approx(expected, rel=1e-12)


def test_empty_rings_are_dropped(mapping_law, fading):
    near = BaseStation(2.0, 0.0, 1.0, fading)
    far = BaseStation(2.1, 3.0, 0.9, fading)
    dep = Deployment((near, far), Annulus(1.0, 50.0))
    scenario = map_deployment(dep, mapping_law, 2, 6)
    # both stations fall into ring 1 [1.0, 2.1); ring 2 [2.1, 50] keeps one
    assert len(scenario.circles) == 2
    dep_single = Deployment((near,), Annulus(1.0, 50.0))
    got = map_deployment(dep_single, mapping_law, 1, 6)
    assert len(got.circles) == 1


def test_map_argument_errors(mapping_law, fading):
    dep = Deployment((BaseStation(2.0, 0.0, 1.0, fading),), Annulus(1.0, 5.0))
    with pytest.raises(ValueError):
        map_deployment(dep, mapping_law, 2, 8)  # more circles than stations
    with pytest.raises(ValueError):
        map_deployment(Deployment((), Annulus(1.0, 5.0)), mapping_law, 1, 8)
    with pytest.raises(ValueError):
        map_deployment(dep, mapping_law, 0, 8)


def test_map_heterogeneous_fading_needs_explicit_model(mapping_law):
    dep = Deployment(
        (
            BaseStation(2.0, 0.0, 1.0, FadingLaw(2, 1.0)),
            BaseStation(3.0, 1.0, 1.0, FadingLaw(1, 1.0)),
        ),
        Annulus(1.0, 5.0),
    )
    with pytest.raises(ValueError):
        map_deployment(dep, mapping_law, 1, 8)
    scenario = map_deployment(dep, mapping_law, 1, 8, model_fading=FadingLaw(2, 1.0))
    assert scenario.fading == FadingLaw(2, 1.0)


# ------------------------------------------------------------ recommendations

def test_recommended_nodes_per_circle(mapping_law):
    assert recommend_parameters(0.1, mapping_law)[1] == 10
    assert recommend_parameters(0.05, mapping_law)[1] == 20


def test_recommended_circles_with_study_exclusion(mapping_law):
    c, n = recommend_parameters(0.1, mapping_law, r_in=2.0)
    assert (c, n) == (4, 10)


# ----------------------------------------------------------------------- PAPR

def test_papr_trivial_profiles():
    assert profile_papr([0.05] * 20) == pytest.approx(1.0)
    indicator = [0.0] * 19 + [1.0]
    assert profile_papr(indicator) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        profile_papr([0.3, 0.3])
    with pytest.raises(ValueError):
        profile_papr([])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30))
def test_papr_bounds(n):
    rng = np.random.default_rng(n)
    w = rng.random(n) + 1e-9
    p = w / w.sum()
    assert 1.0 <= profile_papr(p) <= n


# ------------------------------------------------------- original-side oracle

def test_mc_original_single_station_matches_gamma(mapping_law, fading):
    station = BaseStation(2.5, 0.4, 1.3, fading)
    dep = Deployment((station,), Annulus(1.0, 5.0))
    r = 0.8
    emp = mc_interference_original(dep, mapping_law, r, 100_000, seed=21)
    scale = 1.3 * path_loss(mapping_law, station.distance_to(r)) * fading.scale
    mix = sum_pdf(canonicalize([GammaTerm(fading.shape, scale)]))
    assert ks_distance(mix, emp) < ks_critical_value(emp.n, 0.01)


def test_mc_original_empty_deployment_degenerate(mapping_law):
    emp = mc_interference_original(Deployment((), Annulus(1.0, 2.0)), mapping_law, 0.5, 100, seed=1)
    assert np.all(emp.samples == 0.0)


def test_mc_original_mean_matches_expectation(mapping_law, fading):
    tier = PppTier(0.2, Annulus(2.0, 12.0), 1.0, fading)
    dep = sample_ppp(tier, seed=55)
    r = 1.0
    emp = mc_interference_original(dep, mapping_law, r, 200_000, seed=56)
    expected = sum(
        s.tx_power * path_loss(mapping_law, s.distance_to(r)) * fading.mean
        for s in dep.stations
    )
    variance = sum(
        (s.tx_power * path_loss(mapping_law, s.distance_to(r))) ** 2
        * fading.shape
        * fading.scale**2
        for s in dep.stations
    )
    assert abs(emp.samples.mean() - expected) < 3 * math.sqrt(variance / emp.n)


# -------------------------------------------------------------- serialization

def test_deployment_text_round_trip(fading):
    tier = PppTier(0.4, Annulus(1.0, 8.0), 0.7, fading)
    dep = sample_ppp(tier, seed=77)
    text = deployment_to_text(dep, metadata={"seed": 77})
    back = deployment_from_text(text)
    assert back == dep


def test_deployment_text_header_checks(fading):
    dep = Deployment((BaseStation(2.0, 0.1, 1.0, fading),), Annulus(1.0, 5.0))
    text = deployment_to_text(dep)
    with pytest.raises(ValueError):
        deployment_from_text(text.replace('"stations": 1', '"stations": 2'))
    with pytest.raises(ValueError):
        deployment_from_text("1.0 2.0 3.0\n")


def test_station_outside_region_rejected(fading):
    with pytest.raises(ValueError):
        Deployment((BaseStation(9.0, 0.0, 1.0, fading),), Annulus(1.0, 5.0))


def test_profiles_csv_lists_every_node(mapping_law, fading):
    dep = Deployment((BaseStation(3.0, 0.7, 2.0, fading),), Annulus(1.0, 10.0))
    scenario = map_deployment(dep, mapping_law, 1, 8)
    csv = profiles_to_csv(scenario)
    lines = csv.strip().splitlines()
    assert lines[0] == "circle,node,p,P_c,R_c,phi_c"
    assert len(lines) == 1 + 8
