import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import box_region, make_problem, square
from milaps.geometry import GeometryError, PolygonalEnvironment, Region
from milaps.model import (
    SensingSequence,
    TargetDistribution,
    TravelTimeModel,
    dets_sensing_policy,
    ets_sensing_policy,
    evaluate_et,
    probability,
    region_mass,
    sensing_spacing,
    travel_time,
)
from milaps.synthetic import random_problem, weighted_targets
from oracles import ref_times, reverse_clip_et


# ---------------------------------------------------------------- travel time

def test_travel_time_segment():
    assert travel_time(TravelTimeModel(1.0, 0.5), [(0, 0), (5, 0)], 1.0) == pytest.approx(5.0)


def test_travel_time_l_shape():
    t = travel_time(TravelTimeModel(1.0, 0.5), [(0, 0), (5, 0), (5, 5)], 1.0)
    assert t == pytest.approx(10 + 0.5 * math.pi / 2)
    assert t == pytest.approx(10.785, abs=1e-3)


def test_travel_time_at_zero():
    assert travel_time(TravelTimeModel(1.0, 3.0), [(0, 0), (5, 0), (5, 5)], 0.0) == 0.0


def test_travel_time_domain():
    with pytest.raises(ValueError):
        travel_time(TravelTimeModel(), [(0, 0), (1, 0)], 1.5)


def test_travel_time_model_validation():
    with pytest.raises(ValueError):
        TravelTimeModel(0.0, 0.0)
    with pytest.raises(ValueError):
        TravelTimeModel(-1.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=2, max_size=7),
       st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0, 2))
def test_travel_time_monotone_and_matches_walk(pts, params, t_ang):
    path = [pts[0]] + [p for a, p in zip(pts, pts[1:]) if p != a]
    if len(path) < 2:
        return
    tm = TravelTimeModel(1.0, t_ang)
    params = sorted(params)
    got = [travel_time(tm, path, s) for s in params]
    assert all(b >= a - 1e-12 for a, b in zip(got, got[1:]))
    ref = ref_times(1.0, t_ang, path, params)
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-9)


# ---------------------------------------------------------------- masses

def test_region_mass_full_env(square_env):
    targets = TargetDistribution.uniform(square_env)
    full = Region.from_environment(square_env)
    assert region_mass(targets, full) == pytest.approx(targets.total_mass)
    assert probability(targets, full) == pytest.approx(1.0)


def test_region_mass_empty(square_env):
    assert region_mass(TargetDistribution.uniform(square_env), Region.empty()) == 0.0


def test_region_mass_half(square_env):
    targets = TargetDistribution.uniform(square_env)
    assert probability(targets, box_region(0, 0, 5, 10)) == pytest.approx(0.5, abs=1e-6)


def test_weighted_regions_mass(square_env):
    targets = TargetDistribution(((1.0, box_region(0, 0, 10, 10)), (3.0, box_region(0, 0, 2, 2))))
    assert targets.total_mass == pytest.approx(100 + 12)
    assert region_mass(targets, box_region(0, 0, 1, 1)) == pytest.approx(4.0)


def test_target_distribution_validation():
    with pytest.raises(ValueError):
        TargetDistribution(((0.0, box_region(0, 0, 1, 1)),))
    with pytest.raises(ValueError):
        TargetDistribution(())


# ---------------------------------------------------------------- sensing policies

def test_d_sens_formula():
    assert sensing_spacing(3.0, 21.0, 23.0) == pytest.approx(math.sqrt(970) / 100)
    assert sensing_spacing(3.0, 21.0, 23.0) == pytest.approx(0.3114, abs=1e-4)


def test_ets_policy_short_segment():
    seq = ets_sensing_policy([(0, 0), (0.2, 0)], r_vis=0.62, width=0.31 * 100, height=0.0)
    assert len(seq) == 2
    assert seq.params == (0.0, 1.0)


def test_ets_policy_unit_segment():
    seq = ets_sensing_policy([(0, 0), (1.0, 0)], r_vis=0.62, width=31.0, height=0.0)
    assert len(seq) == 5
    xs = [c[0] for c in seq.configs]
    assert np.allclose(np.diff(xs), 0.25)


def test_ets_policy_keeps_vertices():
    path = [(0, 0), (3, 0), (3, 2.5), (1, 2.5)]
    seq = ets_sensing_policy(path, r_vis=1.0, width=10, height=10)
    for v in path:
        assert tuple(map(float, v)) in seq.configs
    pts = np.asarray(seq.configs)
    assert np.max(np.hypot(*np.diff(pts, axis=0).T)) <= sensing_spacing(1.0, 10, 10) + 1e-12


def test_ets_policy_degenerate_path():
    seq = ets_sensing_policy([(1, 1)], r_vis=1.0, width=10, height=10)
    assert seq.configs == ((1.0, 1.0),)
    assert seq.params == (0.0,)


def test_dets_policy_first_visits():
    a, b, c = (0, 0), (4, 0), (4, 3)
    seq = dets_sensing_policy([a, b, a, c], [a, b, c])
    assert seq.configs == ((0.0, 0.0), (4.0, 0.0), (4.0, 3.0))
    assert seq.params[0] == 0.0
    assert seq.params[1] == pytest.approx(4 / 13)


def test_dets_policy_single_guard():
    seq = dets_sensing_policy([(2, 2)], [(2, 2)])
    assert len(seq) == 1 and seq.params == (0.0,)


def test_dets_policy_matches_linear_scan():
    rng = np.random.default_rng(3)
    guards = [tuple(rng.uniform(0, 10, 2)) for _ in range(4)]
    path = [guards[0], guards[2], (5.0, 5.0), guards[2], guards[1], guards[0], guards[3]]
    seq = dets_sensing_policy(path, guards)
    first = {}
    for k, p in enumerate(path):
        for g, q in enumerate(guards):
            if g not in first and p == q:
                first[g] = k
    order = sorted(first, key=first.get)
    assert len(seq) == 4
    assert seq.configs == tuple(tuple(map(float, guards[g])) for g in order)


def test_dets_policy_missing_guard():
    with pytest.raises(ValueError, match=r"\[1\]"):
        dets_sensing_policy([(0, 0), (1, 0)], [(0, 0), (5, 5)])


def test_sensing_sequence_params_increase():
    with pytest.raises(ValueError):
        SensingSequence(((0, 0), (1, 1)), (0.5, 0.5))


# ---------------------------------------------------------------- evaluate_et

def test_et_single_config_sees_all(square_env):
    pr = make_problem(square_env, (5, 5))
    res = evaluate_et(pr, [(5, 5)], SensingSequence(((5.0, 5.0),), (0.0,)))
    assert res.et == 0.0
    assert res.covered_prob == pytest.approx(1.0)


def test_et_exact_half_split():
    env = PolygonalEnvironment(square(10.0))
    targets = TargetDistribution(((1.0, box_region(0, 0, 1, 1)), (1.0, box_region(9, 0, 10, 1))))
    pr = make_problem(env, (0.5, 0.5), r_vis=2.0, targets=targets)
    seq = SensingSequence(((0.5, 0.5), (9.5, 0.5)), (0.0, 1.0))
    path = [(0.5, 0.5), (9.5, 0.5)]
    res = evaluate_et(pr, path, seq)
    # the leg is 9 long; scale t_lin so the second config is reached at time 10
    pr10 = make_problem(env, (0.5, 0.5), r_vis=2.0, targets=targets, t_lin=10 / 9)
    res10 = evaluate_et(pr10, path, seq)
    assert res.detection_probs == pytest.approx((0.5, 0.5))
    assert res10.et == pytest.approx(5.0)
    assert res10.covered_prob == pytest.approx(1.0)


def _random_route_problem(seed):
    pr = random_problem(seed, n_holes=5, size=12.0, r_vis=3.0, t_ang=0.3)
    rng = np.random.default_rng(seed)
    configs = [pr.start]
    while len(configs) < 4:
        p = tuple(rng.uniform(0.5, 11.5, 2))
        if pr.env.contains(p) and pr.env.segment_free(configs[-1], p):
            configs.append(p)
    return pr, configs


def test_et_matches_reverse_clip_oracle():
    for seed in range(4):
        pr, configs = _random_route_problem(seed)
        seq = SensingSequence(tuple(configs), tuple(np.linspace(0, 1, len(configs))))
        times = ref_times(1.0, 0.3, configs, seq.params)
        res = evaluate_et(pr, configs, seq)
        et, cov, probs = reverse_clip_et(pr, times, configs)
        assert res.et == pytest.approx(et, rel=1e-6)
        assert res.covered_prob == pytest.approx(cov, rel=1e-6)
        assert np.allclose(res.detection_probs, probs, atol=1e-9)


def test_et_weighted_targets_oracle():
    pr0, configs = _random_route_problem(11)
    pr = make_problem(pr0.env, pr0.start, r_vis=3.0, t_ang=0.3, targets=weighted_targets(pr0.env, 4))
    seq = SensingSequence(tuple(configs), tuple(np.linspace(0, 1, len(configs))))
    res = evaluate_et(pr, configs, seq)
    et, cov, _ = reverse_clip_et(pr, ref_times(1.0, 0.3, configs, seq.params), configs)
    assert res.et == pytest.approx(et, rel=1e-6)
    assert res.covered_prob == pytest.approx(cov, rel=1e-6)


def test_et_config_outside(square_env):
    pr = make_problem(square_env, (5, 5))
    with pytest.raises(GeometryError):
        evaluate_et(pr, [(5, 5), (15, 5)], SensingSequence(((5.0, 5.0), (15.0, 5.0)), (0.0, 1.0)))


def test_et_permutation_sensitive():
    env = PolygonalEnvironment(square(10.0))
    targets = TargetDistribution(((1.0, box_region(0, 0, 1, 1)), (1.0, box_region(9, 0, 10, 3))))
    pr = make_problem(env, (5.0, 9.0), r_vis=2.5, targets=targets)
    a, b = (0.5, 0.5), (9.5, 1.5)
    seq1 = SensingSequence(((5.0, 9.0), a, b), (0.0, 0.4, 1.0))
    seq2 = SensingSequence(((5.0, 9.0), b, a), (0.0, 0.4, 1.0))
    path = [(5.0, 9.0), (5.0, 5.0), (5.0, 1.0)]
    assert evaluate_et(pr, path, seq1).et != pytest.approx(evaluate_et(pr, path, seq2).et)


@pytest.mark.parametrize("seed", range(6))
def test_et_conservation_monotone_and_redundant(seed):
    pr, configs = _random_route_problem(100 + seed)
    params = tuple(np.linspace(0, 1, len(configs)))
    covs = []
    for k in range(1, len(configs) + 1):
        r = evaluate_et(pr, configs[:k], SensingSequence(tuple(configs[:k]), params[:k]))
        assert sum(r.detection_probs) == pytest.approx(r.covered_prob, abs=1e-6)
        assert r.covered_prob <= 1.0
        covs.append(r.covered_prob)
    assert all(b >= a - 1e-12 for a, b in zip(covs, covs[1:]))
    full = evaluate_et(pr, configs, SensingSequence(tuple(configs), params))
    # re-sensing at the start adds nothing new
    mid = (params[0] + params[1]) / 2
    redundant = SensingSequence((configs[0], configs[0]) + tuple(configs[1:]), (params[0], mid) + params[1:])
    r2 = evaluate_et(pr, configs, redundant)
    assert r2.et == pytest.approx(full.et, abs=1e-9)
