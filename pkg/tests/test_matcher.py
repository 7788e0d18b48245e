import numpy as np
import pytest

from oracles import straight_loop_distance

from peakstitch.descriptor import DescribedFeatures
from peakstitch.detector import FeaturePoint
from peakstitch.errors import ConfigError
from peakstitch.matcher import MatcherConfig, descriptor_distance, match_features


def feature(row, col):
    return FeaturePoint(row=row, col=col, scale=16, polarity="max", window_index=0, value=0.0)


def described(positions, descriptors):
    feats = [feature(r, c) for r, c in positions]
    return DescribedFeatures("img", feats, np.asarray(descriptors, float))


def unit(i, n=128):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def test_distance_identity_and_unit():
    v = np.random.default_rng(0).random(128)
    assert descriptor_distance(v, v) == 0.0
    assert descriptor_distance(unit(3), np.zeros(128)) == pytest.approx(1.0, abs=1e-12)


def test_distance_matches_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        d1, d2 = rng.random(128), rng.random(128)
        assert descriptor_distance(d1, d2) == pytest.approx(
            straight_loop_distance(d1, d2), abs=1e-12
        )


def test_distance_length_mismatch():
    with pytest.raises(ValueError):
        descriptor_distance(np.zeros(128), np.zeros(64))


def test_distance_is_a_metric_on_random_triples():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c = rng.random((3, 128))
        dab = descriptor_distance(a, b)
        dba = descriptor_distance(b, a)
        assert dab == dba
        assert descriptor_distance(a, a) == 0.0
        assert dab <= descriptor_distance(a, c) + descriptor_distance(c, b) + 1e-12


def test_single_identical_feature_matches_at_zero():
    s = described([(3, 4)], [unit(0)])
    pairs = match_features(s, s, MatcherConfig())
    assert len(pairs) == 1
    assert pairs[0].delta == 0.0
    assert pairs[0].p1 == (3, 4) and pairs[0].p2 == (3, 4)


def test_orthogonal_unit_vectors_do_not_match():
    s1 = described([(0, 0), (0, 1)], [unit(0), unit(1)])
    s2 = described([(5, 5), (5, 6)], [unit(2), unit(3)])
    cfg = MatcherConfig(delta_s=1.0)
    assert match_features(s1, s2, cfg) == []
    assert match_features(s1, s2, MatcherConfig(delta_s=1.0, strategy="threshold_all")) == []


def test_threshold_all_keeps_every_subthreshold_pair():
    d = [unit(0), unit(0) * 0.999 + unit(1) * 0.01]
    s1 = described([(0, 0), (1, 1)], d)
    s2 = described([(2, 2), (3, 3)], d)
    pairs = match_features(s1, s2, MatcherConfig(delta_s=0.5, strategy="threshold_all"))
    # every cross combination is below threshold here
    assert len(pairs) == 4
    got = {(m.ref1, m.ref2) for m in pairs}
    assert got == {(0, 0), (0, 1), (1, 0), (1, 1)}
    for m in pairs:
        assert m.delta < 0.5
        recomputed = descriptor_distance(s1.descriptors[m.ref1], s2.descriptors[m.ref2])
        assert abs(m.delta - recomputed) <= 1e-12


def test_nearest_neighbor_is_one_to_one_and_mutual():
    rng = np.random.default_rng(3)
    base = rng.random((30, 128))
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    noisy = base + rng.normal(0, 0.01, base.shape)
    s1 = described([(i, 0) for i in range(30)], base)
    s2 = described([(i, 1) for i in range(30)], noisy)
    pairs = match_features(s1, s2, MatcherConfig(delta_s=0.35))
    assert len(pairs) == 30
    assert len({m.ref1 for m in pairs}) == 30
    assert len({m.ref2 for m in pairs}) == 30
    assert all(m.ref1 == m.ref2 for m in pairs)
    deltas = [m.delta for m in pairs]
    assert deltas == sorted(deltas)


def test_matching_invariant_under_permutation():
    rng = np.random.default_rng(4)
    desc = rng.random((12, 128))
    pos = [(i, i) for i in range(12)]
    s1 = described(pos, desc)
    perm = rng.permutation(12)
    s2 = described([pos[k] for k in perm], desc[perm])
    pairs = match_features(s1, s2, MatcherConfig(delta_s=0.35))
    matched = {(m.p1, m.p2) for m in pairs}
    assert matched == {((i, i), (i, i)) for i in range(12)}


def test_empty_inputs_give_empty_output():
    empty = described([], np.zeros((0, 128)))
    full = described([(0, 0)], [unit(0)])
    assert match_features(empty, full, MatcherConfig()) == []
    assert match_features(full, empty, MatcherConfig()) == []


def test_matcher_config_validation():
    with pytest.raises(ConfigError):
        MatcherConfig(delta_s=0.0)
    with pytest.raises(ConfigError):
        MatcherConfig(strategy="fuzzy")


def test_translated_views_match_with_known_displacement():
    # full-pipeline property: most mutual matches displace by the crop offset
    from peakstitch.pipeline import PipelineConfig, prepare_image
    from peakstitch.matcher import match_features as mf
    from peakstitch.synthetic import make_texture, translated_pair

    src = make_texture(420, 420, seed=31)
    view_a, view_b, truth = translated_pair(src, 320, 320, offset_row=40, offset_col=65)
    cfg = PipelineConfig(window_min=32, window_max=64, seed=0)
    pa, pb = prepare_image(view_a, cfg), prepare_image(view_b, cfg)
    pairs = mf(pa.described, pb.described, cfg.matcher_config())
    assert len(pairs) >= 10
    good = sum(
        1
        for m in pairs
        if abs((m.p2[0] - m.p1[0]) - truth.t_y) <= 1 and abs((m.p2[1] - m.p1[1]) - truth.t_x) <= 1
    )
    assert good >= 0.8 * len(pairs)
