import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.integrate import quad

from friids.errors import DimensionMismatch, OutOfUniverse, RuleBaseError, ZeroDistanceConflict
from friids.five import (
    FiveEngine, FiveParams, ScalingFunction, VagueEnvironment, classify, derive_scaling, infer, rule_distance,
    shepard, vague_distance,
)
from friids.fuzzy import InputPartition, Rule, RuleBase, TrapezoidalSet, classical_covered

NORMAL_OBS = (200, 55943, 11560)
ATTACK_OBS = (900, 1190251, 22029)


def quad_distance(sf, x1, x2):
    """Independent oracle: adaptive quadrature of the density."""
    lo, hi = sorted((x1, x2))
    if lo == hi:
        return 0.0
    pts = [k for k in sf.knots if lo < k < hi]
    val, _ = quad(lambda t: float(sf(t)), lo, hi, points=pts or None, limit=200)
    return val


@st.composite
def scalings(draw):
    n = draw(st.integers(1, 8))
    cuts = draw(st.lists(st.floats(0.01, 99.99), min_size=n - 1, max_size=n - 1, unique=True))
    knots = [0.0] + sorted(cuts) + [100.0]
    assume(np.all(np.diff(knots) > 1e-6))
    dens = draw(st.lists(st.floats(1e-3, 10), min_size=n, max_size=n))
    return ScalingFunction("x", knots, dens)


class TestDeriveScaling:
    def test_rising_edge_slope(self, baseline):
        sf = derive_scaling(baseline.partitions[0])
        assert float(sf(200.0)) == pytest.approx(1 / (222.66 - 166.81), rel=1e-12)
        assert float(sf(200.0)) == pytest.approx(0.017905, abs=1e-6)

    def test_plateau_and_gap_use_floor(self, baseline):
        part = baseline.partitions[0]
        sf = derive_scaling(part)
        floor = 1 / (part.universe_hi - part.universe_lo)
        assert float(sf(250.0)) == pytest.approx(floor)
        assert float(sf(800.0)) == pytest.approx(floor)
        assert float(derive_scaling(part, floor=0.5)(800.0)) == 0.5

    def test_overlapping_edges_take_the_max(self):
        part = InputPartition("x", 0, 10, (("A", TrapezoidalSet(0, 0, 2, 6)), ("B", TrapezoidalSet(4, 5, 10, 10))))
        sf = derive_scaling(part)
        assert float(sf(4.5)) == 1.0  # B rises with slope 1, A falls with slope 1/4
        assert float(sf(3.0)) == 0.25
        assert float(sf(5.5)) == 0.25
        assert float(sf(1.0)) == pytest.approx(0.1)
        assert float(sf(8.0)) == pytest.approx(0.1)

    def test_breakpoints_at_knots(self, baseline):
        sf = derive_scaling(baseline.partitions[2])
        xs = [x for x, _ in sf.breakpoints] + [sf.hi]
        assert xs == [3, 594.18, 11235.33, 12417.68, 23058.83, 23650]

    def test_rejects_bad_floor(self, baseline):
        with pytest.raises(RuleBaseError):
            derive_scaling(baseline.partitions[0], floor=0.0)

    @given(st.floats(1e-6, 1e3))
    def test_density_never_below_floor(self, baseline, floor):
        for part in baseline.partitions:
            assert np.all(derive_scaling(part, floor).density >= floor)


class TestVagueDistance:
    def test_constant_density_is_absolute_difference(self):
        sf = ScalingFunction("x", [0, 10], [1])
        assert vague_distance(sf, 2, 5) == pytest.approx(3)

    def test_piecewise_integral(self):
        sf = ScalingFunction("x", [0, 4, 10], [0.5, 2])
        assert vague_distance(sf, 2, 6) == pytest.approx(5.0)
        assert vague_distance(sf, 6, 2) == pytest.approx(5.0)

    def test_self_distance(self):
        sf = ScalingFunction("x", [0, 4, 10], [0.5, 2])
        assert vague_distance(sf, 3.3, 3.3) == 0.0

    def test_clamps_outside_universe(self):
        sf = ScalingFunction("x", [0, 10], [1])
        assert vague_distance(sf, -5, 12) == 10

    def test_rejects_nonpositive_density(self):
        with pytest.raises(RuleBaseError):
            ScalingFunction("x", [0, 1, 2], [1, 0])

    @given(scalings(), st.floats(0, 100), st.floats(0, 100))
    def test_matches_quadrature(self, sf, x1, x2):
        assert vague_distance(sf, x1, x2) == pytest.approx(quad_distance(sf, x1, x2), rel=1e-7, abs=1e-9)

    @given(scalings(), st.floats(0, 100), st.floats(0, 100), st.floats(0, 100))
    def test_metric_axioms(self, sf, x, y, z):
        d = vague_distance
        assert d(sf, x, y) == pytest.approx(d(sf, y, x), abs=1e-12)
        assert d(sf, x, x) == 0.0
        if x != y:
            assert d(sf, x, y) > 0
        assert d(sf, x, z) <= d(sf, x, y) + d(sf, y, z) + 1e-9

    @given(scalings(), st.floats(0, 100), st.floats(0, 100), st.floats(0, 100))
    def test_additive_along_the_line(self, sf, x, y, z):
        a, b, c = sorted((x, y, z))
        assert vague_distance(sf, a, c) == pytest.approx(vague_distance(sf, a, b) + vague_distance(sf, b, c),
                                                         abs=1e-9)


def box_rulebase(mids, consequents=(1.0,)):
    """Rule base on [0, 10]^n whose single rule is anchored at ``mids``."""
    parts = tuple(
        InputPartition(f"x{i}", 0, 10, (("T", TrapezoidalSet(m - 0.5, m - 0.25, m + 0.25, m + 0.5)),))
        for i, m in enumerate(mids)
    )
    return RuleBase(parts, (Rule(("T",) * len(mids), consequents[0]),))


class TestRuleDistance:
    def test_zero_at_anchor(self, baseline):
        env = VagueEnvironment.from_rulebase(baseline)
        for k, rule in enumerate(baseline.rules):
            assert rule_distance(env, baseline.anchors[k], rule, baseline) == 0.0

    def test_one_dimension_is_vague_distance(self):
        rb = box_rulebase([4.0])
        env = VagueEnvironment.from_rulebase(rb)
        sf = env.scalings[0]
        assert rule_distance(env, [1.7], rb.rules[0], rb) == pytest.approx(vague_distance(sf, 1.7, 4.0))

    def test_three_dims_constant_scalings(self):
        rb = box_rulebase([4.0, 6.0, 3.5])
        env = VagueEnvironment((
            ScalingFunction("x0", [0, 10], [1.0]),
            ScalingFunction("x1", [0, 10], [0.5]),
            ScalingFunction("x2", [0, 10], [2.0]),
        ))
        # per-dimension distances 3, 2 and 1
        assert rule_distance(env, [1, 2, 3], rb.rules[0], rb) == pytest.approx(math.sqrt(14))
        manhattan = VagueEnvironment(env.scalings, w=1)
        assert rule_distance(manhattan, [1, 2, 3], rb.rules[0], rb) == pytest.approx(6)

    def test_dimension_mismatch(self, baseline):
        rb = box_rulebase([4.0])
        with pytest.raises(DimensionMismatch):
            rule_distance(VagueEnvironment.from_rulebase(rb), [1, 2, 3], baseline.rules[0], baseline)


class TestInfer:
    def test_normal_observation(self, baseline):
        r = FiveEngine.build(baseline).infer(NORMAL_OBS)
        assert r.level < 0.5 and r.alert is False
        assert r.matched_rule is None

    def test_attack_observation(self, baseline):
        r = FiveEngine.build(baseline).infer(ATTACK_OBS)
        assert r.level > 0.5 and r.alert is True

    def test_exact_match_rule_27(self, baseline):
        env = VagueEnvironment.from_rulebase(baseline)
        core = baseline.anchors[26]
        r = infer(env, baseline, core)
        assert r.level == 1.0
        assert r.matched_rule == 26
        others = [d for k, d in enumerate(r.per_rule_distances) if k != 26]
        assert min(others) > 0

    def test_level_within_consequent_range(self, baseline):
        eng = FiveEngine.build(baseline)
        rng = np.random.default_rng(3)
        u = baseline.universes
        x = rng.uniform(u[:, 0], u[:, 1], size=(500, 3))
        lv = eng.levels(x)
        assert np.all((lv >= 0) & (lv <= 1))

    def test_batch_matches_single(self, baseline):
        eng = FiveEngine.build(baseline)
        x = np.array([NORMAL_OBS, ATTACK_OBS, baseline.anchors[3]], dtype=float)
        assert eng.levels(x) == pytest.approx([eng.infer(o).level for o in x], abs=1e-15)

    def test_strict_mode(self, baseline):
        eng = FiveEngine.build(baseline, strict=True)
        with pytest.raises(OutOfUniverse):
            eng.infer((5000, 100, 100))
        assert FiveEngine.build(baseline).infer((5000, 100, 100)).level == \
            FiveEngine.build(baseline).infer((1118, 100, 100)).level

    def test_dimension_mismatch(self, baseline):
        with pytest.raises(DimensionMismatch):
            FiveEngine.build(baseline).infer((1, 2))

    def test_threshold_outside_output_range(self, baseline):
        with pytest.raises(ValueError):
            FiveEngine.build(baseline, threshold=1.5)

    @given(st.tuples(st.floats(1, 1118), st.floats(55, 1677420), st.floats(3, 23650)))
    def test_interpolates_where_classical_fails(self, baseline, obs):
        r = FiveEngine.build(baseline).infer(obs)
        assert math.isfinite(r.level)
        assert 0.0 <= r.level <= 1.0
        if not classical_covered(baseline, obs):
            assert r.matched_rule is None

    @pytest.mark.parametrize("dim, base", [(0, ATTACK_OBS), (1, NORMAL_OBS), (2, ATTACK_OBS)])
    def test_continuity_along_an_axis(self, baseline, dim, base):
        eng = FiveEngine.build(baseline)
        lo, hi = baseline.universes[dim]
        x = np.tile(np.asarray(base, dtype=float), (1001, 1))
        x[:, dim] = np.linspace(lo, hi, 1001)
        assert np.abs(np.diff(eng.levels(x))).max() < 0.02

    def test_larger_p_moves_toward_nearest_rule(self):
        part = InputPartition("x", 0, 10, (
            ("L", TrapezoidalSet(0, 0, 0.5, 1)),
            ("H", TrapezoidalSet(9, 9.5, 10, 10)),
        ))
        rb = RuleBase((part,), (Rule(("L",), 0.0), Rule(("H",), 1.0)))
        ps = (1, 2, 4, 8, 16)
        levels = [FiveEngine.build(rb, p=p).infer([3.0]).level for p in ps]
        assert all(a > b for a, b in zip(levels, levels[1:]))
        # by hand: scaled distance 0.025 + 1 + 0.2 = 1.225 to L, 0.6 + 1 + 0.025 = 1.625 to H
        r = 1.225 / 1.625
        assert levels == pytest.approx([r ** p / (1 + r ** p) for p in ps], rel=1e-9)


class TestShepard:
    def test_weighted_mean(self):
        # weights 1/1 and 1/4 -> (0*1 + 1*0.25) / 1.25
        assert shepard([[1.0, 2.0]], [0.0, 1.0], 2)[0] == pytest.approx(0.2)

    def test_zero_distance_tie_with_equal_consequents(self):
        assert shepard([[0.0, 0.0, 3.0]], [1.0, 1.0, 0.0], 2)[0] == 1.0

    def test_zero_distance_conflict(self):
        with pytest.raises(ZeroDistanceConflict, match="rules 1, 2"):
            shepard([[0.0, 0.0, 3.0]], [0.0, 1.0, 0.0], 2)

    def test_tiny_distances_do_not_overflow(self):
        assert shepard([[1e-300, 1.0]], [0.25, 1.0], 2)[0] == pytest.approx(0.25)


@pytest.mark.parametrize("level, expected", [(0.93, True), (0.5, True), (0.1, False)])
def test_classify(level, expected):
    assert classify(level, 0.5) is expected


def test_params_validation():
    with pytest.raises(ValueError):
        FiveParams(p=0.5)
    with pytest.raises(ValueError):
        FiveParams(w=float("inf"))
    with pytest.raises(ValueError):
        FiveParams(floor=-1)
