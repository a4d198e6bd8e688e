import io
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from scrn.degrees import DegreeDistributionSpec, DegreeSequence, Role
from scrn.errors import ConfigInvalid, LengthMismatch
from scrn.experiment import ScenarioConfig
from scrn.network import (
    HorizontalPolicy,
    TierSizes,
    assign_horizontal_groups,
    build_network,
    couple_wholesaler_degrees,
    draw_consistent_sequences,
    dump_network,
    load_network,
    match_stubs_ordered,
    match_stubs_random,
    mean_gap_ok,
)

from oracles import stub_pairing_distribution


def seq(values, role=Role.RETAILER_IN):
    return DegreeSequence(np.asarray(values), role)


def edge_multiset(layer):
    return sorted(layer.edges())


class TestConsistentSequences:
    def test_regular_pair_needs_no_repair(self, rng):
        up, down, steps = draw_consistent_sequences(
            DegreeDistributionSpec.solve("reg", 20), DegreeDistributionSpec.solve("reg", 2),
            100, 1000, rng,
        )
        assert steps == 0
        assert up.total == down.total == 2000

    def test_poisson_against_regular_is_repaired(self, rng):
        up, down, _ = draw_consistent_sequences(
            DegreeDistributionSpec.solve("poiss", 2), DegreeDistributionSpec.solve("reg", 1),
            100, 200, rng,
        )
        assert up.total == down.total == 200

    def test_expected_sums_must_agree(self, rng):
        with pytest.raises(ConfigInvalid):
            draw_consistent_sequences(
                DegreeDistributionSpec.solve("reg", 2), DegreeDistributionSpec.solve("reg", 1),
                100, 150, rng,
            )

    @pytest.mark.parametrize("up_family,down_family", [("pow", "pow"), ("poiss", "pow"), ("pow", "reg")])
    def test_heavy_tailed_pairs_terminate(self, up_family, down_family, rng):
        up, down, _ = draw_consistent_sequences(
            DegreeDistributionSpec.solve(up_family, 20, 1000),
            DegreeDistributionSpec.solve(down_family, 2, 100),
            100, 1000, rng,
        )
        assert up.total == down.total
        assert up.degrees.min() >= 1 and down.degrees.min() >= 1


class TestRandomMatching:
    def test_forced_matching(self, rng):
        layer = match_stubs_random(seq([1, 1]), seq([2]), rng)
        assert edge_multiset(layer) == [(0, 0), (1, 0)]

    def test_double_edge_is_kept(self, rng):
        layer = match_stubs_random(seq([2]), seq([2]), rng)
        assert edge_multiset(layer) == [(0, 0), (0, 0)]

    def test_unequal_sums_rejected(self, rng):
        with pytest.raises(ConfigInvalid):
            match_stubs_random(seq([2]), seq([1]), rng)

    def test_pairing_law_matches_enumeration(self, rng):
        exact = stub_pairing_distribution([1, 1, 1, 1], [2, 2])
        # each pair of upstream nodes sharing downstream node 0 has probability 1/6
        assert len(exact) == 6 and set(exact.values()) == {Fraction(1, 6)}
        n = 100_000
        counts = Counter(
            tuple(edge_multiset(match_stubs_random(seq([1, 1, 1, 1]), seq([2, 2]), rng)))
            for _ in range(n)
        )
        assert set(counts) == set(exact)
        for key, p in exact.items():
            # 5 sigma of a binomial proportion
            assert abs(counts[key] / n - float(p)) < 5 * np.sqrt(float(p) * (1 - float(p)) / n)

    def test_realized_degrees_equal_drawn(self, rng):
        up = seq(rng.integers(1, 9, size=50))
        down_deg = np.ones(up.total, dtype=int)
        layer = match_stubs_random(up, seq(down_deg), rng)
        layer.check()


class TestOrderedMatching:
    def test_hand_trace(self):
        # (0,0) then (0,1) then tie -> (0,0) then (1,1)
        layer = match_stubs_ordered(seq([3, 1]), seq([2, 2]))
        assert edge_multiset(layer) == [(0, 0), (0, 0), (0, 1), (1, 1)]

    def test_all_tied(self):
        layer = match_stubs_ordered(seq([1, 1]), seq([1, 1]))
        assert edge_multiset(layer) == [(0, 0), (1, 1)]

    def test_unequal_sums_rejected(self):
        with pytest.raises(ConfigInvalid):
            match_stubs_ordered(seq([3]), seq([1, 1]))

    def test_ordered_is_more_assortative_than_random(self, rng):
        spec_w = DegreeDistributionSpec.solve("pow", 20, 1000)
        spec_r = DegreeDistributionSpec.solve("pow", 2, 100)
        ordered, random = [], []
        for _ in range(100):
            w, r, _ = draw_consistent_sequences(spec_w, spec_r, 100, 1000, rng)
            for store, layer in ((ordered, match_stubs_ordered(w, r)), (random, match_stubs_random(w, r, rng))):
                store.append(spearmanr(w.degrees[layer.src], r.degrees[layer.dst]).statistic)
        assert np.mean(ordered) > np.mean(random)
        assert np.mean(np.asarray(ordered) > 0) > 0.95


class TestCoupling:
    def test_comonotone_sort(self):
        w_in, w_out = couple_wholesaler_degrees(seq([1, 3, 2]), seq([10, 30, 20]))
        assert list(zip(w_in.degrees.tolist(), w_out.degrees.tolist())) == [(3, 30), (2, 20), (1, 10)]

    def test_regular_unchanged(self):
        w_in, w_out = couple_wholesaler_degrees(seq([2, 2, 2]), seq([20, 20, 20]))
        assert w_in.degrees.tolist() == [2, 2, 2] and w_out.degrees.tolist() == [20, 20, 20]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            couple_wholesaler_degrees(seq([1, 2]), seq([1]))

    @given(st.lists(st.integers(1, 50), min_size=2, max_size=40), st.randoms())
    @settings(max_examples=80, deadline=None)
    def test_rank_correlation_is_one(self, ins, rnd):
        outs = [rnd.randint(1, 500) for _ in ins]
        w_in, w_out = couple_wholesaler_degrees(seq(ins), seq(outs))
        assert sorted(w_in.degrees.tolist()) == sorted(ins)
        assert sorted(w_out.degrees.tolist()) == sorted(outs)
        # comonotone: both non-increasing in node id
        assert (np.diff(w_in.degrees) <= 0).all() and (np.diff(w_out.degrees) <= 0).all()
        if len(set(ins)) > 1 and len(set(outs)) > 1:
            assert spearmanr(w_in.degrees, w_out.degrees).statistic > 0


class TestMeanGap:
    def test_zero_gap(self):
        assert mean_gap_ok(seq([2, 2, 2, 2]), 2)

    def test_above_threshold(self):
        # mean 2.11 -> gap 5.5%
        assert not mean_gap_ok(seq([2] * 89 + [3] * 11), 2)

    def test_boundary_inclusive(self):
        # mean 2.10 -> gap exactly 5%
        assert mean_gap_ok(seq([2] * 90 + [3] * 10), 2)


class TestHorizontalGroups:
    def test_rho_zero_all_singletons(self, rng):
        groups = assign_horizontal_groups(100, 0.0, "coalition", rng)
        assert len(set(groups.tolist())) == 100

    def test_rho_one_coalition_single_pool(self, rng):
        groups = assign_horizontal_groups(100, 1.0, HorizontalPolicy.COALITION, rng)
        assert set(groups.tolist()) == {0}

    def test_pairs_counting(self, rng):
        groups = assign_horizontal_groups(100, 0.5, HorizontalPolicy.PAIRS, rng)
        sizes = Counter(Counter(groups.tolist()).values())
        assert sizes == {2: 25, 1: 50}

    def test_pairs_odd_leftover(self, rng):
        groups = assign_horizontal_groups(10, 0.5, "pairs", rng)
        assert Counter(Counter(groups.tolist()).values()) == {2: 2, 1: 6}

    def test_rho_out_of_range(self, rng):
        with pytest.raises(ConfigInvalid):
            assign_horizontal_groups(10, 1.2, "coalition", rng)

    @given(st.integers(1, 120), st.floats(0, 1), st.sampled_from(["coalition", "pairs"]), st.integers(0, 10**6))
    @settings(max_examples=80, deadline=None)
    def test_partition(self, n, rho, policy, seed):
        groups = assign_horizontal_groups(n, rho, policy, np.random.default_rng(seed))
        assert groups.size == n
        # dense labels
        assert set(groups.tolist()) == set(range(groups.max() + 1))
        linked = sum(c for c in Counter(groups.tolist()).values() if c > 1)
        assert linked <= round(rho * n)


class TestBuildNetwork:
    def test_trivial_chain(self, rng):
        cfg = ScenarioConfig(n_wholesalers=1, ratio_alpha=1, ratio_beta=1, retailer_mean_in_degree=1)
        net = build_network(cfg, rng)
        assert net.layer_sw.edges() == [(0, 0)]
        assert net.layer_wr.edges() == [(0, 0)]

    def test_baseline_edge_counts(self, rng):
        net = build_network(ScenarioConfig(), rng)
        assert net.tiers == TierSizes(200, 100, 1000)
        assert net.layer_sw.n_edges == 200
        assert net.layer_wr.n_edges == 2000
        assert net.n_groups == 100

    @pytest.mark.parametrize("w", ["reg", "poiss", "pow"])
    @pytest.mark.parametrize("r", ["reg", "poiss", "pow"])
    @pytest.mark.parametrize("ordered", [False, True])
    def test_invariants_per_sample(self, w, r, ordered):
        cfg = ScenarioConfig(wholesaler_dist=w, retailer_dist=r, ordered=ordered)
        for seed in range(3):
            net = build_network(cfg, np.random.default_rng(seed))
            net.check()  # layer sums, ranges and realized degrees
            assert net.layer_sw.n_edges == net.tiers.n_suppliers
            assert mean_gap_ok(net.layer_wr.down, 2.0)
            assert mean_gap_ok(net.layer_wr.up, 20.0)
            # wholesaler in/out degrees stay rank-coupled
            w_in, w_out = net.layer_sw.down.degrees, net.layer_wr.up.degrees
            order = np.lexsort((-w_out, -w_in))
            assert (np.diff(w_out[order]) <= 0).all()
            # retailers are indexed by descending demand
            assert (np.diff(net.layer_wr.down.degrees) <= 0).all()

    def test_deterministic_given_seed(self):
        cfg = ScenarioConfig(wholesaler_dist="pow", retailer_dist="poiss", rho=0.4)
        a = build_network(cfg, np.random.default_rng(11))
        b = build_network(cfg, np.random.default_rng(11))
        assert a.layer_wr.edges() == b.layer_wr.edges()
        assert a.group_of.tolist() == b.group_of.tolist()

    def test_rejected_samples_are_counted(self):
        cfg = ScenarioConfig(wholesaler_dist="pow", retailer_dist="pow", gap_threshold=0.01)
        net = build_network(cfg, np.random.default_rng(0))
        assert net.rejected > 0
        assert mean_gap_ok(net.layer_wr.down, 2.0, 0.01)


def test_dump_round_trip(rng):
    net = build_network(ScenarioConfig(wholesaler_dist="poiss", retailer_dist="pow", rho=0.3), rng)
    buf = io.StringIO()
    dump_network(net, buf)
    text = buf.getvalue()
    lines = text.splitlines()
    assert lines[0].startswith("sw\t")
    assert sum(line.startswith("wr\t") for line in lines) == net.layer_wr.n_edges
    assert sum(line.startswith("group\t") for line in lines) == 100
    back = load_network(io.StringIO(text))
    assert back.tiers == net.tiers
    assert back.layer_sw.edges() == net.layer_sw.edges()
    assert back.layer_wr.edges() == net.layer_wr.edges()
    assert back.group_of.tolist() == net.group_of.tolist()


def test_dump_format_is_exact():
    cfg = ScenarioConfig(n_wholesalers=1, ratio_alpha=1, ratio_beta=1, retailer_mean_in_degree=1)
    buf = io.StringIO()
    dump_network(build_network(cfg, np.random.default_rng(0)), buf)
    assert buf.getvalue() == "sw\t0\t0\nwr\t0\t0\ngroup\t0\t0\n"
