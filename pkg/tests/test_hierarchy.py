"""Tests for hierarchy propagation, skip merging and the recorded encoder chain."""

import numpy as np
import pytest

from orgbottleneck import (
    ChainLink,
    Channel,
    ConsistencyError,
    EncoderChain,
    HierarchySpec,
    JointDistribution,
    LayerSpec,
    LayerState,
    SkipEdge,
    SolverConfig,
    ValidationError,
    build_hierarchy,
    entropy,
    layer_beta,
    merge_skip,
    mutual_information,
    propagate,
    relevant_info_profile,
    xor_source,
)


def random_joint(rng, nx, ny) -> JointDistribution:
    return JointDistribution(rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny))


def layer(name, attentions, cardinality, **kw) -> LayerSpec:
    return LayerSpec(name=name, attentions=tuple(attentions), cardinality=cardinality, **kw)


def fast_cfg(seed=0, restarts=3) -> SolverConfig:
    return SolverConfig(
        beta=1.0,
        bottleneck_cardinality=1,
        max_iterations=500,
        convergence_tol=1e-9,
        restarts=restarts,
        rng_seed=seed,
    )


def separated_joint() -> JointDistribution:
    """A 3x3 source whose conditional rows are far apart, so that a large
    multiplier forces an essentially lossless encoding."""
    return JointDistribution(
        np.array(
            [
                [0.30, 0.02, 0.01],
                [0.01, 0.30, 0.02],
                [0.02, 0.01, 0.31],
            ]
        )
    )


class TestBuildHierarchy:
    def test_valid_plain_chain(self):
        spec = build_hierarchy(HierarchySpec((layer("a", [1.0], 2), layer("b", [1.0], 2))))
        assert spec.n_layers == 2

    def test_valid_skip(self):
        spec = HierarchySpec(
            tuple(layer(n, [1.0], 2) for n in "abc"), (SkipEdge(1, 3),)
        )
        assert build_hierarchy(spec).skips == (SkipEdge(1, 3),)

    def test_adjacent_skip_rejected(self):
        with pytest.raises(ValidationError, match="intermediate"):
            SkipEdge(1, 2)

    def test_out_of_range_skip_rejected(self):
        with pytest.raises(ValidationError, match="exceeds"):
            HierarchySpec(tuple(layer(n, [1.0], 2) for n in "abc"), (SkipEdge(2, 4),))

    def test_duplicate_skips_rejected(self):
        layers = tuple(layer(n, [1.0], 2) for n in "abcd")
        with pytest.raises(ValidationError, match="duplicate"):
            HierarchySpec(layers, (SkipEdge(1, 3), SkipEdge(1, 3)))

    def test_empty_layers_rejected(self):
        with pytest.raises(ValidationError, match="at least one layer"):
            HierarchySpec(())

    def test_non_positive_attention_rejected(self):
        with pytest.raises(ValidationError, match="must be > 0"):
            layer("a", [1.0, 0.0], 2)


class TestLayerBeta:
    def test_sum_over_consuming_layer(self):
        spec = HierarchySpec((layer("ops", [1.0], 4), layer("mgmt", [2.0, 3.0], 2)))
        assert layer_beta(spec, 1) == pytest.approx(5.0)

    def test_single_agent_consumer(self):
        spec = HierarchySpec((layer("ops", [1.0], 4), layer("boss", [7.0], 2)))
        assert layer_beta(spec, 1) == pytest.approx(7.0)

    def test_uniform_attentions(self):
        spec = HierarchySpec((layer("ops", [1.0], 4), layer("team", [1.0] * 4, 2)))
        assert layer_beta(spec, 1) == pytest.approx(4.0)

    def test_top_layer_uses_own_attentions(self):
        spec = HierarchySpec((layer("ops", [1.0], 4), layer("team", [2.0, 0.5], 2)))
        assert layer_beta(spec, 2) == pytest.approx(2.5)

    def test_out_of_range(self):
        spec = HierarchySpec((layer("ops", [1.0], 4),))
        with pytest.raises(ValidationError):
            layer_beta(spec, 0)
        with pytest.raises(ValidationError):
            layer_beta(spec, 2)


class TestPropagate:
    def test_single_layer_lossless_at_high_beta(self):
        from orgbottleneck import brute_force_ib

        j = separated_joint()
        spec = HierarchySpec((layer("only", [150.0], 3),))
        report = propagate(spec, j, fast_cfg(seed=1))
        assert report.states[0].i_y_l == pytest.approx(mutual_information(j), abs=1e-6)
        # The deterministic optimum at this budget is the lossless encoding.
        oracle = brute_force_ib(j, 3, 150.0)
        assert oracle.i_y_xhat == pytest.approx(mutual_information(j), abs=1e-12)

    def test_cardinality_one_chain_carries_nothing(self):
        rng = np.random.default_rng(3)
        j = random_joint(rng, 4, 3)
        spec = HierarchySpec(tuple(layer(n, [2.0], 1) for n in "abc"))
        report = propagate(spec, j, fast_cfg())
        for state in report.states:
            assert state.i_x_l == pytest.approx(0.0, abs=1e-12)
            assert state.i_y_l == pytest.approx(0.0, abs=1e-12)

    def test_xor_strict_chain_loses_everything(self):
        layers = (
            layer("ops", [1.0], 2, beta_override=100.0),
            layer("mid", [1.0], 2, beta_override=0.0),
            layer("top", [1.0], 2, beta_override=100.0),
        )
        report = propagate(HierarchySpec(layers), xor_source(), fast_cfg(seed=2))
        relevances = [s.i_y_l for s in report.states]
        assert relevances[0] == pytest.approx(1.0, abs=1e-6)
        assert relevances[1] == pytest.approx(0.0, abs=1e-9)
        assert relevances[2] == pytest.approx(0.0, abs=1e-9)

    def test_strict_chain_dpi_property(self):
        rng = np.random.default_rng(5)
        cfg = fast_cfg(restarts=2)
        for k in range(40):
            nx, ny = int(rng.integers(2, 7)), int(rng.integers(2, 4))
            n_layers = int(rng.integers(1, 5))
            layers = tuple(
                layer(
                    f"l{i}",
                    rng.uniform(0.2, 15.0, size=int(rng.integers(1, 4))),
                    int(rng.integers(1, 6)),
                )
                for i in range(n_layers)
            )
            j = random_joint(rng, nx, ny)
            report = propagate(HierarchySpec(layers), j, cfg)
            ix = [s.i_x_l for s in report.states]
            for a, b in zip(ix, ix[1:]):
                assert b <= a + 1e-9
            for s in report.states:
                assert s.i_y_l <= report.source_mi + 1e-9
                assert s.i_y_l <= s.i_x_l + 1e-9

    def test_determinism(self):
        rng = np.random.default_rng(7)
        j = random_joint(rng, 5, 3)
        layers = (layer("a", [3.0, 1.0], 3), layer("b", [4.0], 2))
        r1 = propagate(HierarchySpec(layers), j, fast_cfg(seed=11))
        r2 = propagate(HierarchySpec(layers), j, fast_cfg(seed=11))
        for s1, s2 in zip(r1.states, r2.states):
            assert np.array_equal(s1.encoder.probs, s2.encoder.probs)
            assert s1.i_y_l == s2.i_y_l

    def test_beta_override_wins_over_attentions(self):
        j = separated_joint()
        layers = (layer("only", [0.1], 3, beta_override=150.0),)
        report = propagate(HierarchySpec(layers), j, fast_cfg(seed=1))
        assert report.states[0].beta_effective == 150.0
        assert report.states[0].i_y_l == pytest.approx(mutual_information(j), abs=1e-6)

    def test_rate_limit_flag(self):
        j = separated_joint()
        layers = (layer("only", [150.0], 3, max_rate_bits=0.1),)
        report = propagate(HierarchySpec(layers), j, fast_cfg(seed=1))
        assert report.states[0].rate_limit_exceeded is True
        relaxed = (layer("only", [150.0], 3, max_rate_bits=10.0),)
        report = propagate(HierarchySpec(relaxed), j, fast_cfg(seed=1))
        assert report.states[0].rate_limit_exceeded is False

    def test_attention_monotonicity_single_layer(self):
        """A bigger attention budget never loses relevant information."""
        rng = np.random.default_rng(13)
        for k in range(5):
            j = random_joint(rng, 4, 3)
            achieved = []
            for budget in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
                spec = HierarchySpec((layer("only", [budget], 2),))
                report = propagate(spec, j, fast_cfg(seed=k, restarts=6))
                achieved.append(report.states[0].i_y_l)
            for a, b in zip(achieved, achieved[1:]):
                assert b >= a - 1e-6


class TestMergeSkip:
    def _two_layer_report(self, seed=0):
        rng = np.random.default_rng(seed)
        j = random_joint(rng, 5, 3)
        layers = (layer("a", [6.0], 3), layer("b", [2.0], 2))
        return j, propagate(HierarchySpec(layers), j, fast_cfg(seed=seed))

    def test_merge_with_self_adds_nothing(self):
        j, report = self._two_layer_report(seed=1)
        state = report.states[0]
        merged = merge_skip(state, state, j, report.history)
        assert merged.x_size == state.encoder.out_size ** 2
        assert mutual_information(merged) == pytest.approx(state.i_y_l, abs=1e-12)

    def test_merge_with_constant_adds_nothing(self):
        rng = np.random.default_rng(2)
        j = random_joint(rng, 4, 3)
        constant = Channel.constant(4, 1)
        informative = Channel(rng.dirichlet(np.ones(3), size=4))
        links = (ChainLink((0,), constant), ChainLink((0,), informative))
        history = EncoderChain(j, links)
        state_const = _state_for(history, 1, j)
        state_info = _state_for(history, 2, j)
        merged = merge_skip(state_const, state_info, j, history)
        assert mutual_information(merged) == pytest.approx(state_info.i_y_l, abs=1e-12)

    def test_xor_bits_recovered_jointly(self):
        """Two individually useless single-bit views determine the parity."""
        j = xor_source()
        first_bit = Channel([[1, 0], [1, 0], [0, 1], [0, 1]])
        second_bit = Channel([[1, 0], [0, 1], [1, 0], [0, 1]])
        history = EncoderChain(j, (ChainLink((0,), first_bit), ChainLink((0,), second_bit)))
        state_a = _state_for(history, 1, j)
        state_b = _state_for(history, 2, j)
        assert state_a.i_y_l == pytest.approx(0.0, abs=1e-12)
        assert state_b.i_y_l == pytest.approx(0.0, abs=1e-12)
        merged = merge_skip(state_a, state_b, j, history)
        assert merged.x_size == 4
        assert mutual_information(merged) == pytest.approx(1.0, abs=1e-12)

    def test_mismatched_history_rejected(self):
        j, report = self._two_layer_report(seed=3)
        state = report.states[0]
        tampered = LayerState(
            index=state.index,
            name=state.name,
            representation_joint=state.representation_joint,
            encoder=Channel.constant(5, 3),
            i_x_l=state.i_x_l,
            i_y_l=state.i_y_l,
            h_l=state.h_l,
            beta_effective=state.beta_effective,
            converged=state.converged,
        )
        with pytest.raises(ConsistencyError):
            merge_skip(tampered, report.states[1], j, report.history)

    def test_mismatched_source_rejected(self):
        j, report = self._two_layer_report(seed=4)
        rng = np.random.default_rng(99)
        other = random_joint(rng, 5, 3)
        with pytest.raises(ConsistencyError):
            merge_skip(report.states[0], report.states[1], other, report.history)

    def test_merge_monotonicity(self):
        """Adding a coordinate never destroys relevant information."""
        for seed in range(8):
            j, report = self._two_layer_report(seed=seed)
            a, b = report.states
            merged = merge_skip(a, b, j, report.history)
            assert mutual_information(merged) >= max(a.i_y_l, b.i_y_l) - 1e-9


class TestRelevantInfoProfile:
    def test_single_layer_projection(self):
        j = separated_joint()
        report = propagate(HierarchySpec((layer("only", [5.0], 3),)), j, fast_cfg())
        rows = relevant_info_profile(report)
        assert len(rows) == 1
        idx, ix, iy, h, beta = rows[0]
        state = report.states[0]
        assert (idx, ix, iy, h, beta) == (
            1,
            state.i_x_l,
            state.i_y_l,
            state.h_l,
            state.beta_effective,
        )

    def test_strict_chain_column_non_increasing(self):
        rng = np.random.default_rng(17)
        j = random_joint(rng, 6, 3)
        layers = tuple(layer(f"l{i}", [5.0], 4 - i) for i in range(3))
        report = propagate(HierarchySpec(layers), j, fast_cfg(seed=5))
        ix = [row[1] for row in relevant_info_profile(report)]
        assert all(b <= a + 1e-9 for a, b in zip(ix, ix[1:]))


class TestEncoderChainExactness:
    """The chain reconstruction must agree with brute-force enumeration of the
    full joint p(x, l_1, ..., l_N, y), including multi-skip wiring."""

    def _brute_force_conditional(self, source, links, targets):
        nx = source.x_size
        sizes = [link.encoder.out_size for link in links]
        target_sizes = [nx if t == 0 else sizes[t - 1] for t in targets]
        out = np.zeros((nx, int(np.prod(target_sizes))))
        for x in range(nx):
            # Enumerate all joint assignments of every layer variable.
            for assignment in np.ndindex(*sizes):
                prob = 1.0
                values = {0: x}
                for idx, link in enumerate(links, start=1):
                    row = 0
                    for v in link.inputs:
                        row = row * (nx if v == 0 else sizes[v - 1]) + values[v]
                    prob *= link.encoder.probs[row, assignment[idx - 1]]
                    values[idx] = assignment[idx - 1]
                col = 0
                for t, ts in zip(targets, target_sizes):
                    col = col * ts + values[t]
                out[x, col] += prob
        return out

    def test_matches_enumeration_on_multi_skip_wiring(self):
        rng = np.random.default_rng(21)
        source = random_joint(rng, 3, 2)
        links = (
            ChainLink((0,), Channel(rng.dirichlet(np.ones(3), size=3))),
            ChainLink((1,), Channel(rng.dirichlet(np.ones(2), size=3))),
            ChainLink((1, 2), Channel(rng.dirichlet(np.ones(2), size=6))),
            ChainLink((1, 2, 3), Channel(rng.dirichlet(np.ones(3), size=12))),
        )
        chain = EncoderChain(source, links)
        for targets in [(4,), (1, 4), (2, 3), (0, 4), (1, 2, 4)]:
            fast = chain.conditional_given_source(targets)
            slow = self._brute_force_conditional(source, links, targets)
            assert np.allclose(fast, slow, atol=1e-13), f"targets {targets}"

    def test_propagation_skip_joint_matches_enumeration(self):
        rng = np.random.default_rng(22)
        j = random_joint(rng, 4, 3)
        layers = (
            layer("a", [5.0], 3),
            layer("b", [3.0], 2),
            layer("c", [2.0], 2),
            layer("d", [2.0], 2),
        )
        spec = HierarchySpec(layers, (SkipEdge(1, 3), SkipEdge(2, 4)))
        report = propagate(spec, j, fast_cfg(seed=6))
        links = report.history.links
        for state in report.states:
            cond = self._brute_force_conditional(j, links, (state.index,))
            joint = JointDistribution(cond.T @ j.probs)
            assert mutual_information(joint) == pytest.approx(state.i_y_l, abs=1e-12)


def _state_for(history: EncoderChain, index: int, source: JointDistribution) -> LayerState:
    """Assemble a layer state directly from a handcrafted chain."""
    rep = history.joint_with_relevance((index,))
    cond = history.conditional_given_source((index,))
    px = source.marginal_x().probs
    return LayerState(
        index=index,
        name=f"layer-{index}",
        representation_joint=rep,
        encoder=history.links[index - 1].encoder,
        i_x_l=mutual_information(JointDistribution(px[:, None] * cond)),
        i_y_l=mutual_information(rep),
        h_l=entropy(rep.marginal_x()),
        beta_effective=1.0,
        converged=True,
    )
