"""Unit and property tests for the information-theoretic primitives.

Expected values for the derived cases were computed with the plain
plug-in formulas implemented independently at the bottom of this module
and frozen as literals.
"""

import math

import numpy as np
import pytest

from orgbottleneck import (
    Channel,
    DimensionError,
    Distribution,
    JointDistribution,
    MarkovChainSpec,
    ValidationError,
    conditional_entropy,
    entropy,
    kl_divergence,
    mutual_information,
    permute_joint,
    push_through,
    verify_dpi,
)

# 1 - H_b(0.11): mutual information of a uniform bit through a binary
# symmetric channel with flip probability 0.11.
BSC_011_MI = 0.500084041835472
# H_b(0.11): the matching conditional entropy.
BSC_011_COND = 0.499915958164528
# Two cascaded BSC(0.11) stages compose to flip probability 2*0.11*0.89.
BSC_011_TWICE_MI = 0.28655185601060407


def bsc(flip: float) -> Channel:
    return Channel([[1 - flip, flip], [flip, 1 - flip]])


def diag_joint(px) -> JointDistribution:
    return JointDistribution(np.diag(np.asarray(px, dtype=float)))


def random_joint(rng, nx, ny) -> JointDistribution:
    return JointDistribution(rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny))


class TestDistributionTypes:
    def test_negative_entry_names_index(self):
        with pytest.raises(ValidationError, match=r"probs\[2\]"):
            Distribution([0.5, 0.75, -0.25])

    def test_normalization_failure_rejected(self):
        with pytest.raises(ValidationError, match="sums to"):
            Distribution([0.5, 0.4])

    def test_small_drift_renormalized(self):
        d = Distribution([0.5, 0.5 + 5e-13])
        assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)

    def test_joint_invariants(self):
        j = JointDistribution([[0.25, 0.25], [0.25, 0.25]])
        assert j.x_size == 2 and j.y_size == 2
        assert np.allclose(j.marginal_x().probs, [0.5, 0.5])
        with pytest.raises(ValidationError, match=r"\[1,0\]"):
            JointDistribution([[0.5, 0.5], [-0.1, 0.1]])

    def test_channel_row_validation(self):
        with pytest.raises(ValidationError, match="row 1"):
            Channel([[0.5, 0.5], [0.6, 0.6]])

    def test_values_are_immutable(self):
        d = Distribution([0.5, 0.5])
        with pytest.raises(ValueError):
            d.probs[0] = 0.9

    def test_markov_chain_adjacency_checked(self):
        j = diag_joint([0.5, 0.5])
        with pytest.raises(DimensionError):
            MarkovChainSpec(j, (Channel(np.eye(3)),))


class TestEntropy:
    def test_fair_coin(self):
        assert entropy([0.5, 0.5]) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self):
        assert entropy([1.0, 0.0]) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_four_symbols(self):
        assert entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(1, 12))
            p = rng.dirichlet(np.ones(n))
            h = entropy(p)
            assert -1e-12 <= h <= math.log2(n) + 1e-12 if n > 1 else h == 0.0


class TestMutualInformation:
    def test_independent_product_is_zero(self):
        px = np.array([0.3, 0.7])
        py = np.array([0.2, 0.5, 0.3])
        assert mutual_information(np.outer(px, py)) == pytest.approx(0.0, abs=1e-12)

    def test_perfect_correlation_is_one_bit(self):
        assert mutual_information(diag_joint([0.5, 0.5])) == pytest.approx(1.0, abs=1e-12)

    def test_bsc_frozen_value(self):
        j = push_through(diag_joint([0.5, 0.5]), bsc(0.11))
        assert mutual_information(j) == pytest.approx(BSC_011_MI, abs=1e-12)
        assert mutual_information(j) == pytest.approx(_plugin_mi(j.probs), abs=1e-12)

    def test_symmetry_under_transpose(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            j = random_joint(rng, int(rng.integers(2, 8)), int(rng.integers(2, 8)))
            assert mutual_information(j) == pytest.approx(
                mutual_information(j.transpose()), abs=1e-12
            )

    def test_bounds_against_marginal_entropies(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            j = random_joint(rng, int(rng.integers(2, 8)), int(rng.integers(2, 8)))
            mi = mutual_information(j)
            assert -1e-12 <= mi
            assert mi <= min(entropy(j.marginal_x()), entropy(j.marginal_y())) + 1e-12

    def test_chain_rule_consistency(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            j = random_joint(rng, int(rng.integers(2, 8)), int(rng.integers(2, 8)))
            h_x = entropy(j.marginal_x())
            assert h_x == pytest.approx(
                mutual_information(j) + conditional_entropy(j), abs=1e-12
            )

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            nx, ny = int(rng.integers(2, 8)), int(rng.integers(2, 8))
            j = random_joint(rng, nx, ny)
            permuted = permute_joint(j, rng.permutation(nx), rng.permutation(ny))
            assert mutual_information(permuted) == pytest.approx(
                mutual_information(j), abs=1e-12
            )


class TestConditionalEntropy:
    def test_determined_variable(self):
        assert conditional_entropy(diag_joint([0.5, 0.5])) == pytest.approx(0.0, abs=1e-12)

    def test_independent_uniform_bits(self):
        j = np.full((2, 2), 0.25)
        assert conditional_entropy(j) == pytest.approx(1.0, abs=1e-12)

    def test_bsc_frozen_value(self):
        j = push_through(diag_joint([0.5, 0.5]), bsc(0.11))
        assert conditional_entropy(j) == pytest.approx(BSC_011_COND, abs=1e-12)


class TestKLDivergence:
    def test_identical_distributions(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_point_mass_against_fair_coin(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0, abs=1e-12)

    def test_support_violation_is_infinite(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kl_divergence([0.5, 0.5], [0.5, 0.25, 0.25])

    def test_non_negative(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            n = int(rng.integers(2, 10))
            assert kl_divergence(rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))) >= 0.0


class TestPushThrough:
    def test_identity_channel(self):
        rng = np.random.default_rng(29)
        j = random_joint(rng, 4, 3)
        out = push_through(j, Channel.identity(4))
        assert np.allclose(out.probs, j.probs, atol=1e-15)

    def test_constant_channel_kills_information(self):
        rng = np.random.default_rng(31)
        j = random_joint(rng, 4, 3)
        out = push_through(j, Channel.constant(4, 2))
        assert mutual_information(out) == pytest.approx(0.0, abs=1e-12)

    def test_bsc_on_diagonal_matches_frozen_mi(self):
        out = push_through(diag_joint([0.5, 0.5]), bsc(0.11))
        assert mutual_information(out) == pytest.approx(BSC_011_MI, abs=1e-12)

    def test_mass_preserved(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            nx, ny, nl = (int(rng.integers(2, 6)) for _ in range(3))
            j = random_joint(rng, nx, ny)
            c = Channel(rng.dirichlet(np.ones(nl), size=nx))
            assert push_through(j, c).probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            push_through(diag_joint([0.5, 0.5]), Channel.identity(3))


class TestVerifyDPI:
    def test_identity_chain_constant(self):
        j = diag_joint([0.3, 0.7])
        report = verify_dpi(MarkovChainSpec(j, (Channel.identity(2),) * 3))
        assert report.passed
        assert np.allclose(report.mutual_informations, entropy([0.3, 0.7]), atol=1e-12)

    def test_two_bsc_stages_strictly_decreasing(self):
        j = diag_joint([0.5, 0.5])
        report = verify_dpi(MarkovChainSpec(j, (bsc(0.11), bsc(0.11))))
        assert report.passed
        assert report.mutual_informations[0] == pytest.approx(BSC_011_MI, abs=1e-12)
        assert report.mutual_informations[1] == pytest.approx(BSC_011_TWICE_MI, abs=1e-12)
        assert report.mutual_informations[0] > report.mutual_informations[1]

    def test_random_chains_always_pass(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            nx, ny = int(rng.integers(2, 9)), int(rng.integers(2, 5))
            j = random_joint(rng, nx, ny)
            sizes = [nx] + [int(rng.integers(1, 9)) for _ in range(int(rng.integers(1, 5)))]
            stages = tuple(
                Channel(rng.dirichlet(np.ones(b), size=a))
                for a, b in zip(sizes, sizes[1:])
            )
            assert verify_dpi(MarkovChainSpec(j, stages)).passed


class TestOutputNormalization:
    """Every produced value type satisfies its own invariants."""

    def test_push_through_output_validates(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            j = random_joint(rng, 5, 4)
            c = Channel(rng.dirichlet(np.ones(3), size=5))
            out = push_through(j, c)
            JointDistribution(out.probs)  # re-validation must succeed
            Distribution(out.marginal_x().probs)


def _plugin_mi(joint: np.ndarray) -> float:
    """Independent oracle: H(Y) - H(Y|X) with explicit loops."""
    joint = np.asarray(joint, dtype=float)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    h_y = -sum(p * math.log2(p) for p in py if p > 0)
    h_y_given_x = 0.0
    for i, row in enumerate(joint):
        if px[i] <= 0:
            continue
        for cell in row:
            if cell > 0:
                h_y_given_x -= cell * math.log2(cell / px[i])
    return h_y - h_y_given_x
