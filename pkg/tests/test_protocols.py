import numpy as np
import pytest
from scipy.stats import chi2, chisquare

from fixtures import random_dist
from services.analysis import (
    chi_square_uniformity,
    empirical_distribution,
    fourier_coefficients,
    lag_joint,
    mutual_information,
    shannon_entropy,
    total_variation,
    tv_to_uniform,
)
from services.errors import ValidationError
from services.protocols import (
    SampleSequence,
    SequenceMeta,
    cesaro_mixture,
    convolve,
    iter_convolution_powers,
    iterated_kernel,
    marginal,
    run_cesaro_protocol,
    run_direct_protocol,
    run_reset_protocol,
    transition_kernel,
    transition_matrix,
)
from services.rng import RandomSource
from services.walk import CoinOperator, CycleConfig, evolve, localized_state, point_mass, position_distribution


@pytest.mark.parametrize("nodes", [3, 4, 25, 64])
def test_one_step_kernel(nodes, balanced):
    mu = transition_kernel(CycleConfig(nodes), 1, balanced).mu
    assert mu[1] == pytest.approx(0.5)
    assert mu[nodes - 1] == pytest.approx(0.5)


def test_kernel_requires_positive_steps(symmetric25, balanced):
    with pytest.raises(ValidationError, match="m must be >= 1"):
        transition_kernel(symmetric25, 0, balanced)


def test_kernel_is_reflection_symmetric(balanced):
    rng = np.random.default_rng(13)
    for _ in range(100):
        nodes = int(rng.integers(3, 40))
        m = int(rng.integers(1, 120))
        weights = transition_kernel(CycleConfig(nodes), m, balanced).mu.weights
        np.testing.assert_allclose(weights[1:], weights[1:][::-1], atol=1e-10)


def test_ten_step_kernel_has_ballistic_peaks(symmetric25, balanced):
    weights = transition_kernel(symmetric25, 10, balanced).mu.weights
    peak = int(np.argmax(weights))
    assert min(peak, 25 - peak) >= 4
    assert weights[peak] == pytest.approx(weights[25 - peak])
    # ten steps from 0 only reach even displacements in [-10, 10]
    assert np.all(weights[[1, 3, 5, 7, 9, 11, 12, 13, 14, 16, 18, 20, 22, 24]] == 0.0)


def test_hundred_step_kernel_is_flatter(symmetric25, balanced):
    short = transition_kernel(symmetric25, 10, balanced).mu
    long = transition_kernel(symmetric25, 100, balanced).mu
    assert long.weights.max() < short.weights.max()
    assert tv_to_uniform(long) < tv_to_uniform(short)


def test_convolution_algebra():
    rng = np.random.default_rng(19)
    for _ in range(100):
        nodes = int(rng.integers(3, 30))
        p, q, r = (random_dist(rng, nodes) for _ in range(3))
        np.testing.assert_allclose(convolve(point_mass(nodes, 0), p).weights, p.weights, atol=1e-15)
        np.testing.assert_allclose(convolve(p, q).weights, convolve(q, p).weights, atol=1e-12)
        np.testing.assert_allclose(
            convolve(convolve(p, q), r).weights, convolve(p, convolve(q, r)).weights, atol=1e-12
        )
        np.testing.assert_allclose(
            fourier_coefficients(convolve(p, q)).coefficients,
            fourier_coefficients(p).coefficients * fourier_coefficients(q).coefficients,
            atol=1e-10,
        )


def test_convolution_rejects_mismatched_cycles():
    with pytest.raises(ValidationError):
        convolve(point_mass(3, 0), point_mass(4, 0))


def test_iterated_kernel_matches_matrix_powers(symmetric25, balanced):
    kernel = transition_kernel(symmetric25, 10, balanced)
    matrix = transition_matrix(kernel)
    row = point_mass(25, 0).weights
    for n, power in enumerate(iter_convolution_powers(kernel.mu, 100), start=1):
        row = row @ matrix
        assert np.max(np.abs(power.weights - row)) <= 1e-10
        if n in (1, 7, 50):
            np.testing.assert_allclose(iterated_kernel(kernel, n).weights, power.weights, atol=1e-12)
    np.testing.assert_allclose(marginal(kernel, 3).weights, iterated_kernel(kernel, 3).weights)


def test_transition_matrix_is_circulant(symmetric25, balanced):
    kernel = transition_kernel(symmetric25, 10, balanced)
    matrix = transition_matrix(kernel)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0)
    for a, b in [(0, 10), (3, 13), (20, 5)]:
        assert matrix[a, b] == pytest.approx(kernel.mu[(b - a) % 25])


def test_marginal_converges_to_uniform(symmetric25, balanced):
    kernel = transition_kernel(symmetric25, 10, balanced)
    profile = [tv_to_uniform(power) for power in iter_convolution_powers(kernel.mu, 200)]
    assert profile[49] < 1e-3
    assert all(later <= earlier + 1e-15 for earlier, later in zip(profile, profile[1:]))


def test_long_convolution_powers_keep_unit_mass(symmetric25, balanced):
    kernel = transition_kernel(symmetric25, 10, balanced)
    power = iterated_kernel(kernel, 100_000)
    assert abs(power.weights.sum() - 1.0) <= 1e-12
    assert tv_to_uniform(power) < 1e-12


def test_periodic_kernel_never_approaches_uniform(balanced):
    kernel = transition_kernel(CycleConfig(6), 2, balanced)
    profile = [tv_to_uniform(power) for power in iter_convolution_powers(kernel.mu, 200)]
    assert min(profile) >= 0.5 - 1e-12


def test_reset_protocol_is_reproducible(symmetric25, balanced):
    first = run_reset_protocol(symmetric25, 10, balanced, 500, RandomSource(7))
    second = run_reset_protocol(symmetric25, 10, balanced, 500, RandomSource(7))
    other = run_reset_protocol(symmetric25, 10, balanced, 500, RandomSource(8))
    assert np.array_equal(first.values, second.values)
    assert not np.array_equal(first.values, other.values)
    assert first.meta.protocol == "reset"
    assert first.meta.steps == 10
    assert first.meta.reset == "measured"
    assert first.meta.algorithm == RandomSource.algorithm
    assert len(first) == 500


def test_reset_protocol_steps_follow_the_kernel(symmetric25, balanced):
    seq = run_reset_protocol(symmetric25, 10, balanced, 2000, RandomSource(1), x0=4)
    steps = np.mod(np.diff(np.concatenate([[4], seq.values])), 25)
    support = set(transition_kernel(symmetric25, 10, balanced).mu.support(1e-12).tolist())
    assert set(steps.tolist()) <= support


def test_reset_protocol_statistics(symmetric25, balanced):
    seq = run_reset_protocol(symmetric25, 100, balanced, 100_000, RandomSource(7))
    assert tv_to_uniform(empirical_distribution(seq)) < 0.02
    assert chi_square_uniformity(seq).statistic < 51.2


def test_longer_evolution_reduces_lag_one_information(symmetric25, balanced):
    short = run_reset_protocol(symmetric25, 10, balanced, 100_000, RandomSource(7))
    long = run_reset_protocol(symmetric25, 100, balanced, 100_000, RandomSource(7))
    assert mutual_information(lag_joint(long, 1)) < mutual_information(lag_joint(short, 1))


def test_uniform_reset_variant(symmetric25, balanced):
    seq = run_reset_protocol(symmetric25, 10, balanced, 20_000, RandomSource(3), reset="uniform")
    assert seq.meta.reset == "uniform"
    assert seq.values.min() >= 0 and seq.values.max() <= 24
    assert mutual_information(lag_joint(seq, 1)) < 0.05
    with pytest.raises(ValidationError):
        run_reset_protocol(symmetric25, 10, balanced, 10, RandomSource(3), reset="sometimes")


def test_direct_protocol_matches_exact_distribution(hadamard25, balanced):
    seq = run_direct_protocol(hadamard25, 37, balanced, 3, 100_000, RandomSource(5))
    exact = position_distribution(evolve(localized_state(hadamard25, 3, balanced), 37))
    assert total_variation(empirical_distribution(seq), exact) < 0.02
    counts = np.bincount(seq.values, minlength=25)
    support = exact.weights > 1e-12
    assert counts[~support].sum() == 0
    expected = exact.weights[support] / exact.weights[support].sum() * len(seq)
    result = chisquare(counts[support], expected)
    assert result.statistic < chi2.ppf(0.999, int(support.sum()) - 1)
    with pytest.raises(ValidationError):
        run_direct_protocol(hadamard25, 0, balanced, 0, 10, RandomSource(5))


def test_cesaro_protocol_matches_mixture(symmetric25, balanced):
    seq = run_cesaro_protocol(symmetric25, 40, balanced, 0, 100_000, RandomSource(9))
    mixture = cesaro_mixture(symmetric25, 40, balanced)
    assert total_variation(empirical_distribution(seq), mixture) < 0.02


def test_cesaro_protocol_with_empty_horizon(symmetric25, balanced):
    seq = run_cesaro_protocol(symmetric25, 0, balanced, 6, 50, RandomSource(2))
    assert set(seq.values.tolist()) == {6}
    with pytest.raises(ValidationError):
        run_cesaro_protocol(symmetric25, -1, balanced, 0, 50, RandomSource(2))


def test_hadamard_cesaro_samples_reach_high_entropy(hadamard25, balanced):
    seq = run_cesaro_protocol(hadamard25, 2000, balanced, 0, 100_000, RandomSource(4))
    assert abs(shannon_entropy(empirical_distribution(seq)) - np.log2(25)) < 0.1


def test_sample_sequence_validation():
    meta = SequenceMeta(nodes=5, protocol="reset", steps=1, coin="symmetric", seed=0, length=3)
    assert len(SampleSequence(np.array([0, 4, 2]), meta)) == 3
    with pytest.raises(ValidationError):
        SampleSequence(np.array([0, 5, 2]), meta)
    with pytest.raises(ValidationError):
        SampleSequence(np.array([0, 1]), meta)
    with pytest.raises(ValidationError, match="missing"):
        SequenceMeta.from_dict({"nodes": 5, "protocol": "reset"})


def test_kernel_on_custom_coin_is_a_distribution(balanced):
    coin = CoinOperator(np.array([[np.cos(0.3), np.sin(0.3)], [np.sin(0.3), -np.cos(0.3)]]))
    mu = transition_kernel(CycleConfig(17, coin), 23, balanced).mu
    assert abs(mu.weights.sum() - 1.0) <= 1e-10
