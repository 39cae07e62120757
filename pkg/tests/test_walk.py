import numpy as np
import pytest

from fixtures import COINS, random_coin, random_coin_state, random_state
from services.errors import ValidationError, VertexIndexError
from services.walk import (
    CoinOperator,
    CoinState,
    CycleConfig,
    ProbDist,
    WalkerState,
    apply_step,
    coin_from_name,
    distribution_table,
    evolve,
    localized_state,
    point_mass,
    position_distribution,
    step_operator_matrix,
    uniform_dist,
)

SQRT_HALF = 1.0 / np.sqrt(2.0)


def test_localized_state_puts_coin_on_start_vertex(symmetric25, balanced):
    state = localized_state(symmetric25, 3, balanced)
    assert state.amplitude(0, 3) == pytest.approx(SQRT_HALF)
    assert state.amplitude(1, 3) == pytest.approx(SQRT_HALF)
    assert np.count_nonzero(state.amplitudes) == 2


def test_single_step_symmetric_coin(symmetric25, balanced):
    state = apply_step(localized_state(symmetric25, 0, balanced))
    expected = (1 + 1j) / 2
    assert state.amplitude(0, 1) == pytest.approx(expected)
    assert state.amplitude(1, 24) == pytest.approx(expected)
    weights = position_distribution(state).weights
    assert weights[1] == pytest.approx(0.5)
    assert weights[24] == pytest.approx(0.5)
    assert weights.sum() == pytest.approx(1.0)


def test_step_preserves_norm_on_random_states():
    rng = np.random.default_rng(11)
    for _ in range(100):
        config = CycleConfig(int(rng.integers(3, 40)), COINS[int(rng.integers(2))])
        state = random_state(rng, config)
        assert abs(apply_step(state).norm() - 1.0) < 1e-12


def test_evolve_zero_returns_same_state(symmetric25, balanced):
    state = localized_state(symmetric25, 4, balanced)
    assert evolve(state, 0) is state


def test_evolve_composes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        config = CycleConfig(int(rng.integers(3, 30)), COINS[int(rng.integers(2))])
        state = random_state(rng, config)
        a, b = (int(v) for v in rng.integers(0, 60, size=2))
        np.testing.assert_allclose(
            evolve(state, a + b).amplitudes, evolve(evolve(state, a), b).amplitudes, atol=1e-10
        )


def test_evolve_rejects_negative_time(symmetric25, balanced):
    with pytest.raises(ValidationError):
        evolve(localized_state(symmetric25, 0, balanced), -1)


@pytest.mark.parametrize("nodes,coin,t", [(25, CoinOperator.symmetric(), 10), (4, CoinOperator.hadamard(), 16)])
def test_evolve_matches_dense_matrix_power(nodes, coin, t):
    config = CycleConfig(nodes, coin)
    rng = np.random.default_rng(nodes)
    state = random_state(rng, config)
    oracle = np.linalg.matrix_power(step_operator_matrix(config), t) @ state.amplitudes
    assert np.max(np.abs(evolve(state, t).amplitudes - oracle)) < 1e-10


@pytest.mark.parametrize("nodes", [3, 6, 25])
@pytest.mark.parametrize("coin", COINS, ids=lambda c: c.name)
def test_step_operator_matrix_is_unitary(nodes, coin):
    matrix = step_operator_matrix(CycleConfig(nodes, coin))
    assert np.max(np.abs(matrix.conj().T @ matrix - np.eye(2 * nodes))) <= 1e-12


def test_step_operator_matrix_agrees_with_apply_step():
    rng = np.random.default_rng(5)
    for _ in range(50):
        config = CycleConfig(int(rng.integers(3, 20)), COINS[int(rng.integers(2))])
        state = random_state(rng, config)
        np.testing.assert_allclose(step_operator_matrix(config) @ state.amplitudes, apply_step(state).amplitudes, atol=1e-12)


def test_long_evolution_keeps_unit_norm():
    rng = np.random.default_rng(17)
    for coin in COINS:
        state = random_state(rng, CycleConfig(25, coin))
        assert abs(evolve(state, 10_000).norm() - 1.0) < 1e-8


def test_translation_covariance():
    rng = np.random.default_rng(23)
    for _ in range(100):
        nodes = int(rng.integers(3, 30))
        config = CycleConfig(nodes, random_coin(rng))
        coin0 = random_coin_state(rng)
        x0, d = (int(v) for v in rng.integers(0, nodes, size=2))
        t = int(rng.integers(0, 40))
        base = position_distribution(evolve(localized_state(config, x0, coin0), t))
        moved = position_distribution(evolve(localized_state(config, (x0 + d) % nodes, coin0), t))
        np.testing.assert_allclose(moved.weights, base.shift(d).weights, atol=1e-12)


def test_parity_on_even_cycles():
    rng = np.random.default_rng(29)
    for _ in range(100):
        nodes = 2 * int(rng.integers(2, 15))
        config = CycleConfig(nodes, random_coin(rng))
        x0 = int(rng.integers(0, nodes))
        t = int(rng.integers(0, 50))
        weights = position_distribution(evolve(localized_state(config, x0, random_coin_state(rng)), t)).weights
        wrong_parity = [x for x in range(nodes) if (x - x0 - t) % 2]
        assert np.all(weights[wrong_parity] == 0.0)


def test_position_distribution_is_valid_on_random_states():
    rng = np.random.default_rng(31)
    for _ in range(100):
        config = CycleConfig(int(rng.integers(3, 40)), random_coin(rng))
        weights = position_distribution(random_state(rng, config)).weights
        assert np.all(weights >= 0.0)
        assert abs(weights.sum() - 1.0) <= 1e-10


def test_distribution_table_rows_match_evolve(hadamard25, balanced):
    state = localized_state(hadamard25, 0, balanced)
    table = distribution_table(state, 30)
    assert table.shape == (31, 25)
    for t in (0, 1, 17, 30):
        np.testing.assert_allclose(table[t], position_distribution(evolve(state, t)).weights, atol=1e-14)


def test_cycle_config_validation():
    with pytest.raises(ValidationError):
        CycleConfig(2)
    with pytest.raises(ValidationError):
        CycleConfig(5.0)
    config = CycleConfig(5)
    with pytest.raises(VertexIndexError):
        config.check_vertex(5)
    with pytest.raises(VertexIndexError):
        localized_state(config, -1, CoinState.balanced())


def test_coin_validation():
    with pytest.raises(ValidationError, match="unitary"):
        CoinOperator(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        CoinOperator(np.eye(3))
    with pytest.raises(ValidationError):
        CoinState(1.0, 1.0)


def test_walker_state_validation():
    config = CycleConfig(4)
    with pytest.raises(ValidationError):
        WalkerState(np.zeros(8), config)
    with pytest.raises(ValidationError):
        WalkerState(np.ones(6) / np.sqrt(6), config)


def test_prob_dist_validation():
    with pytest.raises(ValidationError):
        ProbDist(np.array([0.5, 0.6, -0.1]))
    with pytest.raises(ValidationError):
        ProbDist(np.array([0.5, 0.4]))
    clamped = ProbDist(np.array([0.5, 0.5, -1e-13]))
    assert clamped.weights[2] == 0.0
    with pytest.raises(ValueError):
        clamped.weights[0] = 1.0


def test_prob_dist_helpers():
    assert uniform_dist(4).weights == pytest.approx([0.25] * 4)
    mass = point_mass(5, 2)
    assert list(mass.support()) == [2]
    assert mass.shift(4)[1] == 1.0
    assert ProbDist.from_counts([1, 3]).weights == pytest.approx([0.25, 0.75])


def test_coin_from_name_presets():
    assert coin_from_name("hadamard").is_close(CoinOperator.hadamard())
    assert coin_from_name(" Symmetric ").is_close(CoinOperator.symmetric())
    assert coin_from_name("identity").is_close(CoinOperator(np.eye(2)))
    custom = coin_from_name("custom:" + ",".join(str(v) for v in CoinOperator.symmetric().to_floats()))
    assert custom.is_close(CoinOperator.symmetric())
    with pytest.raises(ValidationError, match="unknown coin"):
        coin_from_name("biased")
    with pytest.raises(ValidationError):
        coin_from_name("custom:1,0,0")


def test_custom_coin_name_rebuilds_the_matrix():
    angle = 0.3
    text = f"custom:{np.cos(angle)} 0 {np.sin(angle)} 0 {np.sin(angle)} 0 {-np.cos(angle)} 0"
    coin = coin_from_name(text)
    rebuilt = coin_from_name(coin.name)
    assert rebuilt.name == coin.name
    assert np.array_equal(rebuilt.entries, coin.entries)


def test_coin_from_name_honours_disabled_presets(tmp_path, monkeypatch):
    config = tmp_path / "coins.json"
    config.write_text('{"coins": {"hadamard": {"enabled": false, "builtin": "hadamard"}}}', encoding="utf-8")
    monkeypatch.setenv("QWALK_CONFIG", str(config))
    with pytest.raises(ValidationError):
        coin_from_name("hadamard")


def test_missing_config_falls_back_to_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv("QWALK_CONFIG", str(tmp_path / "missing.json"))
    assert coin_from_name("hadamard").is_close(CoinOperator.hadamard())
