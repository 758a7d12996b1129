import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalgrid.errors import ConfigError, MismatchError
from causalgrid.physics import (
    PhysicsAction,
    PhysicsConfig,
    PhysicsEnv,
    PhysicsState,
    TRAIN_INTENSITY_LEVELS,
    ZEROSHOT_INTENSITY_LEVELS,
    reset,
    step,
    reward,
    success,
    weight_order,
)

RIGHT = 3  # direction index


def make_state(positions, weights=None):
    m = len(positions)
    weights = weights or tuple(float(m - i) for i in range(m))
    return PhysicsState(tuple(positions), tuple(weights), tuple([0.5] * m), tuple([0] * m))


def test_reset_positions_distinct():
    for setting in ("observed", "unobserved", "fixed_unobserved"):
        config = PhysicsConfig(num_objects=5, grid_size=5, setting=setting, palette_size=8, seed=1)
        for seed in range(20):
            state = reset(config, seed)
            assert len(set(state.positions)) == 5


def test_observed_reset_darkest_is_heaviest():
    config = PhysicsConfig(num_objects=5, grid_size=5, setting="observed", seed=1)
    for seed in range(30):
        state = reset(config, seed)
        assert len(set(state.colors)) == 5
        assert np.argsort(state.weights).tolist() == np.argsort(state.colors).tolist()
        for c in state.colors:
            assert round(c * 255) in TRAIN_INTENSITY_LEVELS


def test_zeroshot_intensities_disjoint_from_train():
    assert not set(TRAIN_INTENSITY_LEVELS) & set(ZEROSHOT_INTENSITY_LEVELS)
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="observed", seed=1)
    state = reset(config, 0, intensity_range="zeroshot")
    for c in state.colors:
        assert round(c * 255) in ZEROSHOT_INTENSITY_LEVELS


def test_unobserved_reset_palette_rank_is_weight_rank():
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="unobserved", palette_size=5, seed=1)
    for seed in range(30):
        state = reset(config, seed)
        assert len(set(state.colors)) == 3
        assert all(0 <= c < 5 for c in state.colors)
        assert np.argsort(state.weights).tolist() == np.argsort(state.colors).tolist()


def test_fixed_unobserved_shapes_follow_weight_order():
    config = PhysicsConfig(num_objects=5, grid_size=5, setting="fixed_unobserved",
                           palette_size=8, seed=1)
    for seed in range(20):
        state = reset(config, seed)
        for shape_id, idx in enumerate(weight_order(state.weights)):
            assert state.shapes[idx] == shape_id


def test_push_moves_both_blocks():
    state = make_state([(2, 2), (2, 3)], weights=(2.0, 1.0))
    after = step(state, PhysicsAction(0, RIGHT), 5)
    assert after.positions == ((2, 3), (2, 4))


def test_lighter_cannot_push_heavier():
    state = make_state([(2, 2), (2, 3)], weights=(1.0, 2.0))
    after = step(state, PhysicsAction(1, RIGHT), 5)  # rank 1 = lighter = object 0
    assert after is state


def test_edge_blocks_movement():
    state = make_state([(2, 4)])
    assert step(state, PhysicsAction(0, RIGHT), 5) is state


def test_push_blocked_by_occupied_landing():
    state = make_state([(2, 2), (2, 3), (2, 4)], weights=(3.0, 2.0, 1.0))
    after = step(state, PhysicsAction(0, RIGHT), 5)
    assert after is state


def test_push_blocked_at_grid_edge():
    state = make_state([(2, 3), (2, 4)], weights=(2.0, 1.0))
    after = step(state, PhysicsAction(0, RIGHT), 5)
    assert after is state


def test_move_into_empty_cell():
    state = make_state([(0, 0)])
    after = step(state, PhysicsAction(0, 1), 5)  # down
    assert after.positions == ((1, 0),)


def test_action_rank_addresses_kth_heaviest():
    config = PhysicsConfig(num_objects=4, grid_size=6, setting="observed", seed=0)
    for seed in range(10):
        state = reset(config, seed)
        order = weight_order(state.weights)
        for rank in range(4):
            after = step(state, PhysicsAction(rank, RIGHT), 6)
            movers = [i for i in range(4) if after.positions[i] != state.positions[i]]
            if movers:
                # the actor is always the rank-th heaviest
                assert order[rank] in movers
                assert len(movers) <= 2


def test_reward_zero_iff_match():
    state = make_state([(0, 0), (1, 1)])
    assert reward(state, state, 5) == 0.0
    assert success(state, state)


def test_reward_single_cell_offset():
    state = make_state([(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)])
    target = make_state([(0, 1), (1, 1), (2, 2), (3, 3), (4, 4)])
    assert reward(state, target, 5) == pytest.approx(-0.025)
    assert not success(state, target)


def test_reward_maximal_displacement():
    state = make_state([(0, 0), (0, 4)])
    target = make_state([(4, 4), (4, 0)])
    assert reward(state, target, 5) == -1.0


def test_reward_mismatched_sizes():
    with pytest.raises(MismatchError):
        reward(make_state([(0, 0)]), make_state([(0, 0), (1, 1)]), 5)


def test_success_empty_is_vacuous():
    empty = PhysicsState((), (), (), ())
    assert success(empty, empty)


def test_config_validation():
    with pytest.raises(ConfigError):
        PhysicsConfig(num_objects=30, grid_size=5)
    with pytest.raises(ConfigError):
        PhysicsConfig(num_objects=5, setting="unobserved", palette_size=3)
    with pytest.raises(ConfigError):
        PhysicsConfig(num_objects=6, setting="fixed_unobserved", palette_size=8, grid_size=5)


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    rank=st.integers(0, 3),
    direction=st.integers(0, 3),
)
def test_step_invariants(seed, rank, direction):
    config = PhysicsConfig(num_objects=4, grid_size=4, setting="observed", seed=0)
    state = reset(config, seed)
    after = step(state, PhysicsAction(rank, direction), 4)
    assert len(set(after.positions)) == 4
    assert all(0 <= r < 4 and 0 <= c < 4 for r, c in after.positions)
    moved = sum(a != b for a, b in zip(state.positions, after.positions))
    assert moved <= 2
    assert after.weights == state.weights
    assert after.colors == state.colors


def test_env_wrapper_matches_functions():
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="observed", seed=2)
    env = PhysicsEnv(config)
    state = env.reset(7)
    assert state == reset(config, 7)
    action = PhysicsAction(0, RIGHT)
    assert env.step(state, action) == step(state, action, 5)
    assert len(env.action_space()) == 12
