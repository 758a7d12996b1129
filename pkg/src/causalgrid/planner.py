"""Downstream-RL evaluation: reward predictor, greedy policy, baselines.

The policy is pure one-step lookahead: predict every action's next state
through the world model, score it with a reward function (learned or
true), take the argmax with lowest-index tie-break. Targets for a
horizon-k protocol are generated by k random actions from the episode's
start state, and the policy then gets exactly k steps to reach them.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .chemistry import ChemConfig
from .episodes import make_env, reset_env
from .physics import PhysicsConfig


@dataclass(frozen=True)
class EvalProtocol:
    horizon: int
    episodes: int = 500
    seed: int = 0
    return_mode: str = "final"  # "final": last-step reward; "sum": summed over the k steps

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.return_mode not in ("final", "sum"):
            raise ValueError("return_mode must be 'final' or 'sum'")


def reward_features(state, target, config):
    """Exact interaction features making the true reward linear.

    Chemistry: one agreement indicator per object. Physics: per object and
    axis, a one-hot over (coordinate, target coordinate) pairs, which spans
    any per-object distance function of the two.
    """
    if isinstance(config, ChemConfig):
        return np.array(
            [1.0 if a == b else 0.0 for a, b in zip(state.colors, target.colors)]
        )
    g = config.grid_size
    out = np.zeros(config.num_objects * 2 * g * g)
    for i, (pos, tpos) in enumerate(zip(state.positions, target.positions)):
        for axis in range(2):
            base = (i * 2 + axis) * g * g
            out[base + pos[axis] * g + tpos[axis]] = 1.0
    return out


class RewardPredictor:
    """Linear map over reward_features plus bias; flagged when degenerate."""

    def __init__(self, weights, bias, config, degenerate=False):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.config = config
        self.degenerate = degenerate

    def predict(self, state, target):
        return float(self.weights @ reward_features(state, target, self.config) + self.bias)

    def as_fn(self):
        return self.predict

    def to_json(self):
        return {
            "weights": [float(w) for w in self.weights],
            "bias": self.bias,
            "degenerate": self.degenerate,
        }


def fit_reward_predictor(episodes):
    """Least-squares fit of reward against the exact interaction features.

    Only the reward head is fitted; the symbolic encoding and whatever
    transition model the policy later uses stay untouched. A dataset whose
    rewards never vary yields a constant predictor with degenerate=True.
    """
    config = episodes[0].config
    env = make_env(config)
    rows, targets = [], []
    for ep in episodes:
        for state in ep.states:
            rows.append(reward_features(state, ep.target_state, config))
            targets.append(env.reward(state, ep.target_state))
    x = np.array(rows)
    y = np.array(targets)
    if np.allclose(y, y[0]):
        return RewardPredictor(np.zeros(x.shape[1]), y[0], config, degenerate=True)
    design = np.hstack([x, np.ones((x.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return RewardPredictor(coef[:-1], coef[-1], config)


def true_reward_fn(config):
    env = make_env(config)
    return env.reward


def greedy_policy(model, reward_fn, state, target, actions=None):
    """Argmax over one-step lookahead rewards; ties keep the lowest action index."""
    if actions is None:
        actions = make_env(model.config).action_space()
    best_action, best_value = None, None
    for action in actions:
        value = reward_fn(model.predict(state, action), target)
        if best_value is None or value > best_value:
            best_action, best_value = action, value
    return best_action


def _summarize(step_rewards, reached, mode):
    value = step_rewards[-1] if mode == "final" else sum(step_rewards)
    return value, reached


def evaluate_rl(model, reward_fn, config, protocol):
    """Greedy-policy evaluation plus random and optimal baselines.

    The optimal baseline is the one-step greedy policy on the true reward
    for physics, and a replay of the target-generating actions (on fresh
    transition noise) for chemistry, so its shortfall from 1.0 measures
    environment stochasticity alone.
    """
    env = make_env(config)
    actions = env.action_space()
    true_reward = env.reward
    k = protocol.horizon
    oracle = None
    if isinstance(config, PhysicsConfig):
        from .models import oracle_model

        oracle = oracle_model(config)

    sums = {"policy": 0.0, "random": 0.0, "optimal": 0.0}
    hits = {"policy": 0, "random": 0, "optimal": 0}

    for i in range(protocol.episodes):
        seed = rng.episode_seed(protocol.seed, "test", i)

        target = reset_env(env, config, "test", seed, stream=rng.TARGET)
        tgen = rng.substream(seed, rng.TARGET)
        target_actions = []
        for _ in range(k):
            action = env.random_action(tgen)
            target_actions.append(action)
            target = env.step(target, action)

        def rollout(pick_action):
            state = reset_env(env, config, "test", seed, stream=rng.POLICY)
            step_rewards = []
            for t in range(k):
                state = env.step(state, pick_action(state, t))
                step_rewards.append(true_reward(state, target))
            return _summarize(step_rewards, env.success(state, target), protocol.return_mode)

        value, ok = rollout(lambda s, t: greedy_policy(model, reward_fn, s, target, actions))
        sums["policy"] += value
        hits["policy"] += ok

        rgen = rng.substream(seed, rng.ACTIONS)
        value, ok = rollout(lambda s, t: env.random_action(rgen))
        sums["random"] += value
        hits["random"] += ok

        if isinstance(config, PhysicsConfig):
            value, ok = rollout(
                lambda s, t: greedy_policy(oracle, true_reward, s, target, actions)
            )
        else:
            value, ok = rollout(lambda s, t: target_actions[t])
        sums["optimal"] += value
        hits["optimal"] += ok

    n = protocol.episodes
    return {
        "k": k,
        "episodes": n,
        "return_mode": protocol.return_mode,
        "policy": {"mean_return": sums["policy"] / n, "success": hits["policy"] / n},
        "baseline_random": {"mean_return": sums["random"] / n, "success": hits["random"] / n},
        "baseline_optimal": {"mean_return": sums["optimal"] / n, "success": hits["optimal"] / n},
    }
