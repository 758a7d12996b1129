"""Weighted-block pushing gridworld.

Objects with unique hidden weights occupy distinct cells; moving one into
an occupied cell pushes the occupant one cell onward iff the mover is
heavier and the landing cell is free. Action ranks always address objects
by weight order (rank 0 = heaviest), which keeps the action-to-object
mapping well defined in every observability setting.

Weight observability:
  observed          weight order equals color-intensity order (darker = heavier)
  unobserved        colors drawn without replacement from a global palette whose
                    index order is the weight order; shapes are distractors
  fixed_unobserved  like unobserved, but shape ids also follow weight order
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ConfigError, MismatchError

SETTINGS = ("observed", "unobserved", "fixed_unobserved")

# Directions: Up, Down, Left, Right as (drow, dcol)
DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))
DIRECTION_NAMES = ("up", "down", "left", "right")

# Observed-setting intensities live on the u8 lattice (value/255) so pixel
# round-trips are exact. Train and zero-shot ranges are disjoint.
TRAIN_INTENSITY_LEVELS = tuple(range(77, 217))                      # [0.30, 0.85]
ZEROSHOT_INTENSITY_LEVELS = tuple(range(13, 77)) + tuple(range(217, 256))

NUM_SHAPES = 5


@dataclass(frozen=True)
class PhysicsConfig:
    num_objects: int = 5
    grid_size: int = 5
    setting: str = "observed"
    palette_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigError("setting", f"unknown setting {self.setting!r}")
        if self.num_objects < 1:
            raise ConfigError("M", "need at least one object")
        if self.num_objects > self.grid_size**2:
            raise ConfigError("M", "more objects than grid cells")
        if self.setting != "observed" and self.palette_size < self.num_objects:
            raise ConfigError("palette", "palette must hold at least M colors")
        if self.setting == "fixed_unobserved" and self.num_objects > NUM_SHAPES:
            raise ConfigError("M", f"fixed shapes support at most {NUM_SHAPES} objects")

    def to_json(self):
        return {
            "env": "physics",
            "M": self.num_objects,
            "grid": self.grid_size,
            "setting": self.setting,
            "palette": self.palette_size,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            num_objects=obj["M"],
            grid_size=obj.get("grid", 5),
            setting=obj.get("setting", "observed"),
            palette_size=obj.get("palette", 8),
            seed=obj["seed"],
        )


@dataclass(frozen=True)
class PhysicsState:
    positions: tuple   # M (row, col) cells, pairwise distinct
    weights: tuple     # M distinct reals, hidden from observations
    colors: tuple      # intensities in [0,1] (observed) or palette indices
    shapes: tuple      # shape ids in 0..4

    def replace_positions(self, positions):
        return PhysicsState(tuple(positions), self.weights, self.colors, self.shapes)


@dataclass(frozen=True)
class PhysicsAction:
    rank: int       # 0 = heaviest object
    direction: int  # index into DIRECTIONS


def weight_order(weights):
    """Object indices sorted heaviest first."""
    return tuple(sorted(range(len(weights)), key=lambda i: -weights[i]))


def reset(config, episode_seed, intensity_range="train"):
    """Sample a fresh state: distinct cells plus per-setting colors/weights/shapes."""
    gen = rng.substream(episode_seed, rng.RESET)
    m, g = config.num_objects, config.grid_size
    cells = gen.choice(g * g, size=m, replace=False)
    positions = tuple((int(c) // g, int(c) % g) for c in cells)

    if config.setting == "observed":
        levels = TRAIN_INTENSITY_LEVELS if intensity_range == "train" else ZEROSHOT_INTENSITY_LEVELS
        picks = gen.choice(len(levels), size=m, replace=False)
        colors = tuple(levels[int(i)] / 255.0 for i in picks)
        order_key = colors
    else:
        picks = gen.choice(config.palette_size, size=m, replace=False)
        colors = tuple(int(i) for i in picks)
        order_key = colors

    # rank-based weights {M..1}: larger key (darker / later in palette) = heavier
    ascending = sorted(range(m), key=lambda i: order_key[i])
    weights = [0.0] * m
    for rank_from_lightest, idx in enumerate(ascending):
        weights[idx] = float(rank_from_lightest + 1)
    weights = tuple(weights)

    if config.setting == "fixed_unobserved":
        # k-th heaviest always wears shape k
        shapes = [0] * m
        for shape_id, idx in enumerate(weight_order(weights)):
            shapes[idx] = shape_id
        shapes = tuple(shapes)
    else:
        shapes = tuple(int(s) for s in gen.integers(0, NUM_SHAPES, size=m))

    return PhysicsState(positions, weights, colors, shapes)


def in_grid(cell, grid_size):
    return 0 <= cell[0] < grid_size and 0 <= cell[1] < grid_size


def step(state, action, grid_size):
    """Deterministic transition. At most the actor and one pushed block move."""
    order = weight_order(state.weights)
    if not 0 <= action.rank < len(order):
        raise ValueError(f"action rank {action.rank} out of range")
    actor = order[action.rank]
    drow, dcol = DIRECTIONS[action.direction]
    src = state.positions[actor]
    dest = (src[0] + drow, src[1] + dcol)
    if not in_grid(dest, grid_size):
        return state

    occupant = None
    for idx, pos in enumerate(state.positions):
        if pos == dest:
            occupant = idx
            break

    if occupant is None:
        positions = list(state.positions)
        positions[actor] = dest
        return state.replace_positions(positions)

    if state.weights[actor] < state.weights[occupant]:
        return state

    beyond = (dest[0] + drow, dest[1] + dcol)
    if not in_grid(beyond, grid_size) or beyond in state.positions:
        return state
    positions = list(state.positions)
    positions[occupant] = beyond
    positions[actor] = dest
    return state.replace_positions(positions)


def reward(state, target, grid_size):
    """Negative mean Manhattan distance to target cells, scaled to [-1, 0]."""
    if len(state.positions) != len(target.positions):
        raise MismatchError("states describe different object counts")
    m = len(state.positions)
    if m == 0:
        return 0.0
    span = 2 * (grid_size - 1)
    total = sum(
        abs(p[0] - q[0]) + abs(p[1] - q[1])
        for p, q in zip(state.positions, target.positions)
    )
    return -total / (m * span)


def success(state, target):
    if len(state.positions) != len(target.positions):
        raise MismatchError("states describe different object counts")
    return state.positions == target.positions


class PhysicsEnv:
    """Stateless dynamics behind the same env-facing surface as ChemistryEnv."""

    def __init__(self, config):
        self.config = config

    def reset(self, episode_seed, stream=rng.NOISE, intensity_range="train"):
        # stream accepted for interface parity; the dynamics are deterministic
        del stream
        return reset(self.config, episode_seed, intensity_range)

    def step(self, state, action):
        return step(state, action, self.config.grid_size)

    def action_space(self):
        """All actions, rank-major then direction."""
        return [
            PhysicsAction(rank, direction)
            for rank in range(self.config.num_objects)
            for direction in range(len(DIRECTIONS))
        ]

    def random_action(self, gen):
        return PhysicsAction(
            int(gen.integers(self.config.num_objects)),
            int(gen.integers(len(DIRECTIONS))),
        )

    def reward(self, state, target):
        return reward(state, target, self.config.grid_size)

    success = staticmethod(success)
