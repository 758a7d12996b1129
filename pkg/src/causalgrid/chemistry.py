"""Color-transition environment over an arbitrary DAG.

Each object carries a categorical color. An action clamps one object to a
chosen color; every descendant then resamples its color, in topological
order, from a conditional distribution given its parents' updated colors.
Non-descendants keep their colors bit-for-bit.

The conditional distributions are realized by a small random map: root
nodes hold a raw logit vector, non-roots push the concatenated one-hot
parent colors through one 32-wide tanh layer to K logits. All parameters
are N(0, sigma^2) draws from a seeded stream, so sigma acts as a skewness
dial: near 0 every row is uniform, large values make rows near one-hot.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError
from .graphs import GraphSpec, generate, parse_graph_spec
from .scm import descendants

HIDDEN_WIDTH = 32
TABLE_LIMIT = 4096  # max conditions for materializing a node's full table


@dataclass(frozen=True)
class ChemConfig:
    num_objects: int = 5
    num_colors: int = 5
    graph: GraphSpec = field(default_factory=lambda: GraphSpec("chain", 5))
    skewness: float = 10.0
    layout: str = "static"
    grid_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.num_objects < 1:
            raise ConfigError("M", "need at least one object")
        if self.num_colors < 2:
            raise ConfigError("K", "need at least two colors")
        if self.layout not in ("static", "dynamic"):
            raise ConfigError("layout", f"unknown layout {self.layout!r}")
        if self.graph.n != self.num_objects:
            raise ConfigError("graph", "graph size must equal the object count")
        if self.num_objects > self.grid_size**2:
            raise ConfigError("grid", "more objects than grid cells")
        if self.skewness <= 0:
            raise ConfigError("skewness", "must be > 0")

    def to_json(self):
        return {
            "env": "chemistry",
            "M": self.num_objects,
            "K": self.num_colors,
            "graph": self.graph.to_string(),
            "skewness": self.skewness,
            "layout": self.layout,
            "grid": self.grid_size,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            num_objects=obj["M"],
            num_colors=obj["K"],
            graph=parse_graph_spec(obj["graph"]),
            skewness=obj.get("skewness", 10.0),
            layout=obj.get("layout", "static"),
            grid_size=obj.get("grid", 5),
            seed=obj["seed"],
        )


@dataclass(frozen=True)
class ChemState:
    colors: tuple
    positions: tuple
    shapes: tuple

    def replace_colors(self, colors):
        return ChemState(tuple(colors), self.positions, self.shapes)


@dataclass(frozen=True)
class ChemAction:
    node: int
    color: int


class CptModel:
    """Per-node conditional color distributions, deterministic in (dag, K, sigma, seed)."""

    def __init__(self, dag, num_colors, skewness, seed):
        self.dag = dag
        self.num_colors = num_colors
        self.skewness = skewness
        self.seed = seed
        self._params = []
        for node in range(dag.n):
            gen = rng.substream(seed, rng.PARAMS, node)
            p = len(dag.parents[node])
            if p == 0:
                logits = gen.normal(0.0, skewness, size=num_colors)
                self._params.append(("root", logits))
            else:
                in_dim = num_colors * p
                w1 = gen.normal(0.0, skewness, size=(HIDDEN_WIDTH, in_dim))
                b1 = gen.normal(0.0, skewness, size=HIDDEN_WIDTH)
                w2 = gen.normal(0.0, skewness, size=(num_colors, HIDDEN_WIDTH))
                b2 = gen.normal(0.0, skewness, size=num_colors)
                self._params.append(("mlp", (w1, b1, w2, b2)))
        self._rows = {}

    def row(self, node, parent_colors=()):
        """Probability vector over colors for one parent assignment."""
        key = (node, tuple(int(c) for c in parent_colors))
        cached = self._rows.get(key)
        if cached is not None:
            return cached
        kind, params = self._params[node]
        if kind == "root":
            logits = params
        else:
            w1, b1, w2, b2 = params
            onehot = np.zeros(w1.shape[1])
            for slot, color in enumerate(key[1]):
                onehot[slot * self.num_colors + color] = 1.0
            hidden = np.tanh(w1 @ onehot + b1)
            logits = w2 @ hidden + b2
        shifted = logits - logits.max()
        probs = np.exp(shifted)
        probs /= probs.sum()
        probs.flags.writeable = False
        self._rows[key] = probs
        return probs

    def sample(self, node, parent_colors, u):
        """Inverse-CDF draw from the node's row using a single uniform."""
        cum = np.cumsum(self.row(node, parent_colors))
        return min(int(np.searchsorted(cum, u, side="right")), self.num_colors - 1)

    def argmax(self, node, parent_colors=()):
        return int(np.argmax(self.row(node, parent_colors)))

    def mechanism(self, node):
        return lambda parent_colors, u: self.sample(node, parent_colors, u)

    def mechanisms(self):
        return tuple(self.mechanism(node) for node in range(self.dag.n))

    def conditions(self, node):
        """All parent assignments for node, in row-major (first parent slowest) order."""
        p = len(self.dag.parents[node])
        if self.num_colors**p > TABLE_LIMIT:
            raise ValueError(f"node {node} has too many conditions to enumerate")
        if p == 0:
            return [()]
        grids = np.indices((self.num_colors,) * p).reshape(p, -1).T
        return [tuple(int(c) for c in row) for row in grids]

    def table(self, node):
        """Dense table, shape (K,)*num_parents + (K,)."""
        p = len(self.dag.parents[node])
        out = np.zeros((self.num_colors,) * p + (self.num_colors,))
        for cond in self.conditions(node):
            out[cond] = self.row(node, cond)
        return out

    def to_json(self):
        """Inspection/golden-file form: per node, per condition, the probability row."""
        nodes = []
        for node in range(self.dag.n):
            rows = [
                {"parents": list(cond), "probs": [float(x) for x in self.row(node, cond)]}
                for cond in self.conditions(node)
            ]
            nodes.append({"node": node, "parent_ids": list(self.dag.parents[node]), "rows": rows})
        return {
            "K": self.num_colors,
            "skewness": self.skewness,
            "seed": self.seed,
            "dag": self.dag.to_json(),
            "nodes": nodes,
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def build_cpt(dag, num_colors, skewness, seed):
    if skewness <= 0:
        raise ValueError("skewness must be > 0")
    return CptModel(dag, num_colors, skewness, seed)


def sample_initial_colors(cpt, noise_seed, step=0):
    """Ancestral sample of all node colors (episode reset)."""
    dag = cpt.dag
    colors = [0] * dag.n
    for node in dag.topo:
        parent_colors = tuple(colors[p] for p in dag.parents[node])
        colors[node] = cpt.sample(node, parent_colors, rng.node_uniform(noise_seed, node, step))
    return colors


def intervene(state, cpt, dag, action, noise_seed, step):
    """Clamp the action node and resample its descendants in topological order.

    The clamped node ignores its own conditional distribution; descendants
    draw from theirs conditioned on the already-updated parent colors.
    Everything else (including positions and shapes) is untouched.
    """
    if not 0 <= action.node < dag.n:
        raise ValueError(f"action node {action.node} out of range")
    if not 0 <= action.color < cpt.num_colors:
        raise ValueError(f"action color {action.color} out of range")
    colors = list(state.colors)
    colors[action.node] = action.color
    below = descendants(dag, action.node)
    for node in dag.topo:
        if node not in below:
            continue
        parent_colors = tuple(colors[p] for p in dag.parents[node])
        colors[node] = cpt.sample(node, parent_colors, rng.node_uniform(noise_seed, node, step))
    return state.replace_colors(colors)


def reward(state, target):
    """Fraction of objects whose color matches the target."""
    m = len(state.colors)
    matches = sum(1 for a, b in zip(state.colors, target.colors) if a == b)
    return matches / m


def success(state, target):
    return reward(state, target) == 1.0


def _draw_positions(gen, num_objects, grid_size):
    cells = gen.choice(grid_size * grid_size, size=num_objects, replace=False)
    return tuple((int(c) // grid_size, int(c) % grid_size) for c in cells)


def static_layout(config):
    """Object cells shared by every episode under the static layout."""
    gen = rng.substream(config.seed, rng.LAYOUT)
    return _draw_positions(gen, config.num_objects, config.grid_size)


class ChemistryEnv:
    """Stateful wrapper owning the step counter for one episode at a time."""

    def __init__(self, config):
        self.config = config
        self.dag = generate(config.graph)
        self.cpt = build_cpt(self.dag, config.num_colors, config.skewness, config.seed)
        self._static_positions = static_layout(config) if config.layout == "static" else None
        self._noise_seed = None
        self._t = 0

    def reset(self, episode_seed, stream=rng.NOISE):
        # step noise follows the requested stream, but the initial colors
        # always come from the base stream: target/policy rollouts replay
        # the same start state with independent transition noise
        self._noise_seed = rng.derive_seed(episode_seed, stream)
        self._t = 0
        if self.config.layout == "static":
            positions = self._static_positions
        else:
            gen = rng.substream(episode_seed, rng.LAYOUT)
            positions = _draw_positions(gen, self.config.num_objects, self.config.grid_size)
        colors = sample_initial_colors(self.cpt, rng.derive_seed(episode_seed, rng.NOISE), step=0)
        shapes = tuple(i % 5 for i in range(self.config.num_objects))
        return ChemState(tuple(colors), positions, shapes)

    def step(self, state, action):
        self._t += 1
        return intervene(state, self.cpt, self.dag, action, self._noise_seed, self._t)

    def action_space(self):
        """All actions, node-major then color."""
        return [
            ChemAction(node, color)
            for node in range(self.config.num_objects)
            for color in range(self.config.num_colors)
        ]

    def random_action(self, gen):
        return ChemAction(
            int(gen.integers(self.config.num_objects)),
            int(gen.integers(self.config.num_colors)),
        )

    reward = staticmethod(reward)
    success = staticmethod(success)
