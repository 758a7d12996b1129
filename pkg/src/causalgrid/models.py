"""Symbolic world models spanning the structural spectrum.

Three families, all operating on exact symbolic encodings so that what is
being compared is the transition structure, not representation learning:

  oracle    delegates to the true dynamics (argmax of the true conditional
            distribution for chemistry), the upper-bound reference
  tabular   full-parent conditional tables keyed on a hypothesis graph
            (chemistry) or on action rank and local occupancy (physics)
  pairwise  per-node-pair factors aggregated by product of experts; can
            only express pairwise interactions by construction

Predictions are one-step argmax decodes; ties break to the lowest index.
"""

from collections import defaultdict

import numpy as np

from .chemistry import ChemConfig, ChemistryEnv
from .errors import ShapeError
from .metrics import RankingBatch, hits_at_1, mrr, reconstruction_error
from .physics import DIRECTIONS, PhysicsConfig, PhysicsEnv, in_grid
from .render import render
from .scm import descendants

PSEUDO_COUNT = 1.0  # Laplace smoothing everywhere


def embed_state(state, config):
    """Concatenated one-hot encoding per object attribute that transitions."""
    if isinstance(config, ChemConfig):
        out = np.zeros((config.num_objects, config.num_colors))
        for i, c in enumerate(state.colors):
            out[i, c] = 1.0
        return out.ravel()
    g = config.grid_size
    out = np.zeros((config.num_objects, g * g))
    for i, (r, c) in enumerate(state.positions):
        out[i, r * g + c] = 1.0
    return out.ravel()


class OracleModel:
    """True dynamics; chemistry resamples collapse to the conditional mode."""

    def __init__(self, config):
        self.config = config
        self._env = ChemistryEnv(config) if isinstance(config, ChemConfig) else PhysicsEnv(config)
        if isinstance(config, ChemConfig):
            self._dag = self._env.dag
            self._cpt = self._env.cpt

    def fit(self, episodes):
        return self

    def predict(self, state, action):
        if isinstance(self.config, PhysicsConfig):
            return self._env.step(state, action)
        colors = list(state.colors)
        colors[action.node] = action.color
        below = descendants(self._dag, action.node)
        for node in self._dag.topo:
            if node in below:
                parent_colors = tuple(colors[p] for p in self._dag.parents[node])
                colors[node] = self._cpt.argmax(node, parent_colors)
        return state.replace_colors(colors)

    def embed(self, state):
        return embed_state(state, self.config)


class TabularChemistryModel:
    """Full-parent conditional tables under a hypothesis graph.

    Knows the intervention semantics: the clamped node takes the action
    color, hypothesized descendants redraw (argmax) given updated parents,
    everything else holds still. Counts come from reset draws (every node
    is freshly sampled) and from transition resamples of hypothesized
    descendants, keyed by the parents' post-step colors.
    """

    def __init__(self, config, dag):
        if dag.n != config.num_objects:
            raise ShapeError(f"dag has {dag.n} nodes but env has {config.num_objects} objects")
        self.config = config
        self.dag = dag
        self._counts = [defaultdict(lambda: np.zeros(config.num_colors)) for _ in range(dag.n)]

    def fit(self, episodes):
        for ep in episodes:
            if not isinstance(ep.config, ChemConfig):
                raise ShapeError("chemistry model fitted on a non-chemistry dataset")
            if ep.config.num_objects != self.dag.n:
                raise ShapeError("dataset object count does not match the hypothesis graph")
            first = ep.states[0]
            for node in range(self.dag.n):
                cond = tuple(first.colors[p] for p in self.dag.parents[node])
                self._counts[node][cond][first.colors[node]] += 1
            for t, action in enumerate(ep.actions):
                after = ep.states[t + 1]
                for node in descendants(self.dag, action.node):
                    cond = tuple(after.colors[p] for p in self.dag.parents[node])
                    self._counts[node][cond][after.colors[node]] += 1
        return self

    def row(self, node, cond):
        k = self.config.num_colors
        counts = self._counts[node].get(tuple(cond))
        if counts is None:
            counts = np.zeros(k)
        return (counts + PSEUDO_COUNT) / (counts.sum() + PSEUDO_COUNT * k)

    def predict(self, state, action):
        colors = list(state.colors)
        colors[action.node] = action.color
        below = descendants(self.dag, action.node)
        for node in self.dag.topo:
            if node in below:
                cond = tuple(colors[p] for p in self.dag.parents[node])
                colors[node] = int(np.argmax(self.row(node, cond)))
        return state.replace_colors(colors)

    def embed(self, state):
        return embed_state(state, self.config)

    def to_json(self):
        nodes = []
        for node in range(self.dag.n):
            rows = [
                {"parents": list(cond), "probs": [float(x) for x in self.row(node, cond)]}
                for cond in sorted(self._counts[node])
            ]
            nodes.append({"node": node, "parent_ids": list(self.dag.parents[node]), "rows": rows})
        return {"kind": "tabular", "dag": self.dag.to_json(), "nodes": nodes}


class PairwiseChemistryModel:
    """One factor per ordered node pair, combined by product of experts.

    Factor (i, j) predicts node i's next color from the current colors of
    i and j plus the action as far as it touches the pair: one slot says
    whether i itself was clamped (and to what), one slot says the same for
    j. An action elsewhere is invisible to the factor, mirroring a single
    round of relational message passing: clamp effects propagate one hop
    per factor, and anything requiring the jointly-updated values of two
    or more other nodes is outside the hypothesis space.
    """

    NO_CLAMP = 0  # clamp slots hold 0 (untouched) or 1 + color

    def __init__(self, config):
        self.config = config
        m, k = config.num_objects, config.num_colors
        # (i, j, self_clamp, sender_clamp, s_i, s_j) -> counts over s'_i
        self._counts = np.zeros((m, m, k + 1, k + 1, k, k, k))

    @staticmethod
    def _clamp_slot(action, node):
        return 1 + action.color if action.node == node else 0

    def fit(self, episodes):
        m = self.config.num_objects
        actions_v, actions_c, before, after = [], [], [], []
        for ep in episodes:
            if not isinstance(ep.config, ChemConfig):
                raise ShapeError("chemistry model fitted on a non-chemistry dataset")
            if ep.config.num_objects != m:
                raise ShapeError("dataset object count does not match the model")
            for t, action in enumerate(ep.actions):
                actions_v.append(action.node)
                actions_c.append(action.color)
                before.append(ep.states[t].colors)
                after.append(ep.states[t + 1].colors)
        if not actions_v:
            return self
        av = np.array(actions_v)
        ac = np.array(actions_c)
        s = np.array(before)
        ns = np.array(after)
        for i in range(m):
            self_slot = np.where(av == i, 1 + ac, 0)
            for j in range(m):
                if i == j:
                    continue
                sender_slot = np.where(av == j, 1 + ac, 0)
                np.add.at(
                    self._counts[i, j],
                    (self_slot, sender_slot, s[:, i], s[:, j], ns[:, i]),
                    1.0,
                )
        return self

    def predict(self, state, action):
        """Renormalized product of the pair-factor conditionals per node."""
        m, k = self.config.num_objects, self.config.num_colors
        colors = list(state.colors)
        new = list(colors)
        for i in range(m):
            self_slot = self._clamp_slot(action, i)
            score = np.zeros(k)
            for j in range(m):
                if j == i:
                    continue
                sender_slot = self._clamp_slot(action, j)
                counts = self._counts[i, j, self_slot, sender_slot, colors[i], colors[j]]
                probs = (counts + PSEUDO_COUNT) / (counts.sum() + PSEUDO_COUNT * k)
                score += np.log(probs)
            new[i] = int(np.argmax(score))
        return state.replace_colors(new)

    def embed(self, state):
        return embed_state(state, self.config)

    def to_json(self):
        seen = np.argwhere(self._counts > 0)
        entries = [
            {"index": [int(x) for x in idx], "count": float(self._counts[tuple(idx)])}
            for idx in seen
        ]
        return {"kind": "pairwise", "entries": entries}


# ---------------------------------------------------------------------------
# physics


def _intensity_ranks(colors):
    """Per-episode rank of each object by descending intensity (0 = darkest)."""
    order = sorted(range(len(colors)), key=lambda i: -colors[i])
    ranks = [0] * len(colors)
    for position, idx in enumerate(order):
        ranks[idx] = position
    return ranks


class PhysicsTabularModel:
    """Order-based block-pushing learner.

    Two learned pieces: (1) which object an action rank addresses, learned
    from observed movers (intensity ranks in the observed setting so the
    rule transfers to novel intensities; discrete color ids otherwise),
    and (2) an outcome table keyed on (rank, direction, destination
    occupancy, cell beyond), where the destination occupant is described
    by its estimated rank. Unseen keys predict no movement.
    """

    def __init__(self, config):
        self.config = config
        m = config.num_objects
        self._rank_votes = defaultdict(lambda: np.zeros(m))  # feature -> votes per rank
        self._color_scores = defaultdict(list)               # color id -> heaviness samples
        self._outcome = defaultdict(lambda: np.zeros(3))     # key -> stay/move/push counts

    # -- identity -----------------------------------------------------------

    def _features(self, state):
        if self.config.setting == "observed":
            return _intensity_ranks(state.colors)
        return list(state.colors)

    def _estimated_order(self, state):
        """Object indices ordered by estimated rank (0 = heaviest)."""
        m = self.config.num_objects
        feats = self._features(state)
        if self.config.setting == "observed":
            assigned = {}
            for k in range(m):
                votes = self._rank_votes
                best, best_votes = None, -1.0
                for feat in range(m):
                    v = votes[feat][k] if feat in votes else 0.0
                    if v > best_votes:
                        best, best_votes = feat, v
                # untrained ranks fall back to the canonical intensity order
                assigned[k] = best if best_votes > 0 else k
            by_feat = {feat: idx for idx, feat in enumerate(feats)}
            return [by_feat[assigned[k]] for k in range(m)]
        scores = {}
        for idx, color in enumerate(feats):
            samples = self._color_scores.get(color)
            scores[idx] = (np.mean(samples) if samples else -1.0, -color)
        return sorted(range(m), key=lambda i: scores[i], reverse=True)

    def _record_identity(self, state, rank, actor):
        m = self.config.num_objects
        feats = self._features(state)
        if self.config.setting == "observed":
            self._rank_votes[feats[actor]][rank] += 1
        else:
            self._color_scores[feats[actor]].append(float(m - 1 - rank))

    # -- outcome ------------------------------------------------------------

    def _situation(self, state, action, order):
        """(key, actor, occupant, dest, beyond) describing the local pattern."""
        g = self.config.grid_size
        actor = order[action.rank]
        drow, dcol = DIRECTIONS[action.direction]
        src = state.positions[actor]
        dest = (src[0] + drow, src[1] + dcol)
        if not in_grid(dest, g):
            return (action.rank, action.direction, "off", "na"), actor, None, dest, None
        occupant = None
        for idx, pos in enumerate(state.positions):
            if pos == dest:
                occupant = idx
                break
        if occupant is None:
            return (action.rank, action.direction, "empty", "na"), actor, None, dest, None
        beyond = (dest[0] + drow, dest[1] + dcol)
        if not in_grid(beyond, g):
            beyond_kind = "off"
        elif beyond in state.positions:
            beyond_kind = "occupied"
        else:
            beyond_kind = "empty"
        occupant_rank = order.index(occupant)
        key = (action.rank, action.direction, ("obj", occupant_rank), beyond_kind)
        return key, actor, occupant, dest, beyond

    def fit(self, episodes):
        for ep in episodes:
            if not isinstance(ep.config, PhysicsConfig):
                raise ShapeError("physics model fitted on a non-physics dataset")
        # pass 1: identification evidence from transitions where something moved
        for ep in episodes:
            for t, action in enumerate(ep.actions):
                before, after = ep.states[t], ep.states[t + 1]
                movers = [
                    i for i in range(len(before.positions))
                    if before.positions[i] != after.positions[i]
                ]
                if len(movers) == 1:
                    self._record_identity(before, action.rank, movers[0])
                elif len(movers) == 2:
                    a, b = movers
                    actor = a if after.positions[a] == before.positions[b] else b
                    self._record_identity(before, action.rank, actor)
        # pass 2: outcome evidence keyed through the learned identity map
        for ep in episodes:
            for t, action in enumerate(ep.actions):
                before, after = ep.states[t], ep.states[t + 1]
                order = self._estimated_order(before)
                key, _, _, _, _ = self._situation(before, action, order)
                moved = sum(
                    before.positions[i] != after.positions[i]
                    for i in range(len(before.positions))
                )
                self._outcome[key][min(moved, 2)] += 1
        return self

    def predict(self, state, action):
        order = self._estimated_order(state)
        key, actor, occupant, dest, beyond = self._situation(state, action, order)
        counts = self._outcome.get(key)
        outcome = int(np.argmax(counts)) if counts is not None and counts.sum() > 0 else 0
        if outcome == 0:
            return state
        if outcome == 1:
            if occupant is not None or not in_grid(dest, self.config.grid_size):
                return state
            positions = list(state.positions)
            positions[actor] = dest
            return state.replace_positions(positions)
        if occupant is None or beyond is None or beyond in state.positions:
            return state
        if not in_grid(beyond, self.config.grid_size):
            return state
        positions = list(state.positions)
        positions[occupant] = beyond
        positions[actor] = dest
        return state.replace_positions(positions)

    def embed(self, state):
        return embed_state(state, self.config)

    def to_json(self):
        outcome = {
            repr(key): [float(x) for x in counts] for key, counts in sorted(
                self._outcome.items(), key=lambda kv: repr(kv[0])
            )
        }
        return {"kind": "physics_tabular", "outcome": outcome}


# ---------------------------------------------------------------------------
# front doors


def oracle_model(config):
    return OracleModel(config)


def fit_tabular(episodes, dag):
    """Count-based maximum likelihood under a hypothesis graph."""
    if not episodes:
        raise ShapeError("empty dataset")
    config = episodes[0].config
    if isinstance(config, ChemConfig):
        return TabularChemistryModel(config, dag).fit(episodes)
    if dag is not None and dag.n != config.num_objects:
        raise ShapeError(f"dag has {dag.n} nodes but env has {config.num_objects} objects")
    return PhysicsTabularModel(config).fit(episodes)


def fit_pairwise(episodes):
    if not episodes:
        raise ShapeError("empty dataset")
    config = episodes[0].config
    if not isinstance(config, ChemConfig):
        raise ShapeError("pairwise model is defined for chemistry datasets")
    return PairwiseChemistryModel(config).fit(episodes)


def predict_k(model, state, actions):
    """k-fold composition of one-step argmax predictions; k=0 is identity."""
    for action in actions:
        state = model.predict(state, action)
    return state


def rank_eval(model, episodes, ks=(1, 5, 10), include_recon=False):
    """H@1 / MRR (and optionally reconstruction BCE) at each horizon."""
    config = episodes[0].config
    report = {"h1": {}, "mrr": {}}
    if include_recon:
        report["recon"] = {}
    for k in ks:
        predicted, true = [], []
        pred_states, true_states = [], []
        for ep in episodes:
            for t in range(ep.steps - k + 1):
                ps = predict_k(model, ep.states[t], ep.actions[t:t + k])
                ts = ep.states[t + k]
                predicted.append(model.embed(ps))
                true.append(model.embed(ts))
                if include_recon:
                    pred_states.append(ps)
                    true_states.append(ts)
        if not predicted:
            raise ValueError(f"no samples for horizon {k}; episodes too short")
        batch = RankingBatch(np.array(predicted), np.array(true))
        report["h1"][str(k)] = hits_at_1(batch)
        report["mrr"][str(k)] = mrr(batch)
        if include_recon:
            pf = np.stack([render(s, config).pixels for s in pred_states])
            tf = np.stack([render(s, config).pixels for s in true_states])
            report["recon"][str(k)] = reconstruction_error(pf, tf)
    return report
