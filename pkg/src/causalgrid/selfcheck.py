"""Fast invariant suite on tiny instances, runnable without pytest."""

import tempfile

import numpy as np

from . import rng
from .chemistry import ChemAction, ChemConfig, ChemistryEnv, build_cpt, intervene
from .episodes import generate_dataset, load_dataset, rollout_dataset
from .graphs import GraphSpec, enumerate_all_dags, generate
from .metrics import RankingBatch, hits_at_1, mrr
from .physics import PhysicsAction, PhysicsConfig, reset, step
from .render import canonical_order, decode_oracle, render
from .scm import Perfect, Scm, ancestral_sample, descendants


def check_topological_order():
    for seed in range(5):
        dag = generate(GraphSpec("random", 6, edge_prob=0.5, seed=seed))
        pos = {node: i for i, node in enumerate(dag.topo)}
        for parent, child in dag.edges():
            assert pos[parent] < pos[child]


def check_intervention_locality():
    for seed in range(20):
        dag = generate(GraphSpec("random", 5, edge_prob=0.5, seed=seed))
        cpt = build_cpt(dag, 4, 3.0, seed)
        scm = Scm(dag, cpt.mechanisms(), noise_seed=seed * 7 + 1)
        node = seed % dag.n
        plain = ancestral_sample(scm, None, step=seed)
        forced = ancestral_sample(scm, Perfect(node, 2), step=seed)
        assert forced[node] == 2
        below = descendants(dag, node)
        for i in range(dag.n):
            if i != node and i not in below:
                assert plain[i] == forced[i]


def check_dag_enumeration():
    assert sum(1 for _ in enumerate_all_dags(3)) == 25


def check_physics_step():
    config = PhysicsConfig(num_objects=4, grid_size=4, setting="observed", seed=1)
    for seed in range(30):
        state = reset(config, seed)
        action = PhysicsAction(seed % 4, (seed // 4) % 4)
        after = step(state, action, config.grid_size)
        assert len(set(after.positions)) == len(after.positions)
        moved = sum(a != b for a, b in zip(state.positions, after.positions))
        assert moved <= 2


def check_chemistry_locality():
    config = ChemConfig(num_objects=4, num_colors=4, graph=GraphSpec("jungle", 4), seed=5)
    env = ChemistryEnv(config)
    state = env.reset(11)
    after = intervene(state, env.cpt, env.dag, ChemAction(1, 3), rng.derive_seed(11, 0), 1)
    below = descendants(env.dag, 1)
    assert after.colors[1] == 3
    for i in range(4):
        if i != 1 and i not in below:
            assert after.colors[i] == state.colors[i]


def check_render_roundtrip():
    pconfig = PhysicsConfig(num_objects=3, grid_size=5, setting="unobserved", palette_size=6, seed=2)
    for seed in range(5):
        state = reset(pconfig, seed)
        assert decode_oracle(render(state, pconfig), pconfig) == canonical_order(state)
    cconfig = ChemConfig(num_objects=3, num_colors=4, graph=GraphSpec("chain", 3), seed=2)
    env = ChemistryEnv(cconfig)
    for seed in range(5):
        state = env.reset(seed)
        assert decode_oracle(render(state, cconfig), cconfig) == state


def check_metrics():
    r = np.array([[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    batch = RankingBatch(r, r)
    assert hits_at_1(batch) == 1.0 and mrr(batch) == 1.0
    gen = np.random.default_rng(0)
    for _ in range(10):
        batch = RankingBatch(gen.normal(size=(8, 3)), gen.normal(size=(8, 3)))
        assert hits_at_1(batch) <= mrr(batch) + 1e-12


def check_dataset_roundtrip():
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="observed", seed=5)
    expected = rollout_dataset(config, 2, 4, "train", 3)
    with tempfile.TemporaryDirectory() as tmp:
        generate_dataset(config, 2, 4, "train", 3, tmp)
        assert load_dataset(tmp) == expected


CHECKS = [
    check_topological_order,
    check_intervention_locality,
    check_dag_enumeration,
    check_physics_step,
    check_chemistry_locality,
    check_render_roundtrip,
    check_metrics,
    check_dataset_roundtrip,
]


def run_selfcheck(verbose=False):
    """Run every check; returns the number of failures."""
    import sys

    failures = 0
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            check()
        except Exception as exc:  # noqa: BLE001
            failures += 1
            if verbose:
                print(f"FAIL {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        else:
            if verbose:
                print(f"ok {name}", file=sys.stderr)
    return failures
