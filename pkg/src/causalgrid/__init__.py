"""Seedable interventional gridworld environments with causal evaluation tooling."""

__version__ = "0.1.0"

from .chemistry import ChemAction, ChemConfig, ChemState, ChemistryEnv, CptModel, build_cpt
from .graphs import GraphSpec, enumerate_all_dags, generate, max_chain_length, parse_graph_spec
from .physics import PhysicsAction, PhysicsConfig, PhysicsEnv, PhysicsState
from .scm import Dag, Perfect, Scm, ancestral_sample, descendants, topological_order

__all__ = [
    "ChemAction",
    "ChemConfig",
    "ChemState",
    "ChemistryEnv",
    "CptModel",
    "Dag",
    "GraphSpec",
    "Perfect",
    "PhysicsAction",
    "PhysicsConfig",
    "PhysicsEnv",
    "PhysicsState",
    "Scm",
    "ancestral_sample",
    "build_cpt",
    "descendants",
    "enumerate_all_dags",
    "generate",
    "max_chain_length",
    "parse_graph_spec",
    "topological_order",
]
