"""Deterministic substream derivation.

Every random draw in the package comes from a generator keyed by an
explicit tuple (seed, purpose, indices...). Two call sites that pass the
same key tuple get bit-identical streams, which is what makes the
"intervening on v leaves non-descendants of v untouched" checks exact
instead of statistical.
"""

import numpy as np

# Purpose tags for substream derivation. Fixed small ints; never reorder.
NOISE = 0      # per-node mechanism noise, keyed (seed, NOISE, node, step)
RESET = 1      # environment reset draws (positions, colors, shapes)
LAYOUT = 2     # chemistry object layout
ACTIONS = 3    # random action sequences for rollouts
TARGET = 4     # target-generating rollout noise
POLICY = 5     # policy rollout noise
PARAMS = 6     # conditional-distribution parameter draws
SPAWN = 7      # generic derived-seed draws

_U64 = np.uint64


def substream(seed, *key):
    """Return a fresh Generator for the given (seed, *key) tuple.

    All key parts must be non-negative integers.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])
    return np.random.Generator(np.random.PCG64(ss))


def node_uniform(seed, node, step):
    """Single uniform in [0, 1) from the hashed (seed, node, step) substream."""
    return substream(seed, NOISE, node, step).random()


def derive_seed(seed, *key):
    """Hash (seed, *key) down to a u64 usable as a fresh base seed."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])
    return int(ss.generate_state(1, _U64)[0])


def _mix(x):
    # splitmix64 finalizer; spreads base seeds before truncation
    x = (int(x) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


SPLIT_CODES = {"train": 0, "test": 1, "zeroshot": 2}


def episode_seed(base_seed, split, index):
    """Derive a u64 episode seed with structurally disjoint split domains.

    Layout: [2 bits split code | 30 bits mixed base seed | 32 bits index].
    Different splits of the same base seed can never collide.
    """
    if split not in SPLIT_CODES:
        raise ValueError(f"unknown split {split!r}")
    if not 0 <= index < 2**32:
        raise ValueError("episode index out of range")
    code = SPLIT_CODES[split]
    return (code << 62) | ((_mix(base_seed) & 0x3FFFFFFF) << 32) | index
