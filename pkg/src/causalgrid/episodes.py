"""Interventional episode datasets: rollout, binary serialization, loading.

On-disk layout is a directory holding ``manifest.json`` plus one blob per
tensor field. Every blob starts with the magic string ``CEL1``; integers
are little-endian throughout. See FORMAT.md for the byte-level contract.

Episodes carry a target state produced by ten random warm-up actions from
the initial state (on independent noise streams), which is what the
reward labels are measured against.
"""

import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .chemistry import ChemAction, ChemConfig, ChemState, ChemistryEnv
from .errors import ConfigError, CorruptionError, FormatError
from .physics import PhysicsAction, PhysicsConfig, PhysicsState, PhysicsEnv
from .render import Frame, render

MAGIC = b"CEL1"
FORMAT_VERSION = 1
TARGET_WARMUP_ACTIONS = 10

_DTYPE_CODES = {0: "<u1", 1: "<i8", 2: "<f4", 3: "<f8", 4: "<u8"}
_DTYPE_BY_NAME = {v: k for k, v in _DTYPE_CODES.items()}


def make_env(config):
    if isinstance(config, PhysicsConfig):
        return PhysicsEnv(config)
    if isinstance(config, ChemConfig):
        return ChemistryEnv(config)
    raise TypeError(f"unknown config type {type(config).__name__}")


def config_from_json(obj):
    kind = obj.get("env")
    if kind == "physics":
        return PhysicsConfig.from_json(obj)
    if kind == "chemistry":
        return ChemConfig.from_json(obj)
    raise ConfigError("env", f"expected 'physics' or 'chemistry', got {kind!r}")


@dataclass
class Episode:
    config: object
    split: str
    seed: int
    states: list = field(default_factory=list)    # length T+1
    actions: list = field(default_factory=list)   # length T
    rewards: list = field(default_factory=list)   # length T, float32-rounded
    target_state: object = None
    frames: list = None                           # length T+1 when rendered
    target_frame: object = None

    @property
    def steps(self):
        return len(self.actions)

    def __eq__(self, other):
        if not isinstance(other, Episode):
            return NotImplemented
        basic = (
            self.config == other.config
            and self.split == other.split
            and self.seed == other.seed
            and self.states == other.states
            and self.actions == other.actions
            and self.rewards == other.rewards
            and self.target_state == other.target_state
        )
        if not basic:
            return False
        if (self.frames is None) != (other.frames is None):
            return False
        if self.frames is not None:
            if len(self.frames) != len(other.frames):
                return False
            if any(a != b for a, b in zip(self.frames, other.frames)):
                return False
            if self.target_frame != other.target_frame:
                return False
        return True


def _intensity_range(config, split):
    if isinstance(config, PhysicsConfig) and config.setting == "observed" and split == "zeroshot":
        return "zeroshot"
    return "train"


def reset_env(env, config, split, episode_seed, stream=rng.NOISE):
    if isinstance(config, PhysicsConfig):
        return env.reset(episode_seed, stream=stream,
                         intensity_range=_intensity_range(config, split))
    return env.reset(episode_seed, stream=stream)


def rollout_episode(env, config, split, episode_seed, steps, include_obs=True):
    """Roll one episode with uniform random actions against a warm-up target."""
    # target: ten random actions on independent noise, then rewind to start
    target = reset_env(env, config, split, episode_seed, stream=rng.TARGET)
    tgen = rng.substream(episode_seed, rng.TARGET)
    for _ in range(TARGET_WARMUP_ACTIONS):
        target = env.step(target, env.random_action(tgen))

    state = reset_env(env, config, split, episode_seed, stream=rng.NOISE)
    agen = rng.substream(episode_seed, rng.ACTIONS)
    episode = Episode(config=config, split=split, seed=episode_seed,
                      states=[state], target_state=target)
    for _ in range(steps):
        action = env.random_action(agen)
        state = env.step(state, action)
        episode.actions.append(action)
        episode.states.append(state)
        episode.rewards.append(float(np.float32(env.reward(state, target))))
    if include_obs:
        episode.frames = [render(s, config) for s in episode.states]
        episode.target_frame = render(target, config)
    return episode


def _rollout_chunk(config, split, base_seed, indices, steps, include_obs):
    env = make_env(config)
    return [
        rollout_episode(env, config, split, rng.episode_seed(base_seed, split, i),
                        steps, include_obs)
        for i in indices
    ]


def rollout_dataset(config, episodes, steps, split, base_seed, include_obs=True, jobs=1):
    """All episodes in memory, ordered by index regardless of job count."""
    indices = list(range(episodes))
    if jobs <= 1 or episodes <= 1:
        return _rollout_chunk(config, split, base_seed, indices, steps, include_obs)
    chunks = [indices[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(_rollout_chunk, config, split, base_seed, chunk, steps, include_obs)
            for chunk in chunks
        ]
        results = [f.result() for f in futures]
    merged = {}
    for chunk, eps in zip(chunks, results):
        merged.update(zip(chunk, eps))
    return [merged[i] for i in indices]


def _dtype_code(dtype):
    # force the little-endian tag; 1-byte dtypes report '|' byte order
    return _DTYPE_BY_NAME["<" + np.dtype(dtype).str[1:]]


def write_blob(path, array):
    array = np.ascontiguousarray(array)
    code = _dtype_code(array.dtype)
    header = MAGIC + struct.pack("<BB", code, array.ndim)
    header += struct.pack(f"<{array.ndim}Q", *array.shape)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(array.astype(array.dtype.newbyteorder("<")).tobytes())
    os.replace(tmp, path)


def read_blob(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    code, ndim = struct.unpack_from("<BB", data, 4)
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    shape = struct.unpack_from(f"<{ndim}Q", data, 6)
    offset = 6 + 8 * ndim
    dtype = np.dtype(_DTYPE_CODES[code])
    expected = int(np.prod(shape)) * dtype.itemsize
    payload = data[offset:]
    if len(payload) != expected:
        raise CorruptionError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape)


def _pack_tensors(episodes, config):
    e = len(episodes)
    t = episodes[0].steps
    m = config.num_objects
    tensors = {
        "actions": np.array(
            [[_action_pair(a) for a in ep.actions] for ep in episodes], dtype=np.uint8
        ).reshape(e, t, 2),
        "rewards": np.array([ep.rewards for ep in episodes], dtype=np.float32),
        "seeds": np.array([ep.seed for ep in episodes], dtype=np.uint64),
    }
    if isinstance(config, PhysicsConfig):
        tensors["positions"] = np.array(
            [[s.positions for s in ep.states] for ep in episodes], dtype=np.uint8
        ).reshape(e, t + 1, m, 2)
        tensors["weights"] = np.array([ep.states[0].weights for ep in episodes], dtype=np.float32)
        if config.setting == "observed":
            tensors["color_levels"] = np.array(
                [[round(c * 255) for c in ep.states[0].colors] for ep in episodes], dtype=np.uint8
            )
        else:
            tensors["color_levels"] = np.array(
                [ep.states[0].colors for ep in episodes], dtype=np.uint8
            )
        tensors["shapes"] = np.array([ep.states[0].shapes for ep in episodes], dtype=np.uint8)
        tensors["target_positions"] = np.array(
            [ep.target_state.positions for ep in episodes], dtype=np.uint8
        )
    else:
        tensors["colors"] = np.array(
            [[s.colors for s in ep.states] for ep in episodes], dtype=np.uint8
        ).reshape(e, t + 1, m)
        tensors["positions"] = np.array(
            [ep.states[0].positions for ep in episodes], dtype=np.uint8
        )
        tensors["shapes"] = np.array([ep.states[0].shapes for ep in episodes], dtype=np.uint8)
        tensors["target_colors"] = np.array(
            [ep.target_state.colors for ep in episodes], dtype=np.uint8
        )
    if episodes[0].frames is not None:
        tensors["obs"] = np.stack(
            [np.stack([f.pixels for f in ep.frames]) for ep in episodes]
        ).astype(np.uint8)
        tensors["target_obs"] = np.stack(
            [ep.target_frame.pixels for ep in episodes]
        ).astype(np.uint8)
    return tensors


def _action_pair(action):
    if isinstance(action, PhysicsAction):
        return (action.rank, action.direction)
    return (action.node, action.color)


def generate_dataset(config, episodes, steps, split, base_seed, out_dir,
                     include_obs=True, jobs=1):
    """Roll and serialize a dataset; returns the output directory."""
    if split not in rng.SPLIT_CODES:
        raise ConfigError("split", f"unknown split {split!r}")
    eps = rollout_dataset(config, episodes, steps, split, base_seed,
                          include_obs=include_obs, jobs=jobs)
    os.makedirs(out_dir, exist_ok=True)
    tensors = _pack_tensors(eps, config)
    manifest = {
        "format_version": FORMAT_VERSION,
        "magic": MAGIC.decode(),
        "env": config.to_json(),
        "split": split,
        "episodes": episodes,
        "steps": steps,
        "base_seed": base_seed,
        "include_obs": bool(include_obs),
        "tensors": {},
    }
    for name in sorted(tensors):
        filename = f"{name}.bin"
        write_blob(os.path.join(out_dir, filename), tensors[name])
        manifest["tensors"][name] = {
            "file": filename,
            "dtype": _DTYPE_CODES[_dtype_code(tensors[name].dtype)],
            "shape": list(tensors[name].shape),
        }
    tmp = os.path.join(out_dir, "manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(out_dir, "manifest.json"))
    return out_dir


def load_dataset(path):
    """Lossless inverse of generate_dataset; returns a list of Episodes."""
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{path}: no manifest.json") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: not valid JSON ({exc})") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version {manifest.get('format_version')!r}"
        )
    config = config_from_json(manifest["env"])
    tensors = {}
    for name, meta in manifest["tensors"].items():
        arr = read_blob(os.path.join(path, meta["file"]))
        if list(arr.shape) != meta["shape"]:
            raise CorruptionError(
                f"{name}: manifest shape {meta['shape']} != blob shape {list(arr.shape)}"
            )
        tensors[name] = arr

    e, t = manifest["episodes"], manifest["steps"]
    split = manifest["split"]
    expect = {"actions": (e, t, 2), "rewards": (e, t), "seeds": (e,)}
    for name, shape in expect.items():
        if name not in tensors:
            raise CorruptionError(f"missing tensor {name}")
        if tensors[name].shape != shape:
            raise CorruptionError(f"{name}: expected shape {shape}, got {tensors[name].shape}")

    episodes = []
    for i in range(e):
        ep = Episode(config=config, split=split, seed=int(tensors["seeds"][i]))
        if isinstance(config, PhysicsConfig):
            if config.setting == "observed":
                colors = tuple(int(v) / 255.0 for v in tensors["color_levels"][i])
            else:
                colors = tuple(int(v) for v in tensors["color_levels"][i])
            weights = tuple(float(w) for w in tensors["weights"][i])
            shapes = tuple(int(s) for s in tensors["shapes"][i])
            for step_idx in range(t + 1):
                positions = tuple(map(tuple, tensors["positions"][i][step_idx].tolist()))
                ep.states.append(PhysicsState(positions, weights, colors, shapes))
            ep.target_state = PhysicsState(
                tuple(map(tuple, tensors["target_positions"][i].tolist())),
                weights, colors, shapes,
            )
            ep.actions = [
                PhysicsAction(int(a), int(b)) for a, b in tensors["actions"][i].tolist()
            ]
        else:
            positions = tuple(map(tuple, tensors["positions"][i].tolist()))
            shapes = tuple(int(s) for s in tensors["shapes"][i])
            for step_idx in range(t + 1):
                colors = tuple(int(c) for c in tensors["colors"][i][step_idx])
                ep.states.append(ChemState(colors, positions, shapes))
            ep.target_state = ChemState(
                tuple(int(c) for c in tensors["target_colors"][i]), positions, shapes
            )
            ep.actions = [
                ChemAction(int(a), int(b)) for a, b in tensors["actions"][i].tolist()
            ]
        ep.rewards = [float(r) for r in tensors["rewards"][i]]
        if manifest["include_obs"]:
            ep.frames = [
                Frame(np.ascontiguousarray(tensors["obs"][i][k])) for k in range(t + 1)
            ]
            ep.target_frame = Frame(np.ascontiguousarray(tensors["target_obs"][i]))
        episodes.append(ep)
    return episodes


def replay_episode(episode):
    """Re-step the env from state[0]; True iff states and rewards reproduce."""
    env = make_env(episode.config)
    reset_env(env, episode.config, episode.split, episode.seed, stream=rng.NOISE)
    state = episode.states[0]
    for idx, action in enumerate(episode.actions):
        state = env.step(state, action)
        if state != episode.states[idx + 1]:
            return False
        replayed = float(np.float32(env.reward(state, episode.target_state)))
        if replayed != episode.rewards[idx]:
            return False
    return True
