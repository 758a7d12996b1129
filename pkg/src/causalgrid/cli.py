"""Command-line entry point.

Reports go to stdout as JSON; diagnostics go to stderr, so output can be
piped. Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 internal error. Every data-producing subcommand takes an explicit seed;
nothing is ever seeded from the clock.
"""

import argparse
import json
import os
import sys

from .chemistry import ChemConfig
from .discovery import discover, discover_physics_order, score_graph
from .episodes import config_from_json, generate_dataset, load_dataset, make_env, reset_env
from .errors import (
    ConfigError,
    CorruptionError,
    CycleError,
    FormatError,
    InsufficientData,
    ShapeError,
    SizeError,
)
from .graphs import generate as generate_graph
from .metrics import shd
from .models import fit_pairwise, fit_tabular, oracle_model, rank_eval
from .physics import PhysicsConfig
from .planner import EvalProtocol, evaluate_rl, fit_reward_predictor, true_reward_fn
from .render import render
from . import rng


def _log(message):
    print(message, file=sys.stderr)


def _emit(payload):
    print(json.dumps(payload, indent=2, sort_keys=True))


def load_config(text):
    """Parse an env config from inline JSON or a file path."""
    if os.path.exists(text):
        try:
            with open(text) as fh:
                raw = fh.read()
        except OSError as exc:
            raise FormatError(f"cannot read config file {text}: {exc}") from exc
    else:
        raw = text
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config", "expected a JSON object")
    try:
        return config_from_json(obj)
    except KeyError as exc:
        raise ConfigError(exc.args[0], "missing required field") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from exc


def _parse_ks(text):
    return tuple(int(part) for part in text.split(","))


def _load_model(name, eval_config, train_dir):
    if name == "oracle":
        return oracle_model(eval_config)
    if train_dir is None:
        raise ConfigError("train", f"model {name!r} needs --train with a training dataset")
    _log(f"loading training data from {train_dir}")
    train = load_dataset(train_dir)
    if name == "tabular":
        dag = None
        if isinstance(train[0].config, ChemConfig):
            dag = generate_graph(train[0].config.graph)
        return fit_tabular(train, dag)
    if name == "pairwise":
        return fit_pairwise(train)
    raise ConfigError("model", f"unknown model {name!r}")


def cmd_gen(args):
    config = load_config(args.config)
    out = generate_dataset(
        config,
        episodes=args.episodes,
        steps=args.steps,
        split=args.split,
        base_seed=args.seed,
        out_dir=args.out,
        include_obs=not args.no_obs,
        jobs=args.jobs,
    )
    _log(f"wrote {args.episodes} episodes x {args.steps} steps to {out}")
    _emit({"out": out, "episodes": args.episodes, "steps": args.steps, "split": args.split})
    return 0


def cmd_eval(args):
    episodes = load_dataset(args.data)
    model = _load_model(args.model, episodes[0].config, args.train)
    ks = _parse_ks(args.k)
    report = rank_eval(model, episodes, ks=ks, include_recon=args.recon)
    report["model"] = args.model
    _emit(report)
    return 0


def cmd_discover(args):
    episodes = load_dataset(args.data)
    config = episodes[0].config
    if isinstance(config, PhysicsConfig):
        order = discover_physics_order(episodes)
        _emit({"order": order})
        return 0
    dag = discover(episodes, alpha=args.alpha, lam=args.lam)
    scored = score_graph(dag, episodes, alpha=args.alpha, lam=args.lam)
    truth = generate_graph(config.graph)
    _emit({
        "dag": [list(e) for e in dag.edges()],
        "score": scored.score,
        "shd": shd(dag, truth),
    })
    return 0


def cmd_plan(args):
    config = load_config(args.config)
    model = _load_model(args.model, config, args.train)
    if args.reward == "true":
        reward_fn = true_reward_fn(config)
    else:
        if args.train is None:
            raise ConfigError("train", "learned reward needs --train with a training dataset")
        reward_fn = fit_reward_predictor(load_dataset(args.train)).as_fn()
    protocol = EvalProtocol(
        horizon=args.k, episodes=args.episodes, seed=args.seed, return_mode=args.return_mode
    )
    report = evaluate_rl(model, reward_fn, config, protocol)
    report["model"] = args.model
    report["reward"] = args.reward
    _emit(report)
    return 0


def cmd_render(args):
    config = load_config(args.config)
    env = make_env(config)
    state = reset_env(env, config, args.split, args.episode_seed)
    frame = render(state, config)
    frame.save(args.out)
    _log(f"wrote {frame.width}x{frame.height} PNG to {args.out}")
    payload = {"out": args.out, "positions": [list(p) for p in state.positions]}
    if isinstance(config, ChemConfig):
        payload["colors"] = list(state.colors)
    _emit(payload)
    return 0


def cmd_selfcheck(args):
    from .selfcheck import run_selfcheck

    failures = run_selfcheck(verbose=True)
    if failures:
        _log(f"{failures} selfcheck(s) failed")
        return 4
    _emit({"selfcheck": "ok"})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="causalgrid",
        description="Interventional gridworld environments with causal-structure evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an episode dataset on disk")
    p.add_argument("--config", required=True, help="env config: JSON file path or inline JSON")
    p.add_argument("--episodes", type=int, required=True, help="number of episodes")
    p.add_argument("--steps", type=int, required=True, help="actions per episode")
    p.add_argument("--split", default="train", choices=["train", "test", "zeroshot"],
                   help="dataset split; controls the episode seed domain")
    p.add_argument("--seed", type=int, required=True, help="base seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel rollout workers (default: all cores)")
    p.add_argument("--no-obs", action="store_true", help="skip rendering pixel observations")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="ranking metrics for a world model on a dataset")
    p.add_argument("--model", required=True, choices=["oracle", "tabular", "pairwise"])
    p.add_argument("--data", required=True, help="evaluation dataset directory")
    p.add_argument("--train", help="training dataset directory (learned models)")
    p.add_argument("--k", default="1,5,10", help="comma-separated prediction horizons")
    p.add_argument("--recon", action="store_true", help="also report reconstruction BCE")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("discover", help="recover causal structure from a dataset")
    p.add_argument("--data", required=True, help="interventional dataset directory")
    p.add_argument("--alpha", type=float, default=1.0, help="Dirichlet pseudo-count")
    p.add_argument("--lam", type=float, default=1.0, help="BIC penalty weight")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("plan", help="greedy-policy downstream evaluation")
    p.add_argument("--config", required=True, help="env config: JSON file path or inline JSON")
    p.add_argument("--model", required=True, choices=["oracle", "tabular", "pairwise"])
    p.add_argument("--train", help="training dataset directory (learned models / reward)")
    p.add_argument("--reward", default="true", choices=["true", "learned"])
    p.add_argument("--k", type=int, required=True, help="target horizon")
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--return-mode", default="final", choices=["final", "sum"],
                   help="report last-step reward or the sum over the rollout")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("render", help="render one reset state to PNG")
    p.add_argument("--config", required=True, help="env config: JSON file path or inline JSON")
    p.add_argument("--episode-seed", type=int, required=True)
    p.add_argument("--split", default="train", choices=["train", "test", "zeroshot"])
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("selfcheck", help="run the invariant suite on tiny instances")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 2
    except (ShapeError, SizeError, CycleError, InsufficientData, ValueError) as exc:
        _log(f"config error: {exc}")
        return 2
    except (FormatError, CorruptionError, OSError) as exc:
        _log(f"io error: {exc}")
        return 3
    except Exception as exc:  # noqa: BLE001
        _log(f"internal error: {type(exc).__name__}: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
