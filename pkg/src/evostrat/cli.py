"""Command-line entry point: ``train``, ``demo``, ``sweep`` and ``plot``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from evostrat.callbacks import CheckpointCallback
from evostrat.objectives import OBJECTIVE_NAMES, default_policy, evaluate_benchmark, make_objective
from evostrat.optimizers import AdamESConfig, ESConfig
from evostrat.plot import add_plot_arguments, run_plot
from evostrat.runtime import ALGORITHMS, AgentConfig, Trainer, resolve_run_dir, train, unique_dir

# reference defaults: n=10, sigma=1, lr=0.1, beta1=0.9, beta2=0.999, seed=0
DEFAULTS = dict(pop_size=10, sigma=1.0, lr=0.1, beta1=0.9, beta2=0.999, seed=0)

SWEEP_GRIDS = {
    "lr": "0.01,0.05,0.1,0.5",
    "sigma": "0.1,0.5,1,2",
    "pop-size": "5,10,50,100",
}

DEMO_DIM = 2
DEMO_ITERATIONS = 50
DEMO_PASS_VALUE = 0.5


def add_train_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algo", choices=ALGORITHMS, default="adames")
    parser.add_argument("--objective", choices=OBJECTIVE_NAMES, default="sphere")
    parser.add_argument("--dim", type=int, default=10, help="dimension of static objectives")
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    parser.add_argument("--lr", type=float, default=DEFAULTS["lr"])
    parser.add_argument("--sigma", type=float, default=DEFAULTS["sigma"])
    parser.add_argument("--pop-size", type=int, default=DEFAULTS["pop_size"])
    parser.add_argument("--beta1", type=float, default=DEFAULTS["beta1"])
    parser.add_argument("--beta2", type=float, default=DEFAULTS["beta2"])
    parser.add_argument("--actor-epochs", type=int, default=1)
    parser.add_argument("--no-scale", action="store_true", help="use raw fitness in the gradient estimate")
    parser.add_argument("--init-std", type=float, default=1.0, help="spread of the random initial point")
    parser.add_argument("--max-steps", type=int, default=100, help="episode length for point_mass")
    parser.add_argument("--hidden", type=int, nargs="*", default=[], help="policy hidden widths for point_mass")
    parser.add_argument("--log-dir", default="runs")


def config_from_args(args: argparse.Namespace) -> AgentConfig:
    """Resolve parsed flags into a validated config; raises ValueError."""
    common = dict(
        learning_rate=args.lr,
        noise_std=args.sigma,
        population_size=args.pop_size,
        scale_fitness=not args.no_scale,
    )
    if args.algo == "adames":
        optimizer = AdamESConfig(beta1=args.beta1, beta2=args.beta2, **common)
    else:
        optimizer = ESConfig(**common)
    network = default_policy(args.hidden) if args.objective == "point_mass" else None
    objective = make_objective(args.objective, dim=args.dim, max_steps=args.max_steps, network=network)
    return AgentConfig(
        objective=objective,
        algorithm=args.algo,
        optimizer=optimizer,
        network=network,
        iterations=args.iterations,
        seed=args.seed,
        log_dir=args.log_dir,
        actor_epochs=args.actor_epochs,
        init_std=args.init_std,
    )


def _config_or_usage(args, parser) -> AgentConfig:
    try:
        return config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))


def cmd_train(args, parser) -> int:
    config = _config_or_usage(args, parser)
    if args.checkpoint_every < 0:
        parser.error("--checkpoint-every must be >= 0")
    run_dir = resolve_run_dir(config, args.run_name)
    callbacks = []
    if args.checkpoint_every:
        callbacks.append(CheckpointCallback(args.checkpoint_every, run_dir / "checkpoints"))
    artifacts = Trainer(config).run(run_dir, callbacks)
    print(artifacts.run_dir)
    return 0


def cmd_demo(args, parser) -> int:
    objective = make_objective("sphere", dim=DEMO_DIM)
    common = dict(learning_rate=DEFAULTS["lr"], noise_std=DEFAULTS["sigma"], population_size=DEFAULTS["pop_size"])
    if args.agent == "adames":
        optimizer = AdamESConfig(beta1=DEFAULTS["beta1"], beta2=DEFAULTS["beta2"], **common)
    else:
        optimizer = ESConfig(**common)
    with tempfile.TemporaryDirectory() as tmp:
        config = AgentConfig(
            objective=objective,
            algorithm=args.agent,
            optimizer=optimizer,
            iterations=DEMO_ITERATIONS,
            seed=DEFAULTS["seed"],
            log_dir=args.log_dir or tmp,
        )
        artifacts = train(config)
        value = evaluate_benchmark("sphere", artifacts.params)
        if args.log_dir:
            print(artifacts.run_dir)
    print(f"{args.agent}: final sphere value {value:.6g} after {artifacts.iterations} iterations")
    if value < DEMO_PASS_VALUE:
        print(f"PASS (value < {DEMO_PASS_VALUE})")
        return 0
    print(f"FAIL (value >= {DEMO_PASS_VALUE})")
    return 1


def _parse_values(param: str, raw: str) -> list:
    cast = int if param == "pop-size" else float
    values = [cast(v) for v in raw.split(",") if v.strip()]
    if len(values) < 2:
        raise ValueError("a sweep needs at least two values")
    return values


_SWEEP_FIELDS = {"lr": "lr", "sigma": "sigma", "pop-size": "pop_size"}


def _run_one(config: AgentConfig, run_name: str) -> str:
    return str(train(config, run_name=run_name).run_dir)


def cmd_sweep(args, parser) -> int:
    raw = SWEEP_GRIDS[args.param] if args.values is None else args.values
    try:
        values = _parse_values(args.param, raw)
    except ValueError as exc:
        parser.error(f"--values: {exc}")
    field = _SWEEP_FIELDS[args.param]
    jobs = []
    sweep_root = unique_dir(Path(args.log_dir) / f"sweep-{args.algo}-{args.objective}-{args.param}")
    for value in values:
        flags = {k: v for k, v in vars(args).items() if k not in ("func", "parser")}
        point = argparse.Namespace(**{**flags, field: value, "log_dir": str(sweep_root)})
        jobs.append((_config_or_usage(point, parser), f"{args.param}={value}"))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            dirs = list(pool.map(_run_one, *zip(*jobs)))
    else:
        dirs = [_run_one(config, name) for config, name in jobs]
    for d in dirs:
        print(d)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evostrat", description="Evolution strategies with Adam-style updates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one agent and write a run directory")
    add_train_arguments(p_train)
    p_train.add_argument("--run-name", help="run directory name under --log-dir")
    p_train.add_argument("--checkpoint-every", type=int, default=0, help="save parameters every k iterations")
    p_train.set_defaults(func=cmd_train, parser=p_train)

    p_demo = sub.add_parser("demo", help="short preset run that checks an agent converges")
    p_demo.add_argument("--agent", choices=ALGORITHMS, required=True)
    p_demo.add_argument("--log-dir", help="keep the run directory here instead of a temporary one")
    p_demo.set_defaults(func=cmd_demo, parser=p_demo)

    p_sweep = sub.add_parser("sweep", help="one run per value of a hyperparameter")
    add_train_arguments(p_sweep)
    p_sweep.add_argument("--param", choices=sorted(SWEEP_GRIDS), required=True)
    p_sweep.add_argument("--values", help="comma-separated values (default grid per parameter)")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep, parser=p_sweep)

    p_plot = sub.add_parser("plot", help="plot metrics from run directories")
    add_plot_arguments(p_plot)
    p_plot.set_defaults(func=run_plot, parser=p_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, args.parser)
    except SystemExit:
        raise
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
