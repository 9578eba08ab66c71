"""Command-line front end.

Each subcommand runs one experiment family and writes CSV (and, with
``--plot``, SVG) into the output directory. Values come from, in rising
precedence: built-in defaults, a ``--config`` file of ``key = value`` lines,
and command-line flags.

Exit codes: 0 success, 1 runtime fault, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import device, experiments, network, output, toy
from .device import BMS, MODELS
from .network import NetworkDims
from .trainer import SOLVERS, TIE_BREAKS, TargetMap, TrainerConfig, random_map, train_until_learned

OUTPUT_ENV = "MEMLEARN_OUTPUT_DIR"
COMMANDS = ("device-demo", "train", "sweep", "perturb", "relearn", "variants", "toy")

# per-command dimension defaults (n_in, n_bulk list, n_out)
DIM_DEFAULTS = {
    "train": (3, "100", 3),
    "sweep": (3, "20,100,400", 3),
    "perturb": (4, "200", 4),
    "relearn": (3, "400", 3),
    "variants": (4, "200", 4),
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list:
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return values


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memlearn", description="Learning by punishing mistakes in memristor networks.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed for every random stream")
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--config", help="file of 'key = value' lines; flags take precedence")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")
    common.add_argument("--threads", type=_positive_int, default=None, help="worker processes")

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--model", choices=MODELS, default=BMS)
    net.add_argument("--nin", type=_positive_int)
    net.add_argument("--nout", type=_positive_int)
    net.add_argument("--nbulk", type=_int_list)
    net.add_argument("--steps", type=_positive_int, default=1000, help="training step budget")
    net.add_argument("--vread", type=float)
    net.add_argument("--vwrite", type=float)
    net.add_argument("--nmax", type=_positive_int, help="correction cap per training step")
    net.add_argument("--substeps", type=_positive_int)
    net.add_argument("--dt", type=float)
    net.add_argument("--tie-break", choices=TIE_BREAKS)
    net.add_argument("--solver", choices=SOLVERS)

    p = sub.add_parser("device-demo", parents=[common], help="drive one BMS device through the hysteresis waveform")
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--vth", type=float, default=0.075)
    p.add_argument("--rmin", type=float, default=75.0)
    p.add_argument("--rmax", type=float, default=5000.0)
    p.add_argument("--small", type=float, default=0.05, help="amplitude of the sub-threshold triangles")
    p.add_argument("--large", type=float, default=-0.5, help="amplitude of the large excursion")

    p = sub.add_parser("train", parents=[common, net], help="train one network on one map")
    p.add_argument("--map", default="identity", help="'identity', 'random' or a comma list of outputs")
    p.add_argument("--save-net", help="write the trained network to this file")
    p.add_argument("--load-net", help="start from a saved network instead of a fresh one")

    p = sub.add_parser("sweep", parents=[common, net], help="success against training step over a size grid")
    p.add_argument("--reals", type=_positive_int, default=100)

    p = sub.add_parser("perturb", parents=[common, net], help="recovery from periodic resistance perturbations")
    p.add_argument("--period", type=_positive_int, default=100)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--factor", type=float, default=1.05)
    p.add_argument("--events", type=_positive_int, default=20)

    p = sub.add_parser("relearn", parents=[common, net], help="learn all maps, shuffle, relearn")
    p.add_argument("--cycles", type=int, default=10)
    p.add_argument("--reals", type=_positive_int, default=10)
    p.add_argument("--carry", choices=network.SHUFFLE_CARRY, default="resistance")

    p = sub.add_parser("variants", parents=[common, net], help="success sweep for a construction variant")
    p.add_argument("--variant", choices=experiments.VARIANTS, default=experiments.RANDOM_POLARITY)
    p.add_argument("--reals", type=_positive_int, default=100)

    p = sub.add_parser("toy", parents=[common], help="extremal-dynamics toy network on six maps")
    p.add_argument("--nin", type=_positive_int, default=6)
    p.add_argument("--nout", type=_positive_int, default=6)
    p.add_argument("--nmid", type=_positive_int, default=300)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--steps", type=_positive_int, default=100_000)
    return parser


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; blank lines and ``#`` comments are skipped."""
    values = {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[command]


def _apply_config(parser, sub, args, argv) -> argparse.Namespace:
    """Re-parse with config values as defaults so that flags still win."""
    values = read_config(args.config)
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    defaults = {}
    for key, text in values.items():
        action = known[key]
        try:
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = text.lower() in ("1", "true", "yes", "on")
            else:
                value = action.type(text) if action.type else text
                if action.choices is not None and value not in action.choices:
                    raise ValueError(f"must be one of {list(action.choices)}")
                defaults[key] = value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config key {key!r}: {exc}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _fill_dims(args) -> None:
    if args.command in DIM_DEFAULTS:
        n_in, bulk, n_out = DIM_DEFAULTS[args.command]
        args.nin = args.nin or n_in
        args.nout = args.nout or n_out
        args.nbulk = args.nbulk or _int_list(bulk)


def trainer_config(args) -> TrainerConfig:
    overrides = {}
    for flag, name in (("vread", "v_read"), ("vwrite", "v_write"), ("nmax", "max_corrections"),
                       ("substeps", "write_substeps"), ("dt", "dt"), ("tie_break", "tie_break"),
                       ("solver", "solver")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    overrides["max_training_steps"] = args.steps
    return TrainerConfig.for_model(args.model, **overrides)


def _validate(args) -> None:
    if args.command in ("device-demo", "toy"):
        return
    if args.command != "sweep" and len(args.nbulk) != 1:
        raise UsageError(f"{args.command} takes a single --nbulk value")
    try:
        cfg = trainer_config(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.model == BMS and cfg.v_read >= device.BMS_VTH_RANGE[0]:
        raise UsageError(f"--vread {cfg.v_read} is not below the smallest BMS threshold "
                         f"{device.BMS_VTH_RANGE[0]}; reads would change the network")
    if args.command == "variants" and args.variant == experiments.EQUAL_R and args.model != BMS:
        raise UsageError("the equal-R variant is defined for BMS devices only")
    if args.command == "perturb" and (not 0 <= args.fraction <= 1 or args.factor <= 0):
        raise UsageError("--fraction must lie in [0, 1] and --factor must be positive")
    if args.command == "relearn" and args.cycles < 0:
        raise UsageError("--cycles must be >= 0")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse and validate a command line. Raises ``SystemExit(2)`` on usage errors."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        raise SystemExit(2)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(2)
    sub = _subparser(parser, args.command)
    # flags given explicitly alongside a loaded network would be silently ignored
    if args.command == "train" and args.load_net:
        clash = [f for f in ("--nin", "--nout", "--nbulk", "--model") if f in argv]
        if clash:
            sub.error(f"--load-net conflicts with {', '.join(clash)}")
    try:
        if args.config:
            args = _apply_config(parser, sub, args, argv)
        _fill_dims(args)
        _validate(args)
    except (UsageError, OSError) as exc:
        sub.error(str(exc))
    args.out = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    return args


# --- commands ----------------------------------------------------------------

def _write(args, name: str, result=None, table=None, title: str = "") -> None:
    if table is None:
        table = output.to_rows(result)
    _, header, rows = table
    path = args.out / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        output.write_table(header, rows, fh)
    if args.plot:
        with open(args.out / f"{name}.svg", "w") as fh:
            output.emit_svg(None, fh, title=title or name, table=table)


def _parse_map(text: str, n_in: int, n_out: int, rng) -> TargetMap:
    if text == "identity":
        return TargetMap.identity(n_in)
    if text == "random":
        return random_map(n_in, n_out, rng)
    return TargetMap(tuple(int(v) for v in text.split(",")))


def cmd_device_demo(args) -> None:
    params = device.BmsParams(beta=args.beta, v_threshold=args.vth, r_min=args.rmin, r_max=args.rmax)
    wave = experiments.hysteresis_waveform(small=args.small, large=args.large)
    _write(args, "device_demo", experiments.run_device_demo(params, wave))


def cmd_train(args) -> None:
    rng = experiments.realization_rng(args.seed)
    if args.load_net:
        with open(args.load_net) as fh:
            net = network.load(fh)
        args.model = net.model
        cfg = trainer_config(args)
    else:
        cfg = trainer_config(args)
        dims = NetworkDims(args.nin, args.nbulk[0], args.nout)
        net = network.build_network(dims, args.model, rng, seed=args.seed)
    cfg.check_against(net)
    target = _parse_map(args.map, net.dims.n_in, net.dims.n_out, rng)
    target.check(net.dims.n_in, net.dims.n_out)
    rec = train_until_learned(net, target, cfg, rng)
    _write(args, "train", rec)
    if args.save_net:
        with open(args.save_net, "w") as fh:
            network.save(net, fh)
    status = f"learned at step {rec.learned_at}" if rec.learned else "not learned"
    print(f"map {target.label()}: {status}")


def _sweep_spec(args, variant=experiments.BASELINE) -> experiments.SweepSpec:
    grid = [(args.nin, args.nout, b) for b in args.nbulk]
    return experiments.SweepSpec(model=args.model, grid=grid, realizations=args.reals, seed=args.seed,
                                 max_steps=args.steps, variant=variant, config=trainer_config(args),
                                 workers=args.threads)


def _report_sweep(result) -> None:
    for p in result.points:
        print(f"{p.n_in}x{p.n_bulk}x{p.n_out}: success {p.success:.3f} +- {p.sem:.3f}")


def cmd_sweep(args) -> None:
    result = experiments.run_success_sweep(_sweep_spec(args))
    _write(args, "sweep", result)
    _report_sweep(result)


def cmd_variants(args) -> None:
    result = experiments.run_variants(_sweep_spec(args, args.variant))
    _write(args, f"variants_{args.variant}", result)
    _report_sweep(result)


def cmd_perturb(args) -> None:
    dims = NetworkDims(args.nin, args.nbulk[0], args.nout)
    trace = experiments.run_perturbation(dims, trainer_config(args), args.period, args.fraction,
                                         args.factor, args.seed, args.events, model=args.model)
    _write(args, "perturb", trace)
    print(f"learned at step {trace.learned_at}; recovered {trace.recovered_fraction:.2f} of events")


def cmd_relearn(args) -> None:
    dims = NetworkDims(args.nin, args.nbulk[0], args.nout)
    res = experiments.run_relearn_shuffle(dims, trainer_config(args), args.cycles, args.seed,
                                          realizations=args.reals, model=args.model, carry=args.carry,
                                          workers=args.threads)
    _write(args, "relearn", res)
    for count, h in sorted(res.histograms.items()):
        _write(args, f"relearn_hist_{count}_raw", table=output.histogram_rows(h["raw_counts"], h["raw_edges"]))
        _write(args, f"relearn_hist_{count}_norm", table=output.histogram_rows(h["norm_counts"], h["norm_edges"]))
    print(f"<CV> after {len(res.cv) - 1} maps: {res.cv[-1]:.3f}; failures {res.failures}")


def cmd_toy(args) -> None:
    rng = np.random.default_rng(args.seed)
    if (args.nin, args.nout) == (6, 6):
        maps = list(experiments.TOY_MAPS_6.values())
    else:
        maps = [random_map(args.nin, args.nout, rng) for _ in range(6)]
    tn = toy.build_toy(args.nin, args.nmid, args.nout, rng, args.delta)
    trace = toy.toy_train(tn, maps, args.steps, rng)
    _write(args, "toy", trace)
    print("learned at " + ", ".join(str(s) for s in trace.learned_at))


HANDLERS = {
    "device-demo": cmd_device_demo,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "perturb": cmd_perturb,
    "relearn": cmd_relearn,
    "variants": cmd_variants,
    "toy": cmd_toy,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"memlearn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
