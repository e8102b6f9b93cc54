"""Command-line interface.

Subcommands cover the acquisition-to-analysis pipeline: simulate and
save records, reconstruct a Choi matrix, estimate transition
probabilities, compose two record sets, test unitarity, size a sample
budget, and run the convergence experiments.

Exit codes: 0 success, 2 configuration error, 3 infeasible size.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .applications import transition_probability, unitarity_verdict
from .channels import channel_from_spec
from .complexity import ComplexityQuery, sample_budget
from .experiments import (MAX_RECORDS, ConfigError, ExperimentConfig,
                          InfeasibleError, run_experiment, write_result_files)
from .process_shadows import acquire_process_shadow, reconstruct_choi
from .qcore import PauliString, basis_projector, choi_of_channel, operator_norm
from .records_io import load_header, load_records, save_records
from .shadow_algebra import compose_process_shadows

MAX_CLI_QUBITS = 6


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="master seed for any randomness")
    p.add_argument("--records", default=None,
                   help="record file path (input or output per subcommand)")
    p.add_argument("--config", default=None,
                   help="JSON file supplying defaults for omitted flags")


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the --config JSON object."""
    if not args.config:
        return args
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"config key {key!r} matches no flag")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise ConfigError(f"missing required option --{name}")


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(0 if args.seed is None else args.seed)


def _cmd_acquire(args) -> int:
    _require(args, "channel", "qubits", "m", "records")
    n, m = int(args.qubits), int(args.m)
    if n > MAX_CLI_QUBITS:
        raise InfeasibleError(f"{n} qubits exceeds the simulator cap "
                              f"({MAX_CLI_QUBITS})")
    if m > MAX_RECORDS:
        raise InfeasibleError(f"{m} records exceeds the cap ({MAX_RECORDS})")
    ch = channel_from_spec(args.channel, n)
    ps = acquire_process_shadow(ch, m, args.ensemble_in, args.ensemble_out,
                                _rng(args))
    save_records(args.records, ps, seed=args.seed, channel=args.channel)
    print(f"wrote {m} records to {args.records}")
    return 0


def _cmd_reconstruct(args) -> int:
    _require(args, "records")
    ps = load_records(args.records)
    choi = reconstruct_choi(ps)
    print(f"records = {len(ps)}")
    print(f"n_qubits = {ps.n_qubits}")
    print(f"trace = {np.trace(choi.matrix).real:.6f}")
    if args.compare_channel:
        exact = choi_of_channel(channel_from_spec(args.compare_channel,
                                                  ps.n_qubits))
        err = operator_norm(choi.unnormalized() - exact.matrix)
        print(f"operator_norm_error = {err:.6f}")
    if args.output:
        np.save(args.output, choi.matrix)
        print(f"saved normalized Choi matrix to {args.output}")
    return 0


def _cmd_estimate(args) -> int:
    _require(args, "records", "initial", "final")
    ps = load_records(args.records)
    est = transition_probability(ps, args.initial, args.final,
                                 n_groups=args.groups)
    print(f"raw = {est.raw:.6f}")
    print(f"clipped = {est.clipped:.6f}")
    return 0


def _cmd_compose(args) -> int:
    _require(args, "records", "records2")
    ps_x = load_records(args.records)
    ps_y = load_records(args.records2)
    mean = compose_process_shadows(ps_x, ps_y).materialize()
    print(f"pairs = {len(ps_x) * len(ps_y)}")
    print(f"trace = {np.trace(mean).real:.6f}")
    if args.compare_channels:
        try:
            spec_x, spec_y = [s.strip() for s in args.compare_channels.split(",")]
        except ValueError as exc:
            raise ConfigError("--compare-channels wants 'specX,specY'") from exc
        n = ps_x.n_qubits
        from .qcore import Channel
        cx = channel_from_spec(spec_x, n)
        cy = channel_from_spec(spec_y, n)
        comp = Channel(kraus=tuple(ky @ kx for ky in cy.kraus
                                   for kx in cx.kraus))
        exact = choi_of_channel(comp).matrix / 2**n
        print(f"operator_norm_error = {operator_norm(mean - exact):.6f}")
    if args.output:
        np.save(args.output, mean)
        print(f"saved composed Choi estimate to {args.output}")
    return 0


def _cmd_verify_unitarity(args) -> int:
    _require(args, "records")
    ps = load_records(args.records)
    v = unitarity_verdict(ps, threshold_fraction=args.threshold_fraction,
                          n_bootstrap=args.bootstrap, rng=_rng(args))
    print(f"verdict = {v.verdict}")
    print(f"purity = {v.purity:.6f}")
    print(f"interval = [{v.interval[0]:.6f}, {v.interval[1]:.6f}]")
    print(f"threshold = {v.threshold:.6f}")
    return 0


def _cmd_budget(args) -> int:
    _require(args, "epsilon", "delta", "qubits", "observables")
    observables = tuple(PauliString(s.strip())
                        for s in args.observables.split(","))
    states: tuple = ()
    if args.state_supports:
        # each entry is the support count of a pure input state; the
        # budget only sees the support count and the (unit) norm, so a
        # basis projector stands in for the actual state
        placeholder = basis_projector("0" * int(args.qubits))
        states = tuple((placeholder, int(s))
                       for s in args.state_supports.split(","))
    q = ComplexityQuery(epsilon=float(args.epsilon), delta=float(args.delta),
                        n_qubits=int(args.qubits), observables=observables,
                        input_states=states, ensemble_in=args.ensemble_in,
                        ensemble_out=args.ensemble_out)
    ans = sample_budget(q)
    print(f"k_groups = {ans.k_groups}")
    print(f"n_per_group = {ans.n_per_group}")
    print(f"total = {ans.total}")
    print(f"f_out = {list(ans.f_out)}")
    if ans.f_in:
        print(f"f_in = {list(ans.f_in)}")
    if ans.state_budget_shifted is not None:
        print(f"n_per_group_traceless = {ans.state_budget_shifted}")
    return 0


def _cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    else:
        _require(args, "experiment")
        fields = {"experiment": args.experiment}
        if args.qubits is not None:
            fields["n_qubits"] = int(args.qubits)
        if args.channel is not None:
            fields["channel"] = args.channel
        if args.grid is not None:
            fields["grid"] = tuple(int(s) for s in args.grid.split(","))
        if args.trials is not None:
            fields["trials"] = int(args.trials)
        if args.groups is not None:
            fields["n_groups"] = int(args.groups)
        if args.seed is not None:
            fields["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(fields)
    result = run_experiment(cfg)
    if args.out:
        write_result_files(result, args.out, gnuplot=args.gnuplot)
        print(f"wrote results to {args.out}")
    print(f"experiment = {cfg.experiment}")
    if result.exponents:
        print(f"mean_exponent = {result.mean_exponent:.4f}")
        print(f"std_exponent = {result.std_exponent:.4f}")
        print(f"exponents = {[round(b, 4) for b in result.exponents]}")
    else:
        for row in result.table:
            print(json.dumps(row, sort_keys=True, default=float))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procshadow",
        description="Classical-shadow estimation for quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("acquire", help="simulate and save acquisition records")
    p.add_argument("--channel", default=None,
                   help="channel spec, e.g. depolarizing:0.3")
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--m", type=int, default=None, help="number of records")
    p.add_argument("--ensemble-in", default="pauli",
                   choices=["pauli", "clifford"])
    p.add_argument("--ensemble-out", default="pauli",
                   choices=["pauli", "clifford"])
    _add_common(p)
    p.set_defaults(func=_cmd_acquire)

    p = sub.add_parser("reconstruct", help="average records into a Choi matrix")
    p.add_argument("--output", default=None, help="write .npy matrix here")
    p.add_argument("--compare-channel", default=None,
                   help="channel spec to compare against")
    _add_common(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("estimate", help="transition probability from records")
    p.add_argument("--initial", default=None, help="input bit string")
    p.add_argument("--final", default=None, help="output bit string")
    p.add_argument("--groups", type=int, default=1,
                   help="median-of-means group count")
    _add_common(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("compose", help="compose two record sets")
    p.add_argument("--records2", default=None,
                   help="records of the later channel")
    p.add_argument("--output", default=None, help="write .npy matrix here")
    p.add_argument("--compare-channels", default=None,
                   help="dense reference, written as 'specX,specY'")
    _add_common(p)
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser("verify-unitarity", help="bootstrap unitarity verdict")
    p.add_argument("--threshold-fraction", type=float, default=0.95)
    p.add_argument("--bootstrap", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_verify_unitarity)

    p = sub.add_parser("budget", help="sample-complexity calculator")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--observables", default=None,
                   help="comma-separated Pauli strings, e.g. 'ZI,XX'")
    p.add_argument("--state-supports", default=None,
                   help="comma-separated support counts of unit-norm inputs")
    p.add_argument("--ensemble-in", default="pauli",
                   choices=["pauli", "clifford"])
    p.add_argument("--ensemble-out", default="pauli",
                   choices=["pauli", "clifford"])
    _add_common(p)
    p.set_defaults(func=_cmd_budget)

    p = sub.add_parser("experiment", help="run a convergence experiment")
    p.add_argument("--experiment", default=None,
                   help="experiment name (or give --config)")
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--channel", default=None)
    p.add_argument("--grid", default=None,
                   help="comma-separated sample counts")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--groups", type=int, default=None)
    p.add_argument("--out", default=None, help="directory for result files")
    p.add_argument("--gnuplot", action="store_true",
                   help="also write space-separated results.dat")
    _add_common(p)
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.func is not _cmd_experiment:
            # the experiment subcommand reads --config itself (full
            # experiment description, not flag defaults)
            args = _apply_config(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
