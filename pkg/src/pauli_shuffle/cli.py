"""Command-line interface.

Exit codes: 0 on success, 1 for invalid input, 2 for numerical or solver failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, magic, oracle, sampler
from .channels import CHANNEL_NAMES, ChannelSpec, adjoint, build_named, channel_cost, choi_cost
from .circuit import Circuit, CircuitError, load_circuit, matrix_from_json
from .pauli import BlochVector, bloch_from_dense, dense_from_bloch
from .states import check_density


def _emit(payload, out: str | None) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cost_report(circuit: Circuit, precompose: bool = False, epsilon: float = 0.01, delta: float = 0.05) -> dict:
    compiled = sampler.compile_circuit(circuit, precompose)
    steps = []
    for s in compiled.steps:
        steps.append(
            {
                "label": s.label,
                "inputs": list(s.layout.inputs),
                "in_qubits": s.tm.in_qubits,
                "out_qubits": s.tm.out_qubits,
                "clifford": s.tm.is_clifford,
                "channel_cost": channel_cost(s.tm),
                "adjoint_cost": channel_cost(s.adjoint),
                "choi_cost": choi_cost(s.tm),
            }
        )
    width = compiled.final_width
    obs = compiled.observable
    init = [v.l1_norm() for v in compiled.initial]
    chan = float(np.prod([s["channel_cost"] for s in steps])) if steps else 1.0
    adj = float(np.prod([s["adjoint_cost"] for s in steps])) if steps else 1.0
    state_max = float(np.prod([2 * np.abs(v.coeffs).max() for v in compiled.initial]))
    fwd_cost = float(np.prod(init)) * chan
    bwd_cost = obs.d_measure() * adj
    report = {
        "version": __version__,
        "precompose": precompose,
        "steps": steps,
        "initial_costs": init,
        "channel_cost_product": chan,
        "adjoint_cost_product": adj,
        "observable": {
            "kind": obs.kind,
            "support": list(obs.qubits),
            "d_measure": obs.d_measure(),
            "max_trace": obs.max_trace(width),
            "identity_padding_factor": 2.0 ** (width - len(obs.qubits)),
        },
        "epsilon": epsilon,
        "delta": delta,
    }
    for mode, cost in (("forward", fwd_cost), ("backward", bwd_cost)):
        bound = sampler.range_bound(compiled, mode)
        report[mode] = {
            "cost_product": cost,
            "squared_cost_factor": cost**2,
            "range_bound": bound,
            "hoeffding_samples": sampler.hoeffding_samples(bound, epsilon, delta),
        }
    report["backward"]["state_trace_bound"] = state_max
    report["recommended_mode"] = (
        "backward" if report["backward"]["range_bound"] < report["forward"]["range_bound"] else "forward"
    )
    return report


def _auto_mode(circuit: Circuit, precompose: bool) -> str:
    compiled = sampler.compile_circuit(circuit, precompose)
    fwd = sampler.range_bound(compiled, "forward")
    bwd = sampler.range_bound(compiled, "backward")
    return "backward" if bwd < fwd else "forward"


def _load_state(path: str) -> BlochVector:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CircuitError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if "density" in doc:
        rho = check_density(matrix_from_json(doc["density"], "density"))
        return bloch_from_dense(rho)
    if "pauli_coefficients" in doc:
        v = BlochVector.from_labels(doc["pauli_coefficients"])
        check_density(dense_from_bloch(v))
        return v
    raise CircuitError("", "state file needs a 'density' or 'pauli_coefficients' entry")


def cmd_estimate(args) -> dict:
    circuit = load_circuit(args.circuit)
    mode = args.mode or _auto_mode(circuit, args.precompose)
    if args.samples is None and (args.epsilon is None or args.delta is None):
        raise CircuitError("arguments", "give --samples or both --epsilon and --delta")
    report = sampler.estimate(
        circuit,
        mode,
        n_samples=args.samples,
        epsilon=None if args.samples is not None else args.epsilon,
        delta=None if args.samples is not None else args.delta,
        seed=args.seed,
        precompose=args.precompose,
    )
    out = report.to_dict()
    out["mode_forced"] = args.mode is not None
    return out


def cmd_cost(args) -> dict:
    circuit = load_circuit(args.circuit)
    return cost_report(
        circuit,
        args.precompose,
        0.01 if args.epsilon is None else args.epsilon,
        0.05 if args.delta is None else args.delta,
    )


def cmd_oracle(args) -> dict:
    circuit = load_circuit(args.circuit)
    return {"version": __version__, "mode": "oracle", "value": oracle.exact_value(circuit)}


def cmd_classify(args) -> dict:
    v = _load_state(args.state)
    out = magic.classify(v, full_lp=args.full_lp).to_dict()
    out["version"] = __version__
    return out


def cmd_census(args) -> dict:
    out = magic.census(args.qubits, args.count, args.seed, full_lp=args.full_lp)
    out["version"] = __version__
    return out


def cmd_cross_section(args) -> str:
    rows = magic.cross_section(
        args.plane,
        (args.x_min, args.x_max),
        (args.y_min, args.y_max),
        args.resolution,
        full_lp=args.full_lp,
    )
    return magic.raster_csv(rows)


def cmd_choi(args) -> dict:
    if args.circuit:
        specs = [op.channel for op in load_circuit(args.circuit).ops]
    else:
        specs = [ChannelSpec(name, _default_params(name)) for name in CHANNEL_NAMES if name != "kraus"]
    rows = []
    for spec in specs:
        tm = build_named(spec)
        rows.append(
            {
                "channel": spec.name,
                "params": {k: v for k, v in spec.params.items() if isinstance(v, (int, float, str))},
                "choi_cost": choi_cost(tm),
                "max_cost": channel_cost(tm),
                "adjoint_max_cost": channel_cost(adjoint(tm)),
            }
        )
    return {"version": __version__, "channels": rows}


def _default_params(name: str) -> dict:
    return {"depolarizing": {"p": 0.1}, "dephasing": {"p": 0.1}, "amplitude_damping": {"gamma": 0.1}, "rz": {"theta": 0.3}}.get(name, {})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pauli-shuffle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def budget(sp):
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--delta", type=float)

    sp = sub.add_parser("estimate", help="Monte Carlo estimate of the circuit's observable")
    sp.add_argument("circuit")
    sp.add_argument("--mode", choices=sampler.MODES)
    budget(sp)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--precompose", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("cost", help="channel costs, range bounds and Hoeffding budgets")
    sp.add_argument("circuit")
    budget(sp)
    sp.add_argument("--precompose", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_cost)

    sp = sub.add_parser("oracle", help="exact value by dense simulation")
    sp.add_argument("circuit")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("classify", help="stabilizer / bound / magic label of a state file")
    sp.add_argument("state")
    sp.add_argument("--full-lp", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("census", help="classify random Hilbert-Schmidt states")
    sp.add_argument("--qubits", type=int, default=2)
    sp.add_argument("--count", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--full-lp", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("cross-section", help="CSV raster of a two-qubit state family")
    sp.add_argument("--plane", choices=sorted(magic.FAMILIES), default="a")
    sp.add_argument("--resolution", type=int, default=301)
    sp.add_argument("--x-min", type=float, default=-0.35)
    sp.add_argument("--x-max", type=float, default=0.35)
    sp.add_argument("--y-min", type=float, default=-0.35)
    sp.add_argument("--y-max", type=float, default=0.35)
    sp.add_argument("--full-lp", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_cross_section)

    sp = sub.add_parser("choi", help="Choi-state cost and worst-case cost per channel")
    sp.add_argument("circuit", nargs="?")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_choi)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except (magic.SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(result, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
