"""Command-line driver: ``qiia <subcommand> ...``.

Every subcommand writes a ``key = value`` text report to ``--report`` (or
stdout), plus ``<report>.json`` with the same record and
``<report>.manifest.json`` listing inputs, seeds, tolerances and outputs.
Nothing time-dependent is recorded, so reruns are byte-identical.

Exit codes: 0 success, 2 input/parse error, 3 degenerate denominator,
4 domain error, 5 VQE did not converge, 6 invalid option combination.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qiia import FORMAT_VERSION, __version__
from qiia.ansatz import (
    build_qiia,
    count_resources,
    format_circuit,
    format_vector,
    parse_circuit,
    parse_vector,
    prune_small_angles,
)
from qiia.entanglement import (
    entangler_order,
    format_map_csv,
    format_map_dot,
    mutual_information_matrix,
    parse_map_csv,
    rank_blocks,
)
from qiia.errors import InputError, InvalidOptionError, QIIAError
from qiia.hamiltonian import build_qubit_hamiltonian, parse_integrals
from qiia.mbpt import export_trial, first_order_state, mp2_energy, reference_determinant, reference_energy
from qiia.measurement import (
    estimate_clique,
    exact_contribution,
    format_grouping_report,
    greedy_cliques,
    rank_supercliques,
    superclique_contribution,
    supercliques,
)
from qiia.simulator import StateVector, bitstring, expectation, format_state, parse_state, run_circuit
from qiia.solvers import DEFAULT_MAX_EVALS, DEFAULT_TOL, casci_ground, pfd, vqe_minimize

EXIT_NOT_CONVERGED = 5


class _Run:
    """Collects the report record and manifest of one subcommand."""

    def __init__(self, args: argparse.Namespace, inputs: dict[str, str | None]):
        self.args = args
        self.record: dict[str, Any] = {"subcommand": args.command}
        self.manifest: dict[str, Any] = {
            "subcommand": args.command,
            "tool_version": __version__,
            "format_version": FORMAT_VERSION,
            "inputs": {k: v for k, v in inputs.items() if v is not None},
            "options": {},
            "outputs": {},
        }

    def option(self, **kwargs: Any) -> None:
        self.manifest["options"].update(kwargs)

    def write(self, key: str, path: str | None, text: str) -> None:
        if path is None:
            return
        Path(path).write_text(text, encoding="utf-8")
        self.manifest["outputs"][key] = path

    def finish(self, extra_text: str = "", text_skip: Sequence[str] = ()) -> None:
        text = "".join(
            f"{k} = {_text_value(v)}\n" for k, v in self.record.items() if k not in text_skip
        )
        text += extra_text
        report = getattr(self.args, "report", None)
        if report is None:
            sys.stdout.write(text)
            return
        self.manifest["outputs"]["report"] = report
        self.manifest["outputs"]["record"] = report + ".json"
        Path(report).write_text(text, encoding="utf-8")
        Path(report + ".json").write_text(_dumps(self.record), encoding="utf-8")
        Path(report + ".manifest.json").write_text(_dumps(self.manifest), encoding="utf-8")


def _text_value(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_text_value(x) for x in v)
    return str(v)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_state(path: str) -> StateVector:
    return parse_state(_read(path))


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_mbpt(args: argparse.Namespace) -> int:
    run = _Run(args, {"ham": args.ham})
    run.option(scheme=args.scheme)
    ints = parse_integrals(_read(args.ham))
    ref = reference_determinant(ints)
    trial = first_order_state(ints, ref, args.scheme)
    state = export_trial(trial)
    run.record.update(
        scheme=args.scheme,
        reference=ref.bitstring,
        E_DF=reference_energy(ints, ref),
        E_MP2=mp2_energy(ints, ref, args.scheme),
        determinants=len(trial.terms),
    )
    run.write("state", args.out, format_state(state))
    run.finish()
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    run = _Run(args, {"state": args.state})
    run.option(blocks=args.blocks, cutoff=args.cutoff)
    emap = mutual_information_matrix(_load_state(args.state))
    centers = rank_blocks(emap, args.blocks)
    run.record.update(
        n_qubits=emap.n_qubits,
        entropy=[float(s) for s in emap.entropy],
        block_centers=centers,
    )
    for b, c in enumerate(centers):
        run.record[f"block_{b}_order"] = entangler_order(emap, c, args.cutoff)
    run.write("csv", args.out, format_map_csv(emap))
    run.write("dot", args.dot, format_map_dot(emap, args.blocks, args.cutoff))
    run.finish()
    return 0


def cmd_ansatz(args: argparse.Namespace) -> int:
    if (args.state is None) == (args.map is None):
        raise InvalidOptionError("give exactly one of --state and --map")
    run = _Run(args, {"state": args.state, "map": args.map})
    if args.state is not None:
        state = _load_state(args.state)
        emap = mutual_information_matrix(state)
        dominant = bitstring(int(np.argmax(np.abs(state.amplitudes))), state.n_qubits)
    else:
        emap = parse_map_csv(_read(args.map))
        dominant = None
    reference = args.reference or dominant
    if reference is None:
        raise InvalidOptionError("--map needs --reference")
    run.option(blocks=args.blocks, cutoff=args.cutoff, reference=reference)
    spec, circuit = build_qiia(emap, args.blocks, reference, args.cutoff)
    run.record.update(n_qubits=circuit.n_qubits, reference=reference)
    for b, block in enumerate(spec.blocks):
        run.record[f"block_{b}"] = [block.center, *block.partners]
    for prefix, res in (("native", count_resources(circuit)), ("cx", count_resources(circuit, True))):
        run.record.update({f"{prefix}_{k}": v for k, v in res.as_dict().items()})
    run.write("circuit", args.out, format_circuit(circuit))
    run.finish()
    return 0


def cmd_vqe(args: argparse.Namespace) -> int:
    run = _Run(args, {"ham": args.ham, "circuit": args.circuit, "init": args.init})
    run.option(seed=args.seed, tol=args.tol, max_evals=args.max_evals, exact=args.exact)
    ints = parse_integrals(_read(args.ham))
    h = build_qubit_hamiltonian(ints)
    circuit = parse_circuit(_read(args.circuit))
    init = parse_vector(_read(args.init), circuit.parameter_slots) if args.init else None
    result = vqe_minimize(h, circuit, init=init, seed=args.seed, tol=args.tol, max_evals=args.max_evals)
    run.record.update(
        energy=result.energy,
        evaluations=result.evaluations,
        iterations=result.iterations,
        converged=result.converged,
        seed=result.seed,
    )
    if args.exact:
        e_ref = casci_ground(h, ints.n_electrons).energy
        run.record.update(casci_energy=e_ref, pfd=pfd(result.energy, e_ref))
    run.write("params", args.params_out, format_vector(circuit.parameter_slots, result.parameters))
    run.finish()
    return 0 if result.converged else EXIT_NOT_CONVERGED


def cmd_exact(args: argparse.Namespace) -> int:
    run = _Run(args, {"ham": args.ham})
    ints = parse_integrals(_read(args.ham))
    nelec = ints.n_electrons if args.nelec is None else args.nelec
    run.option(nelec=nelec)
    result = casci_ground(build_qubit_hamiltonian(ints), nelec)
    run.record.update(nelec=nelec, energy=result.energy, sector_dimension=result.sector_dimension)
    run.write("state", args.out, format_state(result.state, 1e-14))
    run.finish()
    return 0


def cmd_group(args: argparse.Namespace) -> int:
    if args.shots is not None and args.state is None:
        raise InvalidOptionError("--shots needs --state")
    if args.postselect and args.shots is None:
        raise InvalidOptionError("--postselect needs --shots")
    if args.top is not None and args.state is None:
        raise InvalidOptionError("--top needs --state")
    run = _Run(args, {"ham": args.ham, "state": args.state})
    run.option(seed=args.seed, shots=args.shots, postselect=args.postselect, top=args.top)
    ints = parse_integrals(_read(args.ham))
    h = build_qubit_hamiltonian(ints)
    cliques = greedy_cliques(h)
    state = _load_state(args.state) if args.state else None
    if state is not None and state.n_qubits != h.n_qubits:
        raise InputError(f"state has {state.n_qubits} qubits, Hamiltonian has {h.n_qubits}")
    supers = supercliques(cliques, state)
    run.record.update(terms=len(h), cliques=len(cliques), supercliques=len(supers))

    exact: dict[int, float] = {}
    estimates = {}
    if state is not None:
        exact = {k: exact_contribution(state, c) for k, c in enumerate(cliques)}
        run.record.update(
            exact_total=float(sum(exact.values())), direct_expectation=expectation(state, h)
        )
        ranking = rank_supercliques(state, cliques, supers)
        run.record["superclique_ranking"] = ranking
        run.record["superclique_contributions"] = [
            superclique_contribution(state, cliques, supers[k]) for k in ranking
        ]
        measured = range(len(cliques))
        if args.top is not None:
            measured = sorted(k for s in ranking[: args.top] for k in supers[s].cliques)
        if args.shots is not None:
            for k in measured:
                estimates[k] = estimate_clique(
                    state, cliques[k], args.shots, args.seed + k, args.postselect, ints.n_electrons
                )
            run.record["estimated_total"] = float(sum(e.contribution for e in estimates.values()))
            run.record["estimated_stderr"] = float(
                np.sqrt(sum(e.standard_error**2 for e in estimates.values()))
            )
            run.record["measured_cliques"] = list(estimates)
        run.record["clique_exact"] = [exact[k] for k in range(len(cliques))]
    if estimates:
        run.record["clique_estimates"] = {
            str(k): {"value": e.contribution, "stderr": e.standard_error, "retained": e.retained}
            for k, e in estimates.items()
        }
    body = "\n" + format_grouping_report(cliques, supers, estimates or None, exact or None)
    run.finish(body, text_skip=("clique_exact", "clique_estimates"))
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    run = _Run(args, {"circuit": args.circuit, "params": args.params, "ham": args.ham})
    run.option(threshold=args.threshold)
    circuit = parse_circuit(_read(args.circuit))
    params = parse_vector(_read(args.params), circuit.parameter_slots)
    pruned, kept = prune_small_angles(circuit, params, args.threshold)
    for prefix, c in (("before", circuit), ("after", pruned)):
        run.record.update({f"{prefix}_{k}": v for k, v in count_resources(c).as_dict().items()})
        cx = count_resources(c, decomposed=True)
        run.record[f"{prefix}_cx_count"] = cx.two_qubit_gate_count
        run.record[f"{prefix}_cx_depth"] = cx.depth
    if args.ham:
        h = build_qubit_hamiltonian(parse_integrals(_read(args.ham)))
        zero = StateVector(circuit.n_qubits, np.eye(1 << circuit.n_qubits, 1, dtype=complex).ravel())
        e0 = expectation(run_circuit(circuit, params, zero), h)
        e1 = expectation(run_circuit(pruned, kept, zero), h)
        run.record.update(energy_before=e0, energy_after=e1, energy_shift=e1 - e0)
    run.write("circuit", args.out, format_circuit(pruned))
    run.write("params", args.params_out, format_vector(pruned.parameter_slots, kept))
    run.finish()
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiia", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"qiia {__version__} (file formats v{FORMAT_VERSION})"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mbpt", help="reference energy, MP2 energy and first-order trial state")
    p.add_argument("--ham", required=True)
    p.add_argument("--scheme", choices=["mp", "en"], default="mp")
    p.add_argument("--out", help="trial-state file")
    p.add_argument("--report")
    p.set_defaults(func=cmd_mbpt)

    p = sub.add_parser("analyze", help="entropies, mutual information, CSV and DOT export")
    p.add_argument("--state", required=True)
    p.add_argument("--out", help="CSV map file")
    p.add_argument("--dot")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--cutoff", type=float, default=0.0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ansatz", help="build the entanglement-guided circuit")
    p.add_argument("--state")
    p.add_argument("--map")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--cutoff", type=float, default=0.0)
    p.add_argument("--reference", help="occupation bitstring q_{N-1}..q_0")
    p.add_argument("--out", help="circuit file")
    p.add_argument("--report")
    p.set_defaults(func=cmd_ansatz)

    p = sub.add_parser("vqe", help="minimize the energy over circuit parameters")
    p.add_argument("--ham", required=True)
    p.add_argument("--circuit", required=True)
    p.add_argument("--init", help="initial parameter vector file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-evals", type=int, default=DEFAULT_MAX_EVALS)
    p.add_argument("--exact", action="store_true", help="also report CAS-CI energy and PFD")
    p.add_argument("--params-out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_vqe)

    p = sub.add_parser("exact", help="ground state in a fixed particle-number sector")
    p.add_argument("--ham", required=True)
    p.add_argument("--nelec", type=int, help="defaults to NELEC of the integral file")
    p.add_argument("--out", help="ground-state file")
    p.add_argument("--report")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("group", help="clique/superclique grouping and shot estimates")
    p.add_argument("--ham", required=True)
    p.add_argument("--state")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--postselect", action="store_true")
    p.add_argument("--top", type=int, help="measure only the K dominant supercliques")
    p.add_argument("--report")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("reduce", help="remove small-angle rotations and entanglers")
    p.add_argument("--circuit", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--ham", help="report the energy shift on this Hamiltonian")
    p.add_argument("--out", help="pruned circuit file")
    p.add_argument("--params-out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_reduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QIIAError as exc:
        print(f"qiia {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
