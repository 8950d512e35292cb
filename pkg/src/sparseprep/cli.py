"""Command-line harness: targets, truncation, both preparation routes, frontiers.

Exit codes: 0 success, 1 valid run that did not reach its goal, 2 input error,
3 internal-consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

from . import adapt as adapt_mod
from . import cvoqram, targets
from .simcore import MAX_DENSE_QUBITS, SimulationError

EXIT_OK, EXIT_UNREACHED, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
FRONTIER_VERSION = "# sparseprep frontier v1"
TRUNCATION_VERSION = "# sparseprep truncation v1"
DEFAULT_GRID = (0.5, 0.8, 0.9, 0.95, 0.99)
VERIFY_TOL = 1e-8


class InputError(Exception):
    pass


class ConsistencyError(Exception):
    pass


def atomic_write(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _load_target(path) -> targets.SparseState:
    state = targets.parse_sparse_state(_read(path))
    if state.sparsity == 0:
        raise InputError(f"{path}: target has no entries")
    return state


def _emit(args, payload: dict):
    if getattr(args, "format", "json") == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(payload.keys())
        w.writerow(payload.values())
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(payload))


def _parse_grid(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        grid = [float(x) for x in text]
    else:
        grid = [float(x) for x in str(text).replace(",", " ").split()]
    if not grid or any(not 0 < g <= 1 for g in grid):
        raise InputError("fidelity grid values must lie in (0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("fidelity grid must be strictly increasing")
    return grid


# commands ---------------------------------------------------------------
def cmd_ground_state(args):
    h = targets.PauliSumHamiltonian.parse(_read(args.hamiltonian))
    state = targets.ground_state(h, amp_cutoff=args.cutoff, reference=args.reference)
    atomic_write(args.out, state.to_json())
    _emit(args, {"energy": state.metadata["energy"], "sparsity": state.sparsity,
                 "residual": state.metadata["residual"]})
    return EXIT_OK


def cmd_synth(args):
    state = targets.synthetic_target(args.n, args.M, args.electrons, args.sz, args.decay, args.seed,
                                     complex_phases=args.complex)
    atomic_write(args.out, state.to_json())
    _emit(args, {"n_qubits": state.n_qubits, "sparsity": state.sparsity})
    return EXIT_OK


def cmd_truncate(args):
    state = _load_target(args.target)
    if args.keep is not None:
        sub, f = targets.truncate(state, keep=args.keep)
        atomic_write(args.out, sub.to_json())
        _emit(args, {"M": sub.sparsity, "fidelity": f})
        return EXIT_OK
    grid = _parse_grid(args.grid) or list(DEFAULT_GRID)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(TRUNCATION_VERSION + "\n")
    w.writerow(["target_fidelity", "M", "fidelity"])
    for g in grid:
        sub, f = targets.truncate(state, fidelity=g)
        w.writerow([repr(g), sub.sparsity, repr(f)])
        if args.states_dir:
            os.makedirs(args.states_dir, exist_ok=True)
            atomic_write(os.path.join(args.states_dir, f"tgs_{g:.6f}.json"), sub.to_json())
    atomic_write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_spectrum(args):
    atomic_write(args.out, targets.spectrum_csv(_load_target(args.target)))
    return EXIT_OK


def cmd_esp_bound(args):
    _emit(args, {"orbitals": args.orbitals, "alpha": args.alpha, "beta": args.beta,
                 "cnot_bound": targets.esp_cnot_bound(args.orbitals, args.alpha, args.beta)})
    return EXIT_OK


def cmd_cvoqram(args):
    state = _load_target(args.target)
    plan = cvoqram.preprocess(state, renormalize=args.renormalize)
    circuit = cvoqram.compile(plan)
    report = cvoqram.counts_report(plan, circuit)
    if plan.n_qubits + 1 > MAX_DENSE_QUBITS:
        if not args.no_verify:
            raise InputError(f"verification needs {plan.n_qubits + 1} dense qubits "
                             f"(limit {MAX_DENSE_QUBITS}); pass --no-verify")
    if not args.no_verify:
        fid, anc = cvoqram.verify(plan, circuit)
        report["fidelity"] = fid
        report["ancilla_weight"] = anc
    if args.out_circuit:
        atomic_write(args.out_circuit, circuit.to_json())
    atomic_write(args.out_report, json.dumps(report, indent=1) + "\n")
    if not args.no_verify and report["fidelity"] < 1 - VERIFY_TOL:
        raise ConsistencyError(f"loader fidelity {report['fidelity']!r} below 1 - {VERIFY_TOL:g}")
    if args.out_report not in (None, "-"):
        _emit(args, {"fidelity": report.get("fidelity"), "cnot_formula": report["cnot_formula"],
                     "M": plan.M})
    return EXIT_OK


def _adapt_config(args, cfg):
    keys = ("pool", "epsilon", "max_iterations", "seed", "spin_adapted", "gtol",
            "max_evaluations", "workers")
    merged = {k: cfg[k] for k in keys if k in cfg}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return adapt_mod.AdaptConfig.from_dict(merged)


def cmd_adapt(args):
    cfg = args.config_data
    target = _load_target(args.target or cfg.get("target"))
    config = _adapt_config(args, cfg)
    resume = None
    if args.resume:
        resume = adapt_mod.Ansatz.from_json(_read(args.resume))
    result = adapt_mod.run(target, config, reference=args.reference, resume=resume)
    atomic_write(args.out_trace or cfg.get("out_trace"), result.trace.to_csv(timing=not args.no_timing))
    out_ansatz = args.out_ansatz or cfg.get("out_ansatz")
    if out_ansatz:
        atomic_write(out_ansatz, result.ansatz.to_json(config.pool, config.spin_adapted))
    print(json.dumps({"status": result.status, "fidelity": result.fidelity,
                      "iterations": len(result.ansatz.steps)}), file=sys.stderr)
    return EXIT_OK if result.status == adapt_mod.CONVERGED else EXIT_UNREACHED


def frontier(target, grid, config, reference=None):
    """Rows ``(method, target_fidelity, fidelity, status, size, cnot, single_qubit, mcu_unexpanded)``.

    CVO-QRAM uses the smallest truncation reaching each grid fidelity; ADAPT
    uses the first iteration whose fidelity reaches it.
    """
    rows = []
    for g in grid:
        sub, f = targets.truncate(target, fidelity=g)
        plan = cvoqram.preprocess(sub)
        rep = cvoqram.counts_report(plan)
        rows.append(("cvoqram", g, f, "reached", sub.sparsity, rep["cnot_formula"],
                     rep["single_qubit_emitted"], rep["mcu_unexpanded"]))
    result = adapt_mod.run(target, config, reference=reference)
    for g in grid:
        rec = result.trace.first_reaching(g)
        if rec is None:
            rows.append((f"adapt-{config.pool}", g, result.fidelity, "unreached",
                         len(result.ansatz.steps), "", "", 0))
        else:
            rows.append((f"adapt-{config.pool}", g, rec.fidelity, "reached", rec.iteration,
                         rec.cnot_cum, rec.single_qubit_cum, 0))
    return rows


def frontier_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(FRONTIER_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "target_fidelity", "fidelity", "status", "size", "cnot",
                "single_qubit", "mcu_unexpanded"])
    for m, g, f, status, size, cnot, single, mcu in rows:
        w.writerow([m, repr(float(g)), repr(float(f)), status, size, cnot, single, mcu])
    return buf.getvalue()


def cmd_bench(args):
    cfg = args.config_data
    target = _load_target(args.target or cfg.get("target"))
    grid = _parse_grid(args.grid if args.grid is not None else cfg.get("grid")) or list(DEFAULT_GRID)
    config = _adapt_config(args, cfg)
    if args.epsilon is None and "epsilon" not in cfg and max(grid) < 1:
        config.epsilon = 1.0 - max(grid)
    rows = frontier(target, grid, config, reference=args.reference or cfg.get("reference"))
    atomic_write(args.out or cfg.get("out"), frontier_csv(rows))
    return EXIT_UNREACHED if any(r[3] == "unreached" for r in rows) else EXIT_OK


# parser -----------------------------------------------------------------
def _bool_flag(p, name, help):
    p.add_argument(name, action="store_true", default=None, help=help)


def build_parser():
    parser = argparse.ArgumentParser(prog="sparseprep", description=__doc__.splitlines()[0])
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="format of the stdout summary")
    parser.add_argument("--config", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground-state", help="exact ground state of a Pauli-sum Hamiltonian")
    p.add_argument("hamiltonian")
    p.add_argument("--out", default="-")
    p.add_argument("--cutoff", type=float, default=1e-12)
    p.add_argument("--reference", help="basis pattern used to break degeneracies")
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser("synth", help="seeded synthetic sector target")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--electrons", type=int, required=True)
    p.add_argument("--sz", type=float, default=0.0)
    p.add_argument("--decay", type=float, default=0.85)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--complex", action="store_true", help="random phases instead of signs")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("truncate", help="keep the largest amplitudes and renormalize")
    p.add_argument("target")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--keep", type=int)
    g.add_argument("--grid", help="fidelity thresholds, e.g. '0.5,0.8,0.95'")
    p.add_argument("--states-dir", help="also write each grid truncation here")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("spectrum", help="ranked |c| and cumulative weight")
    p.add_argument("target")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("esp-bound", help="CNOT bound of the symmetry-preserving ansatz")
    p.add_argument("--orbitals", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.set_defaults(func=cmd_esp_bound)

    p = sub.add_parser("cvoqram", help="compile and verify an exact loader circuit")
    p.add_argument("target")
    p.add_argument("--out-circuit")
    p.add_argument("--out-report", "--out", dest="out_report", default="-")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--no-verify", action="store_true")
    p.set_defaults(func=cmd_cvoqram)

    for name, func in (("adapt", cmd_adapt), ("bench", cmd_bench)):
        p = sub.add_parser(name, help="overlap-ADAPT run" if name == "adapt"
                           else "fidelity/gate-count frontier of both routes")
        p.add_argument("target", nargs="?")
        p.add_argument("--pool", choices=("qeb", "qubit"))
        p.add_argument("--epsilon", type=float)
        p.add_argument("--max-iterations", type=int)
        p.add_argument("--max-evaluations", type=int)
        p.add_argument("--gtol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        _bool_flag(p, "--spin-adapted", "restrict QEB supports to S_z-conserving ones")
        p.add_argument("--reference", help="initial basis pattern (default Hartree-Fock)")
        if name == "adapt":
            p.add_argument("--out-trace", "--out", dest="out_trace")
            p.add_argument("--out-ansatz")
            p.add_argument("--resume", help="ansatz JSON to continue from")
            p.add_argument("--no-timing", action="store_true",
                           help="leave the seconds column empty (byte-reproducible CSV)")
        else:
            p.add_argument("--grid")
            p.add_argument("--out")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        args.config_data = json.loads(_read(args.config)) if args.config else {}
        if not isinstance(args.config_data, dict):
            raise InputError("config must be a JSON object")
        return args.func(args)
    except (ConsistencyError, targets.GroundStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, targets.TargetError, cvoqram.LoaderError, adapt_mod.AdaptError,
            SimulationError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
