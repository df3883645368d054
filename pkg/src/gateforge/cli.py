"""Command-line front end.

Subcommands: verify a solution file against a gate, train interaction
parameters, sweep fidelity curves for plotting, check spin chains for
perfect state transfer, print commutant reductions, and scan integer
eigenvalue assignments for feasibility.

Exit status is a stable scripting contract: 0 for success (verified,
converged, feasible, transfer found), 1 for a negative verdict reached
honestly (verification failed, no restart converged, infeasible, no
transfer), 2 for usage, parse, or environment errors.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import minimize_scalar

from .evolution import haar_states
from .gates import BUILTIN_GATES, builtin_gate, gate_from_file
from .pauli import FAMILIES, format_term, standard_bases
from .pst import (krawtchouk_chain, load_chain, mirror_symmetric,
                  pst_as_gate_design, save_chain, transfer_residuals)
from .spectral import (commutant_directions, commutant_restrict,
                       integer_infeasibility_scan, principal_generator,
                       verify_solution)
from .training import (TrainConfig, load_solution, model_from_solution,
                       multi_restart, save_history, save_solution,
                       save_sweep, sweep, train)

SWEEP_STATES = 5


def default_seed():
    """Seed precedence: --seed flag, then GATEFORGE_SEED, then 0."""
    raw = os.environ.get("GATEFORGE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"GATEFORGE_SEED={raw!r} is not an integer")


@dataclass
class RunManifest:
    """Planned outputs of one invocation, checked before any compute."""

    subcommand: str
    out_dir: str = "."
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    inputs: tuple = ()
    outputs: list = field(default_factory=list)

    def plan(self, name):
        path = os.path.join(self.out_dir, name)
        self.outputs.append(path)
        return path

    def prepare(self, force):
        # refuse to clobber anything unless the caller said --force
        os.makedirs(self.out_dir, exist_ok=True)
        if force:
            return
        clashes = [p for p in self.outputs if os.path.exists(p)]
        if clashes:
            raise FileExistsError(
                f"refusing to overwrite {', '.join(clashes)} (use --force)")


def resolve_solution(ref):
    """A solution argument is a JSON path or a bundled fixture name."""
    if os.path.exists(ref):
        return load_solution(ref), ref
    name = ref[:-5] if ref.endswith(".json") else ref
    fixture = resources.files("gateforge") / "solutions" / f"{name}.json"
    if fixture.is_file():
        return json.loads(fixture.read_text()), f"bundled:{name}"
    raise FileNotFoundError(
        f"no solution file or bundled fixture named {ref!r}")


def resolve_gate(args, fallback=None):
    if getattr(args, "gate_file", None):
        return gate_from_file(args.gate_file)
    name = getattr(args, "gate", None) or fallback
    if name is None:
        raise ValueError("no gate given (use --gate or --gate-file)")
    return builtin_gate(name)


def parse_range(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"range must look like LO:HI, got {text!r}")
    if not hi > lo:
        raise ValueError(f"empty range {text!r}")
    return lo, hi


def add_gate_flags(p, required=False):
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--gate", metavar="NAME",
                     help=f"builtin gate: {', '.join(BUILTIN_GATES)}")
    grp.add_argument("--gate-file", metavar="PATH",
                     help="unitary from a plain-text matrix file")


def add_seed_flag(p):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: GATEFORGE_SEED or 0)")


def cmd_verify(args):
    data, label = resolve_solution(args.solution)
    model, gate_name = model_from_solution(data)
    g = resolve_gate(args, fallback=gate_name)
    basis = None
    family = data.get("basis_family")
    if family in FAMILIES:
        basis = standard_bases(model.basis.n_qubits, family)
    report = verify_solution(model.matrix(), g, tol=args.tol, basis=basis)

    doc = {"solution": label, "gate": g.name, **report.to_dict()}
    text = json.dumps(doc, indent=1)
    if args.out:
        manifest = RunManifest("verify", out_dir=os.path.dirname(args.out) or ".")
        manifest.outputs.append(args.out)
        manifest.prepare(args.force)
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        for key, val in report.verdicts.items():
            if val is not None:
                print(f"{key}: {'pass' if val else 'FAIL'}")
        print(f"report written to {args.out}")
    else:
        print(text)
    return 0 if report.passed else 1


def cmd_reduce(args):
    g = resolve_gate(args)
    if g.n_qubits is None:
        raise ValueError(f"gate {g.name!r} does not act on a qubit register")
    basis = standard_bases(g.n_qubits, args.basis)
    H_G = principal_generator(g)
    reduced = commutant_restrict(basis, H_G)
    dirs = commutant_directions(basis, H_G)
    print(f"family {args.basis} on {g.n_qubits} qubits: {len(basis)} elements")
    print(f"commutant of the {g.name} generator: {len(reduced)} dimensions")
    for element in dirs.terms:
        print("  " + " + ".join(format_term(l, c) for l, c in element))
    return 0


def cmd_scan(args):
    g = resolve_gate(args)
    if g.n_qubits is None:
        raise ValueError(f"gate {g.name!r} does not act on a qubit register")
    basis = standard_bases(g.n_qubits, args.basis)
    H_G = principal_generator(g)
    reduced = commutant_restrict(basis, H_G)
    verdict = integer_infeasibility_scan(reduced, g, nu_max=args.nu_max,
                                         seed=args.seed)
    kind = "exhaustive" if verdict.exhaustive else f"bounded by nu_max={args.nu_max}"
    print(f"gate {g.name}, family {args.basis}: "
          f"{'feasible' if verdict.feasible else 'infeasible'} ({kind}, "
          f"{verdict.assignments_tried} assignments tried)")
    if verdict.obstruction:
        print(f"obstruction: {verdict.obstruction['text']}")
    if verdict.feasible:
        print(f"witness assignment: {verdict.witness_assignment}")
        report = verify_solution(verdict.witness, g)
        print(f"witness verifies: {report.passed}")
    return 0 if verdict.feasible else 1


def cmd_train(args):
    seed = args.seed if args.seed is not None else default_seed()
    cfg = TrainConfig(
        gate=resolve_gate(args),
        basis_family=args.basis,
        reduce_by_commutant=args.reduce,
        eta0=args.eta0, gamma=args.gamma, alpha=args.alpha,
        batch_size=args.batch_size, states_per_epoch=args.states_per_epoch,
        max_epochs=args.epochs, target_fidelity=args.target_fidelity,
        seed=seed, init=args.init,
    )
    manifest = RunManifest("train", out_dir=args.out, seed=seed,
                           overrides={"restarts": args.restarts})
    if args.restarts == 1:
        paths = [(manifest.plan("solution.json"), manifest.plan("history.csv"))]
    else:
        paths = [(manifest.plan(f"solution_r{k}.json"),
                  manifest.plan(f"history_r{k}.csv"))
                 for k in range(1, args.restarts + 1)]
    manifest.prepare(args.force)

    if args.restarts == 1:
        runs = [train(cfg)]
    else:
        runs = multi_restart(cfg, args.restarts, jobs=args.jobs)
    for k, (run, (sol_path, hist_path)) in enumerate(zip(runs, paths), start=1):
        save_solution(run, sol_path)
        save_history(run, hist_path)
        print(f"restart {k}: converged={run.converged} "
              f"epochs={run.epochs_used} "
              f"avg_gate_fidelity={run.avg_fidelity:.12f}")
    best = max(runs, key=lambda r: r.avg_fidelity)
    print(f"best average gate fidelity: {best.avg_fidelity:.12f} "
          f"({len(best.lambda_final)} parameters, files in {args.out})")
    hit = any(r.converged and r.avg_fidelity >= cfg.target_fidelity
              for r in runs)
    return 0 if hit else 1


def cmd_sweep(args):
    seed = args.seed if args.seed is not None else default_seed()
    data, label = resolve_solution(args.solution)
    model, gate_name = model_from_solution(data)
    g = resolve_gate(args, fallback=gate_name)
    if model.matrix().shape != g.matrix.shape:
        raise ValueError(f"solution dimension {model.matrix().shape[0]} does "
                         f"not match gate dimension {g.dim}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    states = haar_states(g.dim, args.num_states, rng)

    jobs = []
    if args.mode == "global":
        rng_pair = args.range or (0.9, 1.1)
        jobs.append(("global_scale", rng_pair, None, "sweep_global.csv"))
    elif args.mode == "single":
        if args.index is None:
            raise ValueError("--mode single requires --index")
        rng_pair = args.range or (-10.0, 10.0)
        jobs.append(("single_param", rng_pair, args.index,
                     f"sweep_param_{args.index:02d}.csv"))
    else:
        # default protocol: both global grids plus every single parameter
        jobs.append(("global_scale", (0.9, 1.1), None, "sweep_global_fine.csv"))
        jobs.append(("global_scale", (0.0, 1.2), None, "sweep_global_wide.csv"))
        for i in range(len(model.lam)):
            jobs.append(("single_param", (-10.0, 10.0), i,
                         f"sweep_param_{i:02d}.csv"))

    manifest = RunManifest("sweep", out_dir=args.out, seed=seed,
                           inputs=(label,))
    paths = [manifest.plan(name) for (_, _, _, name) in jobs]
    manifest.prepare(args.force)
    for (mode, rng_pair, index, _), path in zip(jobs, paths):
        rows = sweep(model, g, mode, rng_pair, args.points, states,
                     index=index)
        save_sweep(rows, path)
        print(f"wrote {path}")
    return 0


def cmd_pst(args):
    if args.krawtchouk is not None:
        if args.krawtchouk < 2:
            raise ValueError("chain length must be at least 2")
        chain = krawtchouk_chain(args.krawtchouk)
    else:
        chain = load_chain(args.chain)
    if args.save_chain:
        manifest = RunManifest("pst",
                               out_dir=os.path.dirname(args.save_chain) or ".")
        manifest.outputs.append(args.save_chain)
        manifest.prepare(args.force)
        save_chain(chain, args.save_chain)
        print(f"chain written to {args.save_chain}")

    if not mirror_symmetric(chain):
        print("chain is not mirror-symmetric: transfer is impossible")
        return 1

    if args.time is not None:
        t_best = float(args.time)
        r_best = float(transfer_residuals(chain, [t_best])[0])
        hit = r_best <= args.tol
        print(f"t = {t_best:.12g}: max residual {r_best:.3e} "
              f"-> {'transfer' if hit else 'no transfer'}")
    else:
        lo, hi = args.grid_range
        times = np.linspace(lo, hi, args.grid_points + 1)[1:]
        worst = transfer_residuals(chain, times)
        k = int(np.argmin(worst))
        t_best, r_best = float(times[k]), float(worst[k])
        # transfer times rarely sit on a grid point; polish the best
        # bracket before judging. Minimize over the offset, not the
        # absolute time: fminbound cannot resolve past sqrt(eps)*|x|
        if len(times) > 1 and r_best > args.tol:
            step = float(times[1] - times[0])
            res = minimize_scalar(
                lambda d: float(transfer_residuals(chain, [t_best + d])[0]),
                bounds=(-step, step), method="bounded",
                options={"xatol": 1e-13})
            if res.fun < r_best:
                t_best, r_best = float(t_best + res.x), float(res.fun)
        hit = r_best <= args.tol
        print(f"best of {len(times)} times in ({times[0]:.6g}, "
              f"{times[-1]:.6g}]: t = {t_best:.12g}, "
              f"max residual {r_best:.3e} "
              f"-> {'transfer' if hit else 'no transfer'}")
    if args.as_gate:
        report = pst_as_gate_design(chain, t_best)
        print(f"gate-design view at t = {t_best:.12g}: "
              f"commutes={report.verdicts['commutes']} "
              f"lattice={report.verdicts['lattice']} "
              f"matches={report.verdicts['matches_gate']}")
    return 0 if hit else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gateforge",
        description="Find and check Hamiltonians whose exponential is a "
                    "target gate.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify", help="check a solution file against a gate")
    p.add_argument("solution", help="solution JSON path or bundled name")
    add_gate_flags(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", metavar="PATH", help="write the report JSON here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="print the commutant reduction")
    add_gate_flags(p, required=True)
    p.add_argument("--basis", required=True, choices=sorted(FAMILIES))
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("scan", help="integer feasibility scan over a family")
    add_gate_flags(p, required=True)
    p.add_argument("--basis", required=True, choices=sorted(FAMILIES))
    p.add_argument("--nu-max", type=int, default=5)
    add_seed_flag(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("train", help="optimize interaction parameters")
    add_gate_flags(p, required=True)
    p.add_argument("--basis", required=True, choices=sorted(FAMILIES))
    p.add_argument("--reduce", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="restrict to the generator's commutant first")
    p.add_argument("--init", default="gaussian:1",
                   help="zeros | constant:c | gaussian:s")
    p.add_argument("--eta0", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.005)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--states-per-epoch", type=int, default=200)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--target-fidelity", type=float, default=1 - 1e-6)
    add_seed_flag(p)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="fidelity curves around a solution")
    p.add_argument("solution", help="solution JSON path or bundled name")
    add_gate_flags(p)
    p.add_argument("--mode", choices=("global", "single"),
                   help="one grid; omit to write the full default set")
    p.add_argument("--range", type=parse_range, metavar="LO:HI")
    p.add_argument("--index", type=int, help="parameter index for --mode single")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--num-states", type=int, default=SWEEP_STATES)
    add_seed_flag(p)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pst", help="perfect state transfer check")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--chain", metavar="PATH", help="chain JSON file")
    src.add_argument("--krawtchouk", type=int, metavar="N",
                     help="use the sqrt(k(N-k)) chain of length N")
    p.add_argument("--time", type=float,
                   help="check one time instead of scanning")
    p.add_argument("--grid-range", type=parse_range, default=(0.0, 20.0),
                   metavar="LO:HI")
    p.add_argument("--grid-points", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--as-gate", action="store_true",
                   help="also report the gate-design view")
    p.add_argument("--save-chain", metavar="PATH")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pst)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
