"""Stochastic gradient ascent over Hamiltonian parameters.

Each epoch draws states_per_epoch fresh Haar-random states, walks them
in batches of batch_size, and applies momentum updates
v <- gamma v + eta_k mean-grad, lambda <- lambda + v with the decayed
rate eta_k = eta0 / (1 + k alpha). Convergence is judged by the closed
form average gate fidelity, which is exact and cheap at d <= 16, not by
the noisy per-batch fidelities.
"""

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .evolution import HamiltonianModel, fidelity, haar_states, unitary_fidelity
from .gates import GateTarget, builtin_gate
from .pauli import OperatorBasis, format_term, parse_term, standard_bases
from .spectral import commutant_directions, principal_generator

STAGNATION_PATIENCE = 50     # epochs without 1e-12 improvement before giving up
STAGNATION_TOL = 1e-12

INIT_KINDS = ("zeros", "constant", "gaussian")


def parse_init(text):
    """'zeros' | 'constant:c' | 'gaussian:s' -> (kind, value)."""
    kind, _, arg = text.partition(":")
    if kind == "zeros":
        if arg:
            raise ValueError("zeros takes no argument")
        return ("zeros", 0.0)
    if kind in ("constant", "gaussian"):
        if not arg:
            raise ValueError(f"{kind} needs a value, e.g. {kind}:1.0")
        return (kind, float(arg))
    raise ValueError(f"unknown init {text!r}; use zeros, constant:c, gaussian:s")


@dataclass
class TrainConfig:
    """Hyperparameters and search-space selection for one training run."""

    gate: GateTarget
    basis_family: str
    reduce_by_commutant: bool = True
    eta0: float = 1.0
    gamma: float = 0.5
    alpha: float = 0.005
    batch_size: int = 2
    states_per_epoch: int = 200
    max_epochs: int = 2000
    target_fidelity: float = 1 - 1e-6
    seed: int = 0
    init: tuple = ("gaussian", 1.0)

    def __post_init__(self):
        if isinstance(self.gate, str):
            self.gate = builtin_gate(self.gate)
        if isinstance(self.init, str):
            self.init = parse_init(self.init)
        if self.init[0] not in INIT_KINDS:
            raise ValueError(f"unknown init kind {self.init[0]!r}")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be > 0")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        for name in ("batch_size", "states_per_epoch", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.states_per_epoch % self.batch_size != 0:
            raise ValueError(
                f"states_per_epoch ({self.states_per_epoch}) must be a "
                f"multiple of batch_size ({self.batch_size})")
        if not 0 < self.target_fidelity <= 1:
            raise ValueError("target_fidelity must be in (0, 1]")
        if self.gate.n_qubits is None:
            raise ValueError(
                f"gate {self.gate.name!r} does not act on a qubit register")


def _init_lambda(cfg, size):
    kind, value = cfg.init
    if kind == "zeros":
        return np.zeros(size)
    if kind == "constant":
        return np.full(size, value, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
    return rng.normal(scale=value, size=size)


def build_search_space(cfg):
    """The model the run optimizes: family basis, optionally cut down to
    the commutant of the target's principal generator, with initialized
    parameters.

    Reduction keeps sparse canonical directions and drops the pure
    identity direction (a global phase the objective cannot see), so
    the parameter count is the commutant dimension minus one.
    """
    basis = standard_bases(cfg.gate.n_qubits, cfg.basis_family)
    if cfg.reduce_by_commutant:
        H_G = principal_generator(cfg.gate)
        basis = commutant_directions(basis, H_G, drop_identity=True)
        if len(basis) == 0:
            raise ValueError(
                f"commutant of {cfg.gate.name!r} within "
                f"{cfg.basis_family!r} is trivial; nothing to train")
    return HamiltonianModel(basis, _init_lambda(cfg, len(basis)))


def sgd_step(lam, v, batch, eta, gamma, stack, gate_matrix):
    """One momentum update from a batch of states.

    Returns (lambda', v', batch fidelities at the pre-update lambda).
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    fids, grads = kernels.fidelity_grad_batch(stack, lam, gate_matrix, batch)
    gbar = grads.mean(axis=0)
    if not np.all(np.isfinite(gbar)):
        raise FloatingPointError("non-finite gradient (eigensolver failure)")
    v2 = gamma * v + eta * gbar
    return lam + v2, v2, fids


@dataclass
class TrainingRun:
    """Everything a finished run produced."""

    config: TrainConfig
    model: HamiltonianModel = field(repr=False)
    lambda_final: np.ndarray
    velocity_final: np.ndarray
    history: list          # per epoch: (mean_batch_fidelity, avg_gate_fidelity)
    epochs_used: int
    converged: bool
    avg_fidelity: float


def train(cfg, progress=None):
    """Run one seeded training loop to target fidelity, stagnation, or
    the epoch cap. Bit-reproducible for a fixed (config, kernel backend).
    """
    model = build_search_space(cfg)
    stack = np.ascontiguousarray(model.stack)
    G = cfg.gate.matrix
    d = cfg.gate.dim
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])

    lam = model.lam.copy()
    v = np.zeros_like(lam)
    steps = cfg.states_per_epoch // cfg.batch_size

    def avg_fid(cur):
        w, V = np.linalg.eigh(np.tensordot(cur, stack, axes=1))
        return unitary_fidelity((V * np.exp(1j * w)) @ V.conj().T, cfg.gate)

    f_avg = avg_fid(lam)
    history = []
    converged = f_avg >= cfg.target_fidelity
    best = f_avg
    age = 0
    epochs = 0

    while not converged and epochs < cfg.max_epochs:
        k = epochs
        eta = cfg.eta0 / (1 + k * cfg.alpha)
        states = haar_states(d, cfg.states_per_epoch, rng)
        fid_sum = 0.0
        for s in range(steps):
            batch = states[s * cfg.batch_size:(s + 1) * cfg.batch_size]
            lam, v, fids = sgd_step(lam, v, batch, eta, cfg.gamma, stack, G)
            if not np.all(np.isfinite(lam)):
                raise FloatingPointError("parameters diverged to non-finite")
            fid_sum += float(np.sum(fids))
        f_avg = avg_fid(lam)
        history.append((fid_sum / cfg.states_per_epoch, f_avg))
        epochs += 1
        if progress is not None:
            progress(epochs, history[-1][0], f_avg)
        if f_avg >= cfg.target_fidelity:
            converged = True
            break
        if f_avg > best + STAGNATION_TOL:
            best = f_avg
            age = 0
        else:
            age += 1
            if age >= STAGNATION_PATIENCE:
                break

    return TrainingRun(
        config=cfg,
        model=model.with_lambda(lam),
        lambda_final=lam,
        velocity_final=v,
        history=history,
        epochs_used=epochs,
        converged=converged,
        avg_fidelity=f_avg,
    )


def restart_seeds(master_seed, restarts):
    """Independent 64-bit seeds for a multi-start harness, derived
    deterministically from one master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(s) for s in ss.generate_state(restarts, dtype=np.uint64)]


def _train_for_pool(cfg):
    return train(cfg)


def multi_restart(cfg, restarts, jobs=1):
    """restarts independent runs differing only in derived seed; returns
    the list of TrainingRuns in restart order regardless of jobs."""
    cfgs = [replace(cfg, seed=s) for s in restart_seeds(cfg.seed, restarts)]
    if jobs <= 1:
        return [train(c) for c in cfgs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_train_for_pool, cfgs))


def sweep(model, g, mode, sweep_range, n_points, test_states, index=None):
    """Fidelity of each test state while scaling all of lambda (mode
    'global_scale') or sliding one entry (mode 'single_param').

    Returns rows of (grid_value, state_index, fidelity).
    """
    lo, hi = sweep_range
    grid = np.linspace(lo, hi, n_points)
    rows = []
    for gv in grid:
        if mode == "global_scale":
            lam2 = gv * model.lam
        elif mode == "single_param":
            if index is None or not 0 <= index < len(model.lam):
                raise IndexError(
                    f"single_param index {index} out of range for "
                    f"{len(model.lam)} parameters")
            lam2 = model.lam.copy()
            lam2[index] = gv
        else:
            raise ValueError(f"unknown sweep mode {mode!r}")
        m2 = model.with_lambda(lam2)
        for si, psi in enumerate(test_states):
            rows.append((float(gv), si, fidelity(m2, g, psi)))
    return rows


def _phase_aligned_export(run):
    """Exported (basis terms, coefficients) with the global phase removed.

    The objective cannot see a global phase, so a run may converge onto
    exp(iH) = e^{i phi} G. Shifting the identity component by -phi picks
    the representative whose exponential hits the gate itself; fidelity
    is unchanged. Without this the eigenphase check would report a
    uniform offset of phi on every converged trained solution.
    """
    m = run.model
    w, V = np.linalg.eigh(m.matrix())
    U = (V * np.exp(1j * w)) @ V.conj().T
    phi = float(np.angle(np.trace(run.config.gate.matrix.conj().T @ U)))
    terms = [list(el) for el in m.basis.terms]
    lam = [float(x) for x in run.lambda_final]
    ident = "I" * m.basis.n_qubits
    for j, el in enumerate(terms):
        if len(el) == 1 and el[0][0] == ident:
            lam[j] -= phi / el[0][1]
            break
    else:
        terms.append([(ident, 1.0)])
        lam.append(-phi)
    return terms, lam


def solution_to_dict(run):
    cfg = run.config
    terms, lam = _phase_aligned_export(run)
    return {
        "gate": cfg.gate.name,
        "basis_family": cfg.basis_family,
        "reduced": bool(cfg.reduce_by_commutant),
        "basis": [[format_term(l, c) for l, c in element]
                  for element in terms],
        "lambda": lam,
        "avg_fidelity": float(run.avg_fidelity),
        "seed": int(cfg.seed),
        "epochs": int(run.epochs_used),
    }


def model_from_solution(data):
    """Rebuild (model, gate_name) from a parsed solution dict."""
    terms = [[parse_term(t) for t in element] for element in data["basis"]]
    if not terms or not terms[0]:
        raise ValueError("solution has an empty basis")
    n = len(terms[0][0][0])
    basis = OperatorBasis(n_qubits=n, terms=terms)
    lam = np.asarray(data["lambda"], dtype=float)
    return HamiltonianModel(basis, lam), data["gate"]


def save_solution(run, path):
    with open(path, "w") as fh:
        json.dump(solution_to_dict(run), fh, indent=1)
        fh.write("\n")


def load_solution(path):
    with open(path) as fh:
        return json.load(fh)


def save_history(run, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_batch_fidelity", "avg_gate_fidelity"])
        for k, (mbf, agf) in enumerate(run.history, start=1):
            writer.writerow([k, f"{mbf:.12g}", f"{agf:.12g}"])


def save_sweep(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grid_value", "state_index", "fidelity"])
        for gv, si, f in rows:
            writer.writerow([f"{gv:.12g}", si, f"{f:.12g}"])
