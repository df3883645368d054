"""Hamiltonians whose exponential is exactly a target quantum gate.

Find them two ways: spectrally, by reducing an interaction family to
the commutant of the target's principal generator and putting the
remaining eigenvalues on the 2*pi lattice; or numerically, by
stochastic gradient ascent of the state fidelity over random inputs.
Verify either kind against the exact conditions.
"""

from .evolution import (HamiltonianModel, average_gate_fidelity, evolve,
                        fidelity, fidelity_gradient, haar_state, haar_states,
                        real_embed, unitary_fidelity)
from .gates import (GateTarget, builtin_gate, gate_from_file, gate_to_file,
                    reflection_matrix, spectral_decomposition)
from .pauli import (FAMILIES, OperatorBasis, PauliString, commutator,
                    dense_matrix, pauli_decompose, standard_bases)
from .pst import (WalkChain, krawtchouk_chain, mirror_symmetric,
                  pst_as_gate_design, pst_check)
from .spectral import (NuAssignment, ScanVerdict, SpectralReport,
                       builtin_solution, builtin_solution_names,
                       commutant_directions, commutant_restrict,
                       integer_infeasibility_scan, lattice_residuals,
                       principal_generator, toffoli_family, verify_solution)
from .training import (TrainConfig, TrainingRun, build_search_space,
                       multi_restart, restart_seeds, sgd_step, sweep, train)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
