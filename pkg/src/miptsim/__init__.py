"""Monitored-circuit simulator: entanglement, magic, and participation
entropy in measurement-induced phase transitions."""

from .entropy import EntropyValue, ProbDist, RenyiOrder, mutual_information, renyi_entropy
from .errors import (CapacityError, ConfigError, ContractViolation, DomainError,
                     FitError, MiptError, NormalizationError,
                     NumericalConsistencyError, UnsupportedRegionError)
from .fits import (FitResult, RelaxationCurve, chord_length,
                   fit_exponential_tail, fit_linear, fit_log_slope,
                   relaxation_curve, scan_collapse_z)
from .harness import (CSV_COLUMNS, ObservableSchedule, TrajectoryRecord,
                      emit_results, read_results, run_ensemble, run_trajectory)
from .models import MODELS, CircuitSpec, duality_check, duality_map
from .mps import (MpsState, WeakMeasurementSpec, apply_unitary,
                  entanglement_entropy, new_product_state, pauli_expectation,
                  projective_measure, weak_measure)
from .paulis import PauliString
from .sampling import (EstimatorResult, estimate_bpmi, estimate_bsmi,
                       estimate_pe, estimate_sre, magic_estimates,
                       restricted_pauli_trace, sample_bitstring,
                       sample_bitstrings, sample_pauli_string,
                       sample_pauli_strings)
from .stabilizer import (StabilizerTableau, apply_clifford, clifford_gate,
                         measure_pauli, new_tableau, pauli_rotation_gate,
                         random_two_qubit_clifford, stabilizer_bpmi,
                         stabilizer_ee, stabilizer_pe, stabilizer_pe_subsystem)

__version__ = "0.1.0"
