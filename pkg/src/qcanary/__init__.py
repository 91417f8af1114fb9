"""Black-box privacy auditing for small variational quantum classifiers.

The package plants near-indistinguishable canary records into training
data through offset angle encodings, trains paired models, and converts
seen/unseen recognition rates into an empirical lower bound on the
privacy budget, next to closed-form upper bounds for depolarizing and
finite-shot noise.
"""

from .audit import (AuditConfig, AuditReport, DomainError, EpsilonEstimate,
                    TrialMatrix, audit, baseline_qdp_audit, bound_lower,
                    bound_upper, calibrate_kappa, epsilon_hat,
                    generate_canaries, run_trial, sample_complexity_estimate,
                    simulate_known_mechanism, theory_epsilon_depolarizing,
                    theory_epsilon_measurement, trials_to_target)
from .circuits import (Gate, Observable, ParamCircuit, apply_circuit_density,
                       apply_circuit_pure, build_real_amplitudes,
                       expectation, gate_unitary, parameter_shift_gradient,
                       rotation_matrix, sample_counts, with_noise_ids,
                       z_on_qubit)
from .classifier import (ModelSpec, TrainConfig, TrainedModel, eval_model,
                         evaluate_losses, loss, loss_gradient, mean_loss,
                         predict, train)
from .data import Dataset, load_csv, load_iris_binary, synth_gaussians
from .encoding import (CanaryPair, OffsetSpec, angle_encode,
                       angle_encode_offset, gamma_bound, make_canary_pair,
                       pair_distances, sample_offsets, sigma_bound)
from .noise import NoiseSpec, depolarize_global, depolarize_qubit
from .states import (DensityMatrix, Povm, PureState, density, fidelity_pure,
                     hermitian_eigenvalues, pure, pure_to_density,
                     pure_trace_distance, tensor_product, trace_distance)

__version__ = "0.1.0"

__all__ = [
    "AuditConfig", "AuditReport", "CanaryPair", "Dataset", "DensityMatrix",
    "DomainError", "EpsilonEstimate", "Gate", "ModelSpec", "NoiseSpec",
    "Observable", "OffsetSpec", "ParamCircuit", "Povm", "PureState",
    "TrainConfig", "TrainedModel", "TrialMatrix", "angle_encode",
    "angle_encode_offset", "apply_circuit_density", "apply_circuit_pure",
    "audit", "baseline_qdp_audit", "bound_lower", "bound_upper",
    "build_real_amplitudes", "calibrate_kappa", "density",
    "depolarize_global", "depolarize_qubit", "epsilon_hat", "eval_model",
    "evaluate_losses", "expectation", "fidelity_pure", "gamma_bound",
    "gate_unitary", "generate_canaries", "hermitian_eigenvalues",
    "load_csv", "load_iris_binary", "loss", "loss_gradient",
    "make_canary_pair", "mean_loss", "pair_distances",
    "parameter_shift_gradient", "predict", "pure", "pure_to_density",
    "pure_trace_distance", "rotation_matrix", "run_trial",
    "sample_complexity_estimate", "sample_counts", "sample_offsets",
    "sigma_bound", "simulate_known_mechanism", "synth_gaussians",
    "tensor_product", "theory_epsilon_depolarizing",
    "theory_epsilon_measurement", "trace_distance", "train",
    "trials_to_target", "with_noise_ids", "z_on_qubit",
]
