"""Scenario constructors: collective spins, multipoles, Pauli noise, imaging,
scaling fits, bound toys and small random suites."""
from .imaging import ImagingGrid, imaging_model, imaging_qfi
from .multipole import (TensorFamily, dicke_choi_fisher, dicke_choi_probe, multipole_model,
                        scalar_channel, singlet_augmented_probe, spherical_tensors)
from .pauli import bell_probe, no_memory_bound_check, pauli_labels, pauli_model
from .scaling import ScalingReport, channel_count, fit_exponent, scaling_study
from .spin import SpinAlgebra, collective_spin_model, dicke_state, spin_algebra
from .toys import scenario_bound_survey, toy_study

__all__ = ["ImagingGrid", "imaging_model", "imaging_qfi", "TensorFamily", "dicke_choi_fisher",
           "dicke_choi_probe", "multipole_model", "scalar_channel", "singlet_augmented_probe",
           "spherical_tensors", "bell_probe", "no_memory_bound_check", "pauli_labels", "pauli_model",
           "ScalingReport", "channel_count", "fit_exponent", "scaling_study", "SpinAlgebra",
           "collective_spin_model", "dicke_state", "spin_algebra", "scenario_bound_survey", "toy_study"]
