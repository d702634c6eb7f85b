"""scamp: state-comparison amplifier metrics, exactly and by simulation.

Exact closed-form performance metrics (success probability, fidelity,
noise figure) of a nondeterministic coherent-state amplifier built from
state comparison and photon subtraction, cross-validated by a
bit-reproducible shot-by-shot Monte Carlo simulation of the same circuit.
"""

from .core import (
    VACUUM,
    AmplifierConfig,
    BeamSplitter,
    ComplexAmplitude,
    DetectorModel,
    EnsembleKind,
    InputEnsemble,
    beam_splitter_transform,
    coherent_overlap,
    no_click_probability,
)
from .analytic import (
    BinaryMetrics,
    NeverSucceedsError,
    QuadratureMoments,
    bessel_i0_scaled,
    binary_metrics,
    binary_quadrature_moments,
    fidelity_test_prob,
    phase_covariant_fidelity,
    phase_covariant_joint_prob,
    phase_covariant_success_prob,
    success_prob_given,
)
from .montecarlo import (
    BATCH_SIZE,
    BatchTotals,
    EstimateSummary,
    TrialOutcome,
    TrialStream,
    batch_totals,
    estimate,
    run_trial,
    substream_seed,
    summarize,
)
from .experiments import (
    CSV_HEADER,
    GainGrid,
    OracleConvergenceError,
    PRESET_NAMES,
    SweepRow,
    SweepSpec,
    emit_csv,
    phase_quadrature_oracle,
    preset_specs,
    read_csv,
    run_preset,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "VACUUM",
    "AmplifierConfig",
    "BeamSplitter",
    "ComplexAmplitude",
    "DetectorModel",
    "EnsembleKind",
    "InputEnsemble",
    "beam_splitter_transform",
    "coherent_overlap",
    "no_click_probability",
    "BinaryMetrics",
    "NeverSucceedsError",
    "QuadratureMoments",
    "bessel_i0_scaled",
    "binary_metrics",
    "binary_quadrature_moments",
    "fidelity_test_prob",
    "phase_covariant_fidelity",
    "phase_covariant_joint_prob",
    "phase_covariant_success_prob",
    "success_prob_given",
    "BATCH_SIZE",
    "BatchTotals",
    "EstimateSummary",
    "TrialOutcome",
    "TrialStream",
    "batch_totals",
    "estimate",
    "run_trial",
    "substream_seed",
    "summarize",
    "CSV_HEADER",
    "GainGrid",
    "OracleConvergenceError",
    "PRESET_NAMES",
    "SweepRow",
    "SweepSpec",
    "emit_csv",
    "phase_quadrature_oracle",
    "preset_specs",
    "read_csv",
    "run_preset",
    "sweep",
    "__version__",
]
