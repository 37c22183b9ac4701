"""Sensing-assisted energy beamforming: two-stage design and simulation.

Stage 1 spends part of each transmission block on an accuracy-optimal
sensing waveform to locate the energy receivers; stage 2 beamforms on the
reconstructed channels to maximize the minimum harvested power. The package
provides the array/channel models, the information-matrix machinery, both
convex designs, echo-domain estimators, and a reproducible Monte-Carlo
harness with a command-line front end.
"""

from .arrays import (
    ArrayGeometry,
    ErGroundTruth,
    PriorEstimate,
    channel,
    construct_csi,
    path_gain,
    steering_rx,
    steering_tx,
)
from .config import ScenarioConfig, config_from_dict, load_config
from .energy import (
    EnergyDesign,
    eigen_beams,
    harvested_power,
    min_avg_harvested,
    optimize_energy_covariance,
)
from .estimation import (
    EchoBlock,
    EstimationResult,
    WaveformBlock,
    estimate_crb_sampled,
    estimate_ml,
    generate_echo,
    synthesize_waveform,
)
from .fim import (
    Fim,
    TargetSet,
    UnidentifiableParametersError,
    assemble_fim,
    crb_diagonal,
    crb_trace,
)
from .sensing import (
    DurationInfeasibleError,
    SensingDesign,
    design_stage_one,
    minimal_duration,
    optimize_sensing_covariance,
    targets_from_priors,
)
from .simulate import (
    BlockResult,
    RunSummary,
    SweepSpec,
    auto_gamma,
    run_block,
    run_monte_carlo,
    sweep,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BlockResult",
    "EchoBlock",
    "EnergyDesign",
    "ErGroundTruth",
    "EstimationResult",
    "Fim",
    "DurationInfeasibleError",
    "PriorEstimate",
    "RunSummary",
    "ScenarioConfig",
    "SensingDesign",
    "SweepSpec",
    "TargetSet",
    "UnidentifiableParametersError",
    "WaveformBlock",
    "assemble_fim",
    "auto_gamma",
    "channel",
    "config_from_dict",
    "construct_csi",
    "crb_diagonal",
    "crb_trace",
    "design_stage_one",
    "eigen_beams",
    "estimate_crb_sampled",
    "estimate_ml",
    "generate_echo",
    "harvested_power",
    "load_config",
    "min_avg_harvested",
    "minimal_duration",
    "optimize_energy_covariance",
    "optimize_sensing_covariance",
    "path_gain",
    "run_block",
    "run_monte_carlo",
    "steering_rx",
    "steering_tx",
    "sweep",
    "synthesize_waveform",
    "targets_from_priors",
    "write_csv",
]
