"""Low-complexity fading channel models and system-level mobility simulation."""

from .beamforming import (
    ArrayGeometry,
    Beam,
    ElementPattern,
    GainFitModel,
    apply_beam_weights,
    apply_gain_model,
    default_beam_set,
    element_pattern_3gpp,
    fit_gain_model,
    single_ray_gain,
    steering_weights,
)
from .channel_stats import (
    ChannelTuple,
    FadingLUT,
    LinkChannelAssignment,
    TupleLibrary,
    assign_link_channel,
    build_fading_lut,
    ingest_tuples,
    export_tuples,
    sample_fading,
    scale_coherence_time,
    synthesize_tuple_library,
)
from .fading import (
    DopplerParams,
    EnvelopeStats,
    FadingProcess,
    coherence_time_jakes,
    doppler_shift,
    estimate_envelope_stats,
    generate_multipath_envelope,
    max_doppler_hz,
    theoretical_autocorrelation,
)
from .handover import A3Tracker, HandoverProcess, MobilityThresholds, RlfMonitor
from .measurement import (
    alpha_from_time_constant,
    l1_filter,
    l3_filter_update,
    measurement_error_sample,
)
from .scenario import Scenario, desk_scenario, load_scenario
from .simulator import KpiReport, SimConfig, run_simulation

__version__ = "0.1.0"
