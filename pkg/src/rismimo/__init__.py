"""Simulation of RIS-based MIMO-QAM transmission with harmonic modulation."""

from .analysis import (
    BerPrediction,
    SnrPair,
    ber_16qam_approx,
    ber_16qam_exact,
    max_symbol_rate,
    predict_ber,
    snr_from_rx1,
    snr_rx1,
    zf_snr,
)
from .channel import (
    BeamformingMatrix,
    ChannelMatrix,
    LinkGeometry,
    RxAntennaConfig,
    beamforming_matrix,
    channel_matrix,
    flat_fading_transmit,
    free_space_channel,
    received_signal_theorem1,
)
from .errors import (
    ConvergenceError,
    DomainError,
    LengthError,
    NumericalError,
    RisError,
    ShapeError,
    SingularChannelError,
    UndefinedRatioError,
    UnreachableTargetError,
)
from .modulation import (
    QAM16_TABLE,
    QamMapEntry,
    SymbolParams,
    demap_symbol,
    discrete_harmonic_coefficient,
    discrete_waveform,
    discretization_ratio,
    harmonic_coefficient,
    map_bits_16qam,
    solve_mapping,
)
from .ris_core import (
    AmplitudePhaseProfile,
    LoadImpedance,
    ReflectionCoefficient,
    RisGeometry,
    amplitude_at_phase,
    reflection_from_impedance,
    triangular_profile,
)
from .transceiver import (
    FrameConfig,
    LinkReport,
    build_frame,
    extract_harmonic,
    ls_channel_estimate,
    run_link,
    zf_equalize,
)

__version__ = "0.1.0"
