"""Shutter-based randomness certification and Toeplitz extraction."""

from .certify import (
    certify,
    certify_known_distribution,
    certify_mean_constraint,
    certify_simple,
    three_point_candidates,
    photon_signal_probability,
    poisson_mixture,
)
from .errors import (
    DegenerateSource,
    EmptySupport,
    FormatError,
    GuardExceeded,
    InfeasibleStats,
    InsufficientEntropy,
    LengthMismatch,
    ScaleExceeded,
    SeedReuseExceeded,
    ShutterCertError,
)
from .extractor import ExtractorConfig, ToeplitzHasher, optimize_cutoff, output_length, toeplitz_hash
from .model import (
    Assumption,
    CertificationResult,
    MeanConstrainedSource,
    MixedSource,
    ObservedStats,
    ProtocolConfig,
    RoundRecord,
    SimpleSource,
    StrategyMix,
    feasible,
    normalize_orientation,
)
from .oracle import (
    bruteforce_response_functions,
    solve_mean_constraint_bruteforce,
    solve_mixed_lp,
    solve_simple_lp,
)
from .pipeline import PipelineReport, monobit_sanity, process_batches
from .protocol import AdversarialDevice, HonestDevice, RoundBatch, adversary_guess_rate, run_protocol
from .sampling import estimate_stats, optimize_test_allocation

__version__ = "0.1.0"
