"""Spectral aggregation and likelihood tools for low-rank matrix mixtures.

Observations are ``X_i = s_i * M + Z_i`` with hidden fair signs ``s_i``,
a low-rank signal ``M``, and Gaussian noise.  The package provides the
label-free spectral pipeline that estimates ``M`` up to sign, EM and grid
likelihood baselines, rate and hardness calculators, a deterministic
sweep harness, and a workflow for multi-layer network data.
"""

from .estimators import (EstimateReport, EstimatorConfig, LowRankMixtureEM,
                         SpectralAggregation, aggregate, estimate, refine,
                         spectral_init, split_batches)
from .exceptions import (BruteForceTooLarge, DegenerateSpectrum,
                         DimensionError, EmptyStack, IndexOutOfRange,
                         InsufficientPoints, LabelMismatch, LrmmError,
                         MissingLabels, NonFiniteError, ParseError,
                         TooFewSamples)
from .harness import (PointSummary, SweepRow, SweepSpec, TrendFit,
                      derive_seed, phase_diagram, preset, run_sweep,
                      summarize)
from .likelihood import (MleResult, em_mle, grid_mle, hellinger_mc, kl_mc,
                         log_density, neg_log_likelihood)
from .linalg import (TruncatedSvd, leading_eigvec_sym, load_matrix_csv,
                     norms, rank_r_approx, save_matrix_csv, top_r_svd)
from .model import (SampleSet, SignalMatrix, known_label_oracle,
                    load_sample_dir, loss, make_signal, rademacher_rank1,
                    sample_lrmm, save_sample_dir)
from .netdata import (CenterPair, LayerStack, center_stack, estimate_pair,
                      load_layers, reorder_and_export, save_layers)
from .theory import (LowDegreeResult, RatePoint, classify, lowdeg_norm,
                     minimax_rate, rademacher_moment, trace_concentration_mc)

__version__ = "0.1.0"

__all__ = [
    "BruteForceTooLarge", "CenterPair", "DegenerateSpectrum",
    "DimensionError", "EmptyStack", "EstimateReport", "EstimatorConfig",
    "IndexOutOfRange", "InsufficientPoints", "LabelMismatch", "LayerStack",
    "LowDegreeResult", "LowRankMixtureEM", "LrmmError", "MissingLabels",
    "MleResult", "NonFiniteError", "ParseError", "PointSummary", "RatePoint",
    "SampleSet", "SignalMatrix", "SpectralAggregation", "SweepRow",
    "SweepSpec", "TooFewSamples", "TrendFit", "TruncatedSvd", "aggregate",
    "center_stack", "classify", "derive_seed", "em_mle", "estimate",
    "estimate_pair", "grid_mle", "hellinger_mc", "kl_mc",
    "known_label_oracle", "leading_eigvec_sym", "load_layers",
    "load_matrix_csv", "load_sample_dir", "log_density", "loss",
    "lowdeg_norm", "make_signal", "minimax_rate", "neg_log_likelihood",
    "norms", "phase_diagram", "preset", "rademacher_moment",
    "rademacher_rank1", "rank_r_approx", "refine", "reorder_and_export",
    "run_sweep", "sample_lrmm", "save_layers", "save_matrix_csv",
    "save_sample_dir", "spectral_init", "split_batches", "summarize",
    "top_r_svd", "trace_concentration_mc",
]
