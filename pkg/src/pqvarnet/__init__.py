"""Distributional causality networks from piecewise quantile VAR."""

from .embedding import Breakpoints, PiecewiseEmbedding, compute_breakpoints, embed
from .errors import ArtifactError, DataError, NumericalError, RankDeficientError
from .ingest import Asset, PricePanel, ReturnPanel, load_prices, log_returns, \
    returns_from_prices, stabilize
from .netstats import CausalMultigraph, SubNetwork, build_multigraph, ccdf, \
    critical_value, degree_correlation_matrix, degree_stats, p_down, \
    qig_aggregate, spearman, split_self_cross, threshold
from .pqvar import PiecewiseQuantileVAR, StandardVAR, net_slope, residual_shift
from .quantreg import QuantileRegressor, estimate_covariance, \
    hall_sheather_bandwidth, kde_density_at_zero, pinball_loss, wald_t
from .synth import ArchetypeSpec, generate, planted_edges, score_recovery

__version__ = "0.1.0"
