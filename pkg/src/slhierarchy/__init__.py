"""She-Leveque hierarchy analysis of scalar time series."""

__version__ = "0.1.0"

from .config import AnalysisConfig  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .gess import (build_delta_rho_sequence, estimate_beta, estimate_rho,  # noqa: E402
                   theoretical_delta_rho_next, theoretical_rho)
from .hierarchy import (analyze, estimate_C, estimate_h0, f_pq,  # noqa: E402
                        flatness_report, gamma, windowed_analyze)
from .ingest import PriceSeries, ReturnSeries, compute_returns, load_price_series  # noqa: E402
from .structfn import MomentGrid, build_table, fit_xi, structure_function  # noqa: E402
from .synth import (CascadeSpec, brute_force_moment, generate_cascade,  # noqa: E402
                    generate_fbm, theoretical_xi)
