"""Time-resolved and time-frequency O-information rate for non-stationary
multivariate processes, via TV-VAR models identified by recursive least
squares with a forgetting factor."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .varcore import (  # noqa: E402
    CoefficientSchedule,
    EpochData,
    TvVarModel,
    build_benchmark_model,
    constant_model,
    simulate,
    stability_report,
)
from .rls import RlsConfig, init_state, rls_identify, select_order_mspe  # noqa: E402
from .submodel import (  # noqa: E402
    entropy_rate,
    entropy_rate_series,
    restricted_model,
    yule_walker_covariance,
)
from .spectral import FrequencyGrid, integrate_spectrum, psd, spectral_entropy_rate, transfer_matrix  # noqa: E402
from .oir import Multiplet, OirEngine, enumerate_multiplets, oir_from_data, oir_spectral, oir_time  # noqa: E402
