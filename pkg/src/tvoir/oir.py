"""Time-resolved and time-frequency O-information rate.

For a multiplet ``X = {X_1..X_N}``::

    OIR(X) = (N - 2) H(X) + sum_j [ H(X_j) - H(X without X_j) ]

with ``H`` the (spectral) entropy rate.  Positive values mean redundancy
dominates, negative values synergy.  All ``2N + 1`` entropy rates of every
requested multiplet are computed once per subset and shared.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError
from .rls import RlsConfig, rls_identify, select_order_mspe
from .spectral import FrequencyGrid, spectral_entropy_rates
from .submodel import DEFAULT_Q, entropy_rates
from .varcore import EpochData, TvVarModel

__all__ = [
    "Multiplet",
    "OirSeries",
    "TimeFreqField",
    "OirEngine",
    "OirAnalysis",
    "oir_time",
    "oir_spectral",
    "enumerate_multiplets",
    "oir_from_data",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Multiplet:
    """Sorted, distinct, zero-based channel indices (at least two)."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(idx) < 2:
            raise PreconditionError("a multiplet needs at least two channels")
        if len(set(idx)) != len(idx) or idx[0] < 0:
            raise PreconditionError(f"invalid multiplet indices {self.indices}")
        object.__setattr__(self, "indices", idx)

    @property
    def N(self) -> int:
        return len(self.indices)

    def subsets(self) -> list[tuple[int, ...]]:
        """The whole set, the N singletons and the N leave-one-out complements."""
        idx = self.indices
        return [idx] + [(i,) for i in idx] + [tuple(k for k in idx if k != i) for i in idx]

    def label(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            return "-".join(f"Y{i + 1}" for i in self.indices)
        return "-".join(names[i] for i in self.indices)


def _as_multiplet(m) -> Multiplet:
    return m if isinstance(m, Multiplet) else Multiplet(tuple(m))


@dataclass(frozen=True)
class OirSeries:
    multiplet: Multiplet
    values: np.ndarray  # nats/sample, NaN where unavailable
    fs: float = 1.0


@dataclass(frozen=True)
class TimeFreqField:
    multiplet: Multiplet
    grid: FrequencyGrid
    values: np.ndarray  # (T, n_freq)

    def integrated(self) -> np.ndarray:
        """Per-step spectral integral; should reproduce the matching OirSeries."""
        from .spectral import integrate_spectrum

        return integrate_spectrum(self.values, self.grid)


def _combine(N: int, parts: dict, idx: tuple[int, ...]):
    whole = parts[idx]
    total = (N - 2) * whole if N != 2 else np.zeros_like(whole)
    for i in idx:
        rest = tuple(k for k in idx if k != i)
        total = total + (parts[(i,)] - parts[rest])
    if N == 2:
        total = np.where(np.isnan(whole), np.nan, total)
    return total


class OirEngine:
    """Computes OIR for many multiplets of one model, caching subset entropy rates.

    Parameters
    ----------
    model : TvVarModel
    q : int
        Order of the restricted sub-process models.
    L : int, optional
        Maximum covariance lag (defaults to ``max(q, p)``).
    grid : FrequencyGrid, optional
        Needed only for spectral quantities; defaults to 513 points at ``model.fs``.
    """

    def __init__(self, model: TvVarModel, q: int = DEFAULT_Q, L: int | None = None, grid: FrequencyGrid | None = None):
        self.model = model
        self.q = q
        self.L = L
        self.grid = grid or FrequencyGrid(fs=model.fs)
        self._er: dict[tuple[int, ...], np.ndarray] = {}
        self._ser: dict[tuple[int, ...], np.ndarray] = {}
        self.reasons: dict[int, str] = {}

    def _check(self, multiplets):
        out = [_as_multiplet(m) for m in multiplets]
        for m in out:
            if m.indices[-1] >= self.model.M:
                raise PreconditionError(f"multiplet {m.indices} out of range for {self.model.M} channels")
        return out

    def entropy_rate(self, subsets: Iterable[Sequence[int]]) -> dict:
        todo = [tuple(s) for s in subsets if tuple(s) not in self._er]
        if todo:
            for s, series in entropy_rates(self.model, todo, self.q, self.L).items():
                self._er[s] = series.values
                for n, why in series.reasons.items():
                    self.reasons.setdefault(n, why)
        return self._er

    def spectral_entropy_rate(self, subsets: Iterable[Sequence[int]]) -> dict:
        todo = [tuple(s) for s in subsets if tuple(s) not in self._ser]
        if todo:
            values, reasons = spectral_entropy_rates(self.model, todo, self.grid)
            self._ser.update(values)
            for n, why in reasons.items():
                self.reasons.setdefault(n, why)
        return self._ser

    def oir_time(self, multiplets) -> list[OirSeries]:
        ms = self._check(multiplets)
        parts = self.entropy_rate({s for m in ms for s in m.subsets()})
        return [OirSeries(m, _combine(m.N, parts, m.indices), self.model.fs) for m in ms]

    def oir_spectral(self, multiplets) -> list[TimeFreqField]:
        ms = self._check(multiplets)
        parts = self.spectral_entropy_rate({s for m in ms for s in m.subsets()})
        return [TimeFreqField(m, self.grid, _combine(m.N, parts, m.indices)) for m in ms]


def oir_time(model: TvVarModel, multiplet, q: int = DEFAULT_Q, L: int | None = None) -> OirSeries:
    """Time-resolved OIR of one multiplet (NaN at unavailable steps)."""
    return OirEngine(model, q, L).oir_time([multiplet])[0]


def oir_spectral(model: TvVarModel, multiplet, grid: FrequencyGrid | None = None) -> TimeFreqField:
    """Time-frequency OIR of one multiplet, shape (T, n_freq)."""
    return OirEngine(model, grid=grid).oir_spectral([multiplet])[0]


def enumerate_multiplets(M: int, orders: Iterable[int]) -> list[Multiplet]:
    """All ``C(M, N)`` multiplets for each order ``N``, in lexicographic order."""
    out = []
    for N in orders:
        if not 2 <= N <= M:
            raise PreconditionError(f"multiplet order {N} must lie in 2..{M}")
        out.extend(Multiplet(c) for c in itertools.combinations(range(M), N))
    return out


@dataclass
class OirAnalysis:
    """Everything :func:`oir_from_data` produced for one dataset."""

    model: TvVarModel
    config: RlsConfig
    series: dict[Multiplet, OirSeries]
    fields: dict[Multiplet, TimeFreqField]
    grid: FrequencyGrid
    report: dict = field(default_factory=dict)


def oir_from_data(
    data: EpochData,
    config: RlsConfig,
    multiplets=None,
    grid: FrequencyGrid | None = None,
    q: int = DEFAULT_Q,
    L: int | None = None,
    standardize: bool = True,
    pmax: int | None = None,
    spectral: bool = True,
) -> OirAnalysis:
    """Identify a TV-VAR model from epochs and compute OIR for each multiplet.

    Channels are standardized first (zero mean, unit variance pooled over
    realizations and time) unless ``standardize`` is False.  With ``pmax``
    the model order is chosen by MSPE over ``1..pmax`` and ``config.p`` is
    ignored.  ``multiplets`` defaults to every multiplet of order 3..M.
    """
    if standardize:
        data = data.standardized()
    if pmax is not None:
        p = select_order_mspe(data, config.c, pmax, init_scale=config.init_scale, delta=config.delta, seed=config.seed)
        config = config.replace(p=p)
        log.info("MSPE selected order p=%d", p)
    model = rls_identify(data, config)
    if multiplets is None:
        multiplets = enumerate_multiplets(data.M, range(3, data.M + 1)) if data.M >= 3 else []
    grid = grid or FrequencyGrid(fs=data.fs)
    engine = OirEngine(model, q, L, grid)
    ms = engine._check(multiplets)
    series = dict(zip(ms, engine.oir_time(ms)))
    fields = dict(zip(ms, engine.oir_spectral(ms))) if spectral else {}

    unavailable = {m.label(data.channel_labels): int(np.isnan(s.values).sum()) for m, s in series.items()}
    report = {
        "p": config.p,
        "c": config.c,
        "n_steps": model.T,
        "unavailable_steps": unavailable,
        "step_errors": {int(k): v for k, v in sorted(engine.reasons.items())},
    }
    return OirAnalysis(model, config, series, fields, grid, report)


def n_multiplets(M: int, orders: Iterable[int]) -> int:
    return sum(comb(M, N) for N in orders)
