"""Monte Carlo benchmark on the four-variate coupled-oscillator process.

Each cell fixes the number of realizations, the forgetting factor and the
coupling waveform; every iteration simulates fresh data, identifies the
TV-VAR model by RLS and tracks the OIR of the full quadruplet against its
exact profile.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import PreconditionError, TvOirError
from .oir import Multiplet, OirEngine, OirSeries, TimeFreqField
from .rls import RlsConfig, rls_identify, select_order_mspe
from .spectral import FrequencyGrid
from .submodel import DEFAULT_Q
from .varcore import CoefficientSchedule, build_benchmark_model, simulate

__all__ = [
    "BENCH_MULTIPLETS",
    "QUADRUPLET",
    "BenchCell",
    "BenchMetrics",
    "theoretical_oir",
    "theoretical_quadruplet",
    "run_cell",
    "fall_time",
    "bias_n",
    "temporal_var",
]

log = logging.getLogger(__name__)

QUADRUPLET = Multiplet((0, 1, 2, 3))
BENCH_MULTIPLETS = (Multiplet((0, 1, 2)), Multiplet((0, 2, 3)), QUADRUPLET)
OMEGA_FLOOR = 1e-9


@dataclass(frozen=True)
class BenchCell:
    """One point of the (R, forgetting factor, waveform) grid.

    ``p=None`` selects the order by MSPE up to ``pmax`` in every iteration.
    """

    R: int = 50
    c: float = 0.04
    waveform: str = "square"
    n_iterations: int = 20
    seed: int = 0
    T: int = 1000
    fs: float = 100.0
    p: int | None = 2
    pmax: int = 5
    q: int = DEFAULT_Q
    burn_in: int = 500
    period: float = 4.0
    amplitude: tuple[float, float] = (0.0, 0.3)

    def __post_init__(self):
        if self.R < 1 or self.n_iterations < 1:
            raise PreconditionError("R and n_iterations must be at least 1")
        if not 0.0 <= self.c <= 1.0:
            raise PreconditionError("c must lie in [0, 1]")

    @property
    def schedule(self) -> CoefficientSchedule:
        return CoefficientSchedule(self.waveform, self.amplitude[0], self.amplitude[1], self.period)


@dataclass
class BenchMetrics:
    """Cell summary.  Per-iteration arrays are kept for external statistics."""

    cell: BenchCell
    bias_n: float
    var: float
    fall_time: float | None  # against the true step; saturates at half a period
    fall_time_relative: float | None  # against the trace's own range
    bias_n_plateau: float
    var_plateau: float
    n_failed: int
    iter_bias_n: np.ndarray
    iter_var: np.ndarray
    iter_bias_n_plateau: np.ndarray
    iter_var_plateau: np.ndarray
    theory: np.ndarray
    mean_trace: np.ndarray
    traces: np.ndarray | None = None
    errors: list[str] = field(default_factory=list)


def theoretical_oir(
    schedule: CoefficientSchedule | None = None,
    grid: FrequencyGrid | None = None,
    fs: float = 100.0,
    T: int = 1000,
    multiplets=BENCH_MULTIPLETS,
    q: int = DEFAULT_Q,
) -> dict[Multiplet, tuple[OirSeries, TimeFreqField]]:
    """Exact OIR profiles from the true coefficients, no estimation involved."""
    model = build_benchmark_model(schedule or CoefficientSchedule(), fs, T)
    engine = OirEngine(model, q, grid=grid or FrequencyGrid(fs=fs))
    ms = [m if isinstance(m, Multiplet) else Multiplet(m) for m in multiplets]
    return dict(zip(ms, zip(engine.oir_time(ms), engine.oir_spectral(ms))))


@lru_cache(maxsize=32)
def _theory_cached(kind, lo, hi, period, fs, T, q):
    model = build_benchmark_model(CoefficientSchedule(kind, lo, hi, period), fs, T)
    vals = OirEngine(model, q).oir_time([QUADRUPLET])[0].values
    vals.setflags(write=False)
    return vals


def theoretical_quadruplet(cell: BenchCell) -> np.ndarray:
    s = cell.schedule
    return _theory_cached(s.kind, s.lo, s.hi, s.period, cell.fs, cell.T, cell.q)


def bias_n(theory: np.ndarray, estimate: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean of ``|theory - estimate| / theory`` over usable steps.

    Steps with ``|theory| < 1e-9`` or a missing estimate are skipped.
    """
    ok = np.isfinite(estimate) & np.isfinite(theory) & (np.abs(theory) >= OMEGA_FLOOR)
    if mask is not None:
        ok &= mask
    if not ok.any():
        return float("nan")
    return float(np.mean(np.abs(theory[ok] - estimate[ok]) / theory[ok]))


def temporal_var(estimate: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Variance of the estimate around its own time average."""
    ok = np.isfinite(estimate)
    if mask is not None:
        ok &= mask
    if not ok.any():
        return float("nan")
    e = estimate[ok]
    return float(np.mean((e - e.mean()) ** 2))


def fall_time(trace, fs: float, max_time: float | None = None, levels: tuple[float, float] | None = None) -> float | None:
    """Time for ``trace`` to fall from its 90% level to its 10% level after its peak.

    By default the levels are ``min + 0.9 (max - min)`` and
    ``min + 0.1 (max - min)`` of the trace itself.  ``levels=(high, low)``
    measures against an external step instead (e.g. the true transition), in
    which case a trace that never reaches the 90% level has not fallen at all.
    Crossings are sample-resolved.  Returns None for a flat trace.  When the
    fall never completes, or takes longer than ``max_time``, the result
    saturates at ``max_time`` (default: the trace duration).
    """
    tr = np.asarray(trace, dtype=float)
    if tr.size == 0 or not np.all(np.isfinite(tr)):
        raise PreconditionError("fall_time needs a non-empty finite trace")
    cap = tr.size / fs if max_time is None else float(max_time)
    if levels is None:
        top, bottom = tr.max(), tr.min()
    else:
        top, bottom = float(max(levels)), float(min(levels))
    span = top - bottom
    if span < 1e-9 or (levels is None and tr.max() - tr.min() < 1e-9):
        return None
    hi, lo = bottom + 0.9 * span, bottom + 0.1 * span
    k_max = int(np.argmax(tr))
    if tr[k_max] < hi:
        return cap
    below_hi = np.flatnonzero(tr[k_max:] < hi)
    if not below_hi.size:
        return cap
    k_hi = k_max + below_hi[0]
    below_lo = np.flatnonzero(tr[k_hi:] < lo)
    if not below_lo.size:
        return cap
    return min(below_lo[0] / fs, cap)


def fall_window(cell: BenchCell) -> slice:
    """One period starting at a high-OIR half period, skipping the first period when possible.

    The coupling starts low, so OIR is high during the first half of every
    period and drops at mid-period.
    """
    per = int(round(cell.period * cell.fs))
    start = per if cell.T >= 2 * per else 0
    return slice(start, min(cell.T, start + per))


def _iteration(cell: BenchCell, model, child: np.random.SeedSequence):
    sim_seed, init_seed = (int(s) for s in child.generate_state(2))
    data = simulate(model, cell.R, seed=sim_seed, burn_in=cell.burn_in)
    p = cell.p
    if p is None:
        p = select_order_mspe(data, cell.c, cell.pmax, seed=init_seed)
    est = rls_identify(data, RlsConfig(p=p, c=cell.c, seed=init_seed))
    return OirEngine(est, cell.q).oir_time([QUADRUPLET])[0].values


def run_cell(cell: BenchCell, keep_traces: bool = False) -> BenchMetrics:
    """Run all iterations of one cell and summarize them.

    Iteration ``i`` draws its seeds from child ``i`` of ``SeedSequence(cell.seed)``,
    so results do not depend on execution order.
    """
    model = build_benchmark_model(cell.schedule, cell.fs, cell.T)
    theory = theoretical_quadruplet(cell)
    plateau = cell.schedule.plateau_mask(cell.T, cell.fs, 0.5)
    children = np.random.SeedSequence(cell.seed).spawn(cell.n_iterations)

    traces, errors = [], []
    for i, child in enumerate(children):
        try:
            traces.append(_iteration(cell, model, child))
        except TvOirError as exc:
            errors.append(f"iteration {i}: {exc}")
            log.warning("bench iteration %d failed: %s", i, exc)
    if not traces:
        raise TvOirError(f"all {cell.n_iterations} iterations failed; first error: {errors[0]}")
    traces = np.array(traces)

    ib = np.array([bias_n(theory, t) for t in traces])
    iv = np.array([temporal_var(t) for t in traces])
    ibp = np.array([bias_n(theory, t, plateau) for t in traces])
    ivp = np.array([temporal_var(t, plateau) for t in traces])
    with np.errstate(invalid="ignore"), _quiet_nanmean():
        mean_trace = np.nanmean(traces, axis=0)

    window = fall_window(cell)
    win, ref = mean_trace[window], theory[window]
    half = cell.period / 2.0
    ft = ft_rel = None
    if np.all(np.isfinite(win)):
        ft = fall_time(win, cell.fs, max_time=half, levels=(ref.max(), ref.min()))
        ft_rel = fall_time(win, cell.fs, max_time=half)

    return BenchMetrics(
        cell=cell,
        bias_n=float(np.nanmean(ib)),
        var=float(np.nanmean(iv)),
        fall_time=ft,
        fall_time_relative=ft_rel,
        bias_n_plateau=float(np.nanmean(ibp)),
        var_plateau=float(np.nanmean(ivp)),
        n_failed=len(errors),
        iter_bias_n=ib,
        iter_var=iv,
        iter_bias_n_plateau=ibp,
        iter_var_plateau=ivp,
        theory=np.asarray(theory),
        mean_trace=mean_trace,
        traces=traces if keep_traces else None,
        errors=errors,
    )


class _quiet_nanmean:
    def __enter__(self):
        import warnings

        self._w = warnings.catch_warnings()
        self._w.__enter__()
        warnings.simplefilter("ignore", RuntimeWarning)

    def __exit__(self, *exc):
        return self._w.__exit__(*exc)
