"""Time-varying VAR models: containers, the benchmark process, simulation
and per-step stability checks.

Coefficients are stored stacked the way the regression sees them::

    coeffs[n] = [A_1(t_n), A_2(t_n), ..., A_p(t_n)]      # shape (M, M*p)

so that ``y(t_n) = coeffs[n] @ w(t_n) + u(t_n)`` with
``w(t_n) = [y(t_{n-1}); ...; y(t_{n-p})]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CovarianceNotPDError, InsufficientLengthError, PreconditionError

__all__ = [
    "TvVarModel",
    "EpochData",
    "CoefficientSchedule",
    "companion_matrix",
    "build_benchmark_model",
    "constant_model",
    "simulate",
    "stability_report",
    "spectral_radius",
]

WAVEFORMS = ("square", "sinusoid", "constant")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TvVarModel:
    """Per-time-step coefficients and innovation covariances of a TV-VAR(p).

    Parameters
    ----------
    coeffs : ndarray, shape (T, M, M*p)
    sigma_u : ndarray, shape (T, M, M)
    fs : float
        Sampling frequency in Hz.
    available : ndarray of bool, shape (T,), optional
        False where no estimate exists (e.g. the first ``p`` steps of an
        identified model).  Values at unavailable steps are NaN.
    """

    coeffs: np.ndarray
    sigma_u: np.ndarray
    fs: float = 1.0
    available: np.ndarray | None = None

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        sigma = np.asarray(self.sigma_u, dtype=float)
        if coeffs.ndim != 3 or sigma.ndim != 3:
            raise PreconditionError("coeffs must be (T, M, M*p) and sigma_u (T, M, M)")
        T, M, Mp = coeffs.shape
        if M < 1 or Mp < M or Mp % M:
            raise PreconditionError(f"coeffs shape {coeffs.shape} is not (T, M, M*p)")
        if sigma.shape != (T, M, M):
            raise PreconditionError(f"sigma_u shape {sigma.shape} does not match coeffs {coeffs.shape}")
        if not self.fs > 0:
            raise PreconditionError("fs must be positive")
        avail = np.ones(T, bool) if self.available is None else np.asarray(self.available, bool)
        if avail.shape != (T,):
            raise PreconditionError("available must have one flag per time step")
        if avail.any():
            s = sigma[avail]
            if not np.allclose(s, np.swapaxes(s, 1, 2), rtol=1e-10, atol=1e-12):
                raise CovarianceNotPDError("sigma_u is not symmetric")
            try:
                np.linalg.cholesky(s)
            except np.linalg.LinAlgError:
                raise CovarianceNotPDError("sigma_u is not positive definite at some time step") from None
        avail = avail.copy()
        avail.setflags(write=False)
        object.__setattr__(self, "coeffs", _frozen(coeffs))
        object.__setattr__(self, "sigma_u", _frozen(sigma))
        object.__setattr__(self, "available", avail)
        object.__setattr__(self, "fs", float(self.fs))

    @property
    def T(self) -> int:
        return self.coeffs.shape[0]

    @property
    def M(self) -> int:
        return self.coeffs.shape[1]

    @property
    def p(self) -> int:
        return self.coeffs.shape[2] // self.coeffs.shape[1]

    def lag_matrices(self, n: int) -> np.ndarray:
        """Return ``A_1..A_p`` at step ``n`` as an array of shape (p, M, M)."""
        return self.coeffs[n].reshape(self.M, self.p, self.M).transpose(1, 0, 2)

    def times(self, onset: float = 0.0) -> np.ndarray:
        """Time axis in seconds relative to the first sample, minus ``onset``."""
        return np.arange(self.T) / self.fs - onset


@dataclass(frozen=True)
class EpochData:
    """R realizations of an M-channel process, each T samples long."""

    samples: np.ndarray
    fs: float = 1.0
    channel_labels: Sequence[str] | None = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[0] < 1:
            raise PreconditionError("samples must have shape (R, M, T)")
        if not np.all(np.isfinite(x)):
            r, m, t = np.argwhere(~np.isfinite(x))[0]
            raise PreconditionError(f"non-finite sample at realization {r}, channel {m}, step {t}")
        if not self.fs > 0:
            raise PreconditionError("fs must be positive")
        labels = self.channel_labels
        if labels is None:
            labels = [f"Y{i + 1}" for i in range(x.shape[1])]
        labels = tuple(str(s) for s in labels)
        if len(labels) != x.shape[1]:
            raise PreconditionError(f"{len(labels)} labels for {x.shape[1]} channels")
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "channel_labels", labels)

    @property
    def R(self) -> int:
        return self.samples.shape[0]

    @property
    def M(self) -> int:
        return self.samples.shape[1]

    @property
    def T(self) -> int:
        return self.samples.shape[2]

    def standardized(self) -> "EpochData":
        """Zero mean, unit variance per channel, pooled over realizations and time."""
        x = self.samples
        mu = x.mean(axis=(0, 2), keepdims=True)
        sd = x.std(axis=(0, 2), keepdims=True)
        sd[sd == 0] = 1.0
        return EpochData((x - mu) / sd, self.fs, self.channel_labels)


@dataclass(frozen=True)
class CoefficientSchedule:
    """A periodic coupling waveform ``a(t_n)`` oscillating in ``[lo, hi]``.

    The square wave starts at ``lo`` and switches every half period; the
    sinusoid starts at ``lo`` too (raised cosine).  ``constant`` holds ``lo``.
    """

    kind: str = "square"
    lo: float = 0.0
    hi: float = 0.3
    period: float = 4.0

    def __post_init__(self):
        kind = {"sine": "sinusoid", "sin": "sinusoid"}.get(self.kind, self.kind)
        if kind not in WAVEFORMS:
            raise PreconditionError(f"unknown waveform {self.kind!r}; expected one of {WAVEFORMS}")
        if not self.period > 0:
            raise PreconditionError("period must be positive")
        if self.lo > self.hi:
            raise PreconditionError("lo must not exceed hi")
        object.__setattr__(self, "kind", kind)

    def evaluate(self, T: int, fs: float) -> np.ndarray:
        """Sample the waveform at ``t_n = n / fs`` for ``n = 0..T-1``."""
        t = np.arange(T) / fs
        if self.kind == "constant":
            return np.full(T, float(self.lo))
        if self.kind == "square":
            # exact integer arithmetic on samples avoids float phase jitter
            half = self.period * fs / 2.0
            if float(half).is_integer():
                high = (np.arange(T) // int(half)) % 2 == 1
            else:
                high = np.floor(t / (self.period / 2.0)) % 2 == 1
            return np.where(high, self.hi, self.lo).astype(float)
        return self.lo + (self.hi - self.lo) * 0.5 * (1.0 - np.cos(2 * np.pi * t / self.period))

    def plateau_mask(self, T: int, fs: float, fraction: float = 0.5) -> np.ndarray:
        """Central ``fraction`` of every half period, as a boolean mask."""
        half = self.period * fs / 2.0
        pos = (np.arange(T) % half) / half
        lo_edge = (1.0 - fraction) / 2.0
        return (pos >= lo_edge) & (pos < 1.0 - lo_edge)


def oscillator_coefficients(rho: float, freq: float, fs: float) -> tuple[float, float]:
    """AR(2) coefficients placing a resonance of radius ``rho`` at ``freq`` Hz."""
    return 2.0 * rho * np.cos(2.0 * np.pi * freq / fs), -rho**2


def build_benchmark_model(
    schedule: CoefficientSchedule | None = None,
    fs: float = 100.0,
    T: int = 1000,
    rho: float = 0.85,
    f_slow: float = 10.0,
    f_fast: float = 35.0,
) -> TvVarModel:
    """The four-variate benchmark process with time-varying coupling.

    Y1 receives ``(1 - a)`` of Y2 at lag 1 and ``a`` of Y3 at lag 2; Y4 drives
    Y2 (lag 1) and Y3 (lag 2) with strength 1.5; Y2, Y3 oscillate at
    ``f_slow`` and Y4 at ``f_fast``.  Unit innovations throughout.
    """
    schedule = schedule or CoefficientSchedule()
    a = schedule.evaluate(T, fs)
    a21, a22 = oscillator_coefficients(rho, f_slow, fs)
    a41, a42 = oscillator_coefficients(rho, f_fast, fs)
    A = np.zeros((T, 2, 4, 4))  # (T, lag, row, col)
    A[:, 0, 0, 1] = 1.0 - a
    A[:, 1, 0, 2] = a
    A[:, 0, 1, 1], A[:, 1, 1, 1] = a21, a22
    A[:, 0, 1, 3] = 1.5
    A[:, 0, 2, 2], A[:, 1, 2, 2] = a21, a22
    A[:, 1, 2, 3] = 1.5
    A[:, 0, 3, 3], A[:, 1, 3, 3] = a41, a42
    coeffs = A.transpose(0, 2, 1, 3).reshape(T, 4, 8)
    sigma = np.broadcast_to(np.eye(4), (T, 4, 4))
    return TvVarModel(coeffs, sigma, fs)


def constant_model(lags, sigma_u, T: int, fs: float = 1.0) -> TvVarModel:
    """Time-invariant model from lag matrices ``lags`` of shape (p, M, M)."""
    lags = np.asarray(lags, dtype=float)
    if lags.ndim == 1:
        lags = lags[:, None, None]
    p, M, _ = lags.shape
    stacked = lags.transpose(1, 0, 2).reshape(M, M * p)
    sigma_u = np.atleast_2d(np.asarray(sigma_u, dtype=float))
    return TvVarModel(
        np.broadcast_to(stacked, (T, M, M * p)),
        np.broadcast_to(sigma_u, (T, M, M)),
        fs,
    )


def companion_matrix(stacked: np.ndarray) -> np.ndarray:
    """Companion form of ``[A_1 ... A_p]``; works on a leading batch axis too."""
    stacked = np.asarray(stacked)
    M, Mp = stacked.shape[-2:]
    out = np.zeros(stacked.shape[:-2] + (Mp, Mp), dtype=stacked.dtype)
    out[..., :M, :] = stacked
    if Mp > M:
        out[..., M:, :-M] = np.eye(Mp - M)
    return out


def spectral_radius(model: TvVarModel) -> np.ndarray:
    """Largest companion eigenvalue modulus per step (NaN where unavailable)."""
    rad = np.full(model.T, np.nan)
    idx = np.flatnonzero(model.available)
    if idx.size:
        eig = np.linalg.eigvals(companion_matrix(model.coeffs[idx]))
        rad[idx] = np.abs(eig).max(axis=-1)
    return rad


def stability_report(model: TvVarModel) -> np.ndarray:
    """True at each step whose companion eigenvalues all lie strictly inside the unit circle."""
    rad = spectral_radius(model)
    with np.errstate(invalid="ignore"):
        return np.where(np.isnan(rad), False, rad < 1.0)


def simulate(model: TvVarModel, R: int = 1, seed: int | None = 0, burn_in: int = 500) -> EpochData:
    """Draw ``R`` independent realizations of ``model``.

    Each realization starts from zero state, runs ``burn_in`` steps with the
    first step's coefficients and covariance, then ``model.T`` steps which are
    returned.  Realization ``r`` uses its own child stream of
    ``SeedSequence(seed)``, so results do not depend on how many are drawn.
    """
    if R < 1:
        raise PreconditionError("R must be at least 1")
    if burn_in < 0:
        raise PreconditionError("burn_in must be non-negative")
    M, p, T = model.M, model.p, model.T
    if T <= p:
        raise InsufficientLengthError(f"T={T} must exceed the model order p={p}")
    if not model.available.all():
        raise PreconditionError("cannot simulate a model with unavailable time steps")
    try:
        chol = np.linalg.cholesky(model.sigma_u)
    except np.linalg.LinAlgError:
        raise CovarianceNotPDError("innovation covariance is not positive definite") from None

    n_total = burn_in + T
    steps = np.concatenate([np.zeros(burn_in, int), np.arange(T)])
    children = np.random.SeedSequence(seed).spawn(R)
    z = np.stack([np.random.default_rng(c).standard_normal((n_total, M)) for c in children])

    # y[:, k] holds time k - p; the first p columns are the zero initial state
    y = np.zeros((R, n_total + p, M))
    for k in range(n_total):
        n = steps[k]
        past = y[:, k : k + p][:, ::-1].reshape(R, M * p)
        y[:, k + p] = past @ model.coeffs[n].T + z[:, k] @ chol[n].T
    return EpochData(y[:, p + burn_in :].transpose(0, 2, 1), model.fs)
