"""Frequency-domain view of a frozen TV-VAR step: transfer matrix, spectral
density and spectral entropy rate.

Only ``omega`` in ``[0, pi]`` is evaluated.  Spectra of real processes are
even in ``omega``, so ``(1/2pi) * integral over [-pi, pi]`` equals
``(1/pi) * integral over [0, pi]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError, SpectralDegeneracyError, SpectralSingularityError
from .submodel import LOG_2PIE, _as_subset
from .varcore import TvVarModel

__all__ = [
    "FrequencyGrid",
    "transfer_matrix",
    "psd",
    "spectral_entropy_rate",
    "integrate_spectrum",
    "spectral_entropy_rates",
]

DEFAULT_NFREQ = 513
_trapezoid = getattr(np, "trapezoid", None) or np.trapz
_COND_LIMIT = 1e12
_HERM_TOL = 1e-10


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid on ``[0, pi]`` with both endpoints."""

    n_freq: int = DEFAULT_NFREQ
    fs: float = 1.0

    def __post_init__(self):
        if int(self.n_freq) != self.n_freq or self.n_freq < 2:
            raise PreconditionError("n_freq must be an integer >= 2")
        if not self.fs > 0:
            raise PreconditionError("fs must be positive")
        object.__setattr__(self, "n_freq", int(self.n_freq))

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_freq)

    @property
    def freqs(self) -> np.ndarray:
        """Frequencies in Hz."""
        return self.omegas * self.fs / (2.0 * np.pi)

    def band(self, f_lo: float, f_hi: float) -> np.ndarray:
        f = self.freqs
        return (f >= f_lo) & (f <= f_hi)


def _stacked(coeffs) -> np.ndarray:
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim == 1:  # scalar AR lags
        a = a[None, :]
    return a


def _symbol(stacked: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    """``I - sum_k A_k exp(-j w k)``; stacked: (.., M, M*p) -> (.., F, M, M)."""
    M = stacked.shape[-2]
    p = stacked.shape[-1] // M
    lags = np.moveaxis(stacked.reshape(stacked.shape[:-1] + (p, M)), -2, -3)  # (.., p, M, M)
    phase = np.exp(-1j * np.outer(omegas, np.arange(1, p + 1)))  # (F, p)
    poly = np.einsum("fk,...kij->...fij", phase, lags)
    return np.eye(M) - poly


def _invert(sym: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(sym)
    bad = ~(cond < _COND_LIMIT)
    if bad.any():
        f_idx = np.argwhere(bad)[0][-1]
        raise SpectralSingularityError(float(omegas[f_idx]))
    return np.linalg.inv(sym)


def transfer_matrix(coeffs, grid: FrequencyGrid) -> np.ndarray:
    """``H(w) = [I - sum_k A_k e^{-jwk}]^{-1}`` on the grid, shape (F, M, M).

    ``coeffs`` is ``[A_1 ... A_p]`` of shape (M, M*p); a 1-D array is read as
    the lags of a scalar AR model.
    """
    omegas = grid.omegas
    return _invert(_symbol(_stacked(coeffs), omegas), omegas)


def psd(H: np.ndarray, sigma_u) -> np.ndarray:
    """``P(w) = H(w) Sigma_U H(w)^*``, Hermitian-symmetrized."""
    sigma_u = np.atleast_2d(np.asarray(sigma_u, dtype=float))
    P = H @ sigma_u @ np.conj(np.swapaxes(H, -1, -2))
    return 0.5 * (P + np.conj(np.swapaxes(P, -1, -2)))


def _logdet_hermitian(P: np.ndarray):
    """log det of Hermitian PD blocks via Cholesky; NaN + False where that fails."""
    shape = P.shape[:-2]
    flat = P.reshape((-1,) + P.shape[-2:])
    out = np.full(flat.shape[0], np.nan)
    ok = np.ones(flat.shape[0], bool)
    try:
        chol = np.linalg.cholesky(flat)
        out[:] = 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1).real).sum(axis=-1)
    except np.linalg.LinAlgError:
        for i, blk in enumerate(flat):
            try:
                out[i] = 2.0 * np.log(np.diagonal(np.linalg.cholesky(blk)).real).sum()
            except np.linalg.LinAlgError:
                ok[i] = False
    return out.reshape(shape), ok.reshape(shape)


def spectral_entropy_rate(P_S: np.ndarray, omegas: np.ndarray | None = None) -> np.ndarray:
    """``0.5 * log((2 pi e)^Q det P_S(w))`` at each frequency, in nats.

    ``P_S`` has shape (F, Q, Q) (or (F,) for a scalar spectrum).
    """
    P = np.asarray(P_S)
    if P.ndim == 1:
        P = P[:, None, None]
    asym = np.abs(P - np.conj(np.swapaxes(P, -1, -2))).max(axis=(-2, -1))
    scale = np.abs(P).max(axis=(-2, -1))
    logdet, ok = _logdet_hermitian(P)
    ok &= asym <= _HERM_TOL * np.maximum(scale, 1.0)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        where = f"omega={omegas[i]:.6g}" if omegas is not None else f"grid index {i}"
        raise SpectralDegeneracyError(f"spectral density not Hermitian positive definite at {where}")
    return 0.5 * (P.shape[-1] * LOG_2PIE + logdet)


def integrate_spectrum(values, grid: FrequencyGrid) -> np.ndarray | float:
    """``(1/2pi) * integral over [-pi, pi]`` of an even spectrum sampled on ``grid``.

    Trapezoid rule along the last axis.
    """
    v = np.asarray(values, dtype=float)
    res = _trapezoid(v, grid.omegas, axis=-1) / np.pi
    return float(res) if np.ndim(res) == 0 else res


def spectral_entropy_rates(
    model: TvVarModel,
    subsets: Iterable[Sequence[int]],
    grid: FrequencyGrid,
    steps: Sequence[int] | None = None,
    chunk_elems: int = 2_000_000,
):
    """Spectral entropy rate of each subset at each (step, frequency).

    One PSD evaluation per step is shared by every subset.  Steps without an
    estimate, or whose spectrum is singular or degenerate, come back as NaN
    rows with a reason.

    Returns
    -------
    values : dict
        subset -> ndarray of shape (n_steps, n_freq).
    reasons : dict
        step index -> explanation.
    """
    subsets = list(dict.fromkeys(_as_subset(s, model.M) for s in subsets))
    steps = np.arange(model.T) if steps is None else np.asarray(steps, int)
    omegas = grid.omegas
    F = grid.n_freq
    values = {s: np.full((len(steps), F), np.nan) for s in subsets}
    reasons: dict[int, str] = {}
    chunk = max(1, chunk_elems // (F * model.M**2))
    for start in range(0, len(steps), chunk):
        sel = np.arange(start, min(len(steps), start + chunk))
        sel = sel[model.available[steps[sel]]]
        for i in range(start, min(len(steps), start + chunk)):
            if not model.available[steps[i]]:
                reasons[int(steps[i])] = "no estimate"
        if not sel.size:
            continue
        sym = _symbol(model.coeffs[steps[sel]], omegas)  # (B, F, M, M)
        cond = np.linalg.cond(sym)
        singular = ~np.all(cond < _COND_LIMIT, axis=-1)
        for i in sel[singular]:
            reasons[int(steps[i])] = "transfer matrix singular"
        sel, sym = sel[~singular], sym[~singular]
        if not sel.size:
            continue
        H = np.linalg.inv(sym)
        sig = model.sigma_u[steps[sel]][:, None]
        P = H @ sig @ np.conj(np.swapaxes(H, -1, -2))
        P = 0.5 * (P + np.conj(np.swapaxes(P, -1, -2)))
        for s in subsets:
            blk = P[..., s, :][..., :, s]
            logdet, ok = _logdet_hermitian(blk)
            h = 0.5 * (len(s) * LOG_2PIE + logdet)
            rows_ok = ok.all(axis=-1)
            for i in sel[~rows_ok]:
                reasons[int(steps[i])] = f"spectral density of subset {s} degenerate"
            values[s][sel[rows_ok]] = h[rows_ok]
    return values, reasons
