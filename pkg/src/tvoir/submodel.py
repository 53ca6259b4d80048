"""Frozen-coefficient lagged covariances, restricted sub-process models and
Gaussian entropy rates.

At each time step the TV-VAR is treated as the stationary VAR with that
step's coefficients.  Its lagged covariances ``Gamma_k = E[y_t y_{t-k}^T]``
come from the companion-form Lyapunov equation plus the Yule-Walker
recursion; restricting them to a channel subset and solving the subset's
own Yule-Walker system of order ``q`` gives the innovation covariance whose
log-determinant is the subset's entropy rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    CovarianceNotPDError,
    NoStationarySolutionError,
    NumericDegeneracyError,
    NumericError,
    PreconditionError,
    SingularSystemError,
)
from .varcore import TvVarModel, companion_matrix

__all__ = [
    "LOG_2PIE",
    "LaggedCovariance",
    "RestrictedModel",
    "EntropyRateSeries",
    "solve_lyapunov",
    "lagged_covariances",
    "yule_walker_covariance",
    "restricted_model",
    "entropy_rate",
    "entropy_rate_series",
    "entropy_rates",
]

LOG_2PIE = float(np.log(2.0 * np.pi * np.e))
DEFAULT_Q = 30


@dataclass(frozen=True)
class LaggedCovariance:
    """``gammas[k] = Gamma_k`` for ``k = 0..L`` at one time step."""

    gammas: np.ndarray
    t_index: int | None = None

    @property
    def L(self) -> int:
        return self.gammas.shape[0] - 1

    @property
    def M(self) -> int:
        return self.gammas.shape[1]


@dataclass(frozen=True)
class RestrictedModel:
    subset: tuple[int, ...]
    q: int
    B: np.ndarray  # (Q, Q*q), [B_1 ... B_q]
    sigma_us: np.ndarray  # (Q, Q)

    @property
    def Q(self) -> int:
        return len(self.subset)


@dataclass(frozen=True)
class EntropyRateSeries:
    """Entropy rate of a subset per time step (nats/sample, NaN where unavailable)."""

    subset: tuple[int, ...]
    values: np.ndarray
    reasons: dict[int, str] = field(default_factory=dict)

    @property
    def available(self) -> np.ndarray:
        return np.isfinite(self.values)


def _as_subset(subset: Iterable[int], M: int) -> tuple[int, ...]:
    s = tuple(int(i) for i in subset)
    if not s:
        raise PreconditionError("subset must not be empty")
    if len(set(s)) != len(s):
        raise PreconditionError(f"subset {s} has repeated indices")
    if min(s) < 0 or max(s) >= M:
        raise PreconditionError(f"subset {s} out of range for {M} channels")
    return s


def solve_lyapunov(A: np.ndarray, Q: np.ndarray, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Solve ``X = A X A^T + Q`` by doubling; batched over leading axes.

    Each pass squares the transition, so ``k`` passes sum ``2^k`` terms of
    the series ``sum_j A^j Q (A^j)^T``.  Falls back to the Kronecker solve
    for any batch member that has not converged.
    """
    X = np.array(Q, dtype=float)
    Ak = np.array(A, dtype=float)
    for _ in range(max_iter):
        incr = Ak @ X @ np.swapaxes(Ak, -1, -2)
        X = X + incr
        Ak = Ak @ Ak
        scale = np.abs(X).max(axis=(-2, -1))
        if np.all(np.abs(incr).max(axis=(-2, -1)) <= tol * scale):
            return 0.5 * (X + np.swapaxes(X, -1, -2))
    out = np.empty_like(X)
    flatA = np.reshape(A, (-1,) + A.shape[-2:])
    flatQ = np.reshape(Q, (-1,) + Q.shape[-2:])
    for i, (a, qq) in enumerate(zip(flatA, flatQ)):
        out.reshape((-1,) + X.shape[-2:])[i] = linalg.solve_discrete_lyapunov(a, qq, method="direct")
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def _gammas_from_lags(lags: np.ndarray, sigma: np.ndarray, L: int) -> np.ndarray:
    """Batched Gamma_0..Gamma_L.  lags: (B, p, M, M), sigma: (B, M, M)."""
    B, p, M, _ = lags.shape
    stacked = lags.transpose(0, 2, 1, 3).reshape(B, M, M * p)
    comp = companion_matrix(stacked)
    big_q = np.zeros((B, M * p, M * p))
    big_q[:, :M, :M] = sigma
    big = solve_lyapunov(comp, big_q)
    G = np.zeros((B, max(L, p - 1) + 1, M, M))
    for k in range(p):
        G[:, k] = big[:, :M, k * M : (k + 1) * M]
    for k in range(p, L + 1):
        acc = np.zeros((B, M, M))
        for j in range(1, p + 1):
            acc += lags[:, j - 1] @ G[:, k - j]
        G[:, k] = acc
    return G[:, : L + 1]


def lagged_covariances(model: TvVarModel, L: int, steps: Sequence[int] | None = None):
    """Gamma_0..Gamma_L at every requested step.

    Returns
    -------
    gammas : ndarray, shape (len(steps), L+1, M, M)
        NaN at steps without a stationary solution.
    reasons : dict
        Step index -> explanation for each NaN block.
    """
    if L < model.p:
        raise PreconditionError(f"max lag L={L} must be at least the model order p={model.p}")
    steps = np.arange(model.T) if steps is None else np.asarray(steps, int)
    out = np.full((len(steps), L + 1, model.M, model.M), np.nan)
    reasons: dict[int, str] = {}
    avail = model.available[steps]
    with np.errstate(invalid="ignore"):
        rad = np.full(len(steps), np.nan)
        if avail.any():
            eig = np.linalg.eigvals(companion_matrix(model.coeffs[steps[avail]]))
            rad[avail] = np.abs(eig).max(axis=-1)
        stable = avail & (rad < 1.0)
    for i in np.flatnonzero(~stable):
        n = int(steps[i])
        reasons[n] = "no estimate" if not avail[i] else f"unstable (spectral radius {rad[i]:.4f})"
    idx = np.flatnonzero(stable)
    if idx.size:
        lags = model.coeffs[steps[idx]].reshape(idx.size, model.M, model.p, model.M).transpose(0, 2, 1, 3)
        out[idx] = _gammas_from_lags(lags, model.sigma_u[steps[idx]], L)
    return out, reasons


def yule_walker_covariance(model: TvVarModel, t_n: int, L: int) -> LaggedCovariance:
    """Lagged covariances of the frozen model at step ``t_n``."""
    gam, reasons = lagged_covariances(model, L, [t_n])
    if t_n in reasons:
        raise NoStationarySolutionError(f"step {t_n}: {reasons[t_n]}")
    if not np.all(np.isfinite(gam)):
        raise NumericError(f"Lyapunov solution not finite at step {t_n}")
    return LaggedCovariance(gam[0], t_n)


def _block_toeplitz(gammas: np.ndarray, q: int) -> np.ndarray:
    """(.., q*M, q*M) matrix whose (k, j) block is Gamma_{j-k} (Gamma_{-m} = Gamma_m^T)."""
    M = gammas.shape[-1]
    lead = gammas.shape[:-3]
    ext = np.concatenate([np.swapaxes(gammas[..., q - 1 : 0 : -1, :, :], -1, -2), gammas[..., :q, :, :]], axis=-3)
    k = np.arange(q)
    lag = (k[None, :] - k[:, None]) + (q - 1)  # index into ext
    blocks = ext[..., lag, :, :]  # (.., q, q, M, M)
    return np.moveaxis(blocks, -3, -2).reshape(lead + (q * M, q * M))


def _restricted_batch(gammas: np.ndarray, subset: tuple[int, ...], q: int):
    """Batched restricted solve. gammas: (B, L+1, M, M).  Returns B, sigma."""
    g = gammas[:, : q + 1][:, :, subset][:, :, :, subset]
    Q = len(subset)
    G = _block_toeplitz(g, q)
    rhs = g[:, 1 : q + 1].transpose(0, 2, 1, 3).reshape(-1, Q, Q * q)  # [Gamma_1 .. Gamma_q]
    Bt = np.linalg.solve(G, np.swapaxes(rhs, -1, -2))
    Bm = np.swapaxes(Bt, -1, -2)
    sig = g[:, 0] - Bm @ np.swapaxes(rhs, -1, -2)
    sig = 0.5 * (sig + np.swapaxes(sig, -1, -2))
    return Bm, sig


def restricted_model(cov: LaggedCovariance, subset: Sequence[int], q: int = DEFAULT_Q) -> RestrictedModel:
    """Order-``q`` VAR of the sub-process ``subset`` implied by ``cov``.

    Raises
    ------
    SingularSystemError
        If the block-Toeplitz Yule-Walker matrix is not positive definite.
    NumericDegeneracyError
        If the resulting innovation covariance is not positive definite.
    """
    subset = _as_subset(subset, cov.M)
    if not 1 <= q <= cov.L:
        raise PreconditionError(f"restricted order q={q} must lie in 1..L={cov.L}")
    g = cov.gammas[: q + 1][:, subset][:, :, subset]
    Q = len(subset)
    G = _block_toeplitz(g, q)
    rhs = g[1 : q + 1].transpose(1, 0, 2).reshape(Q, Q * q)
    try:
        factor = linalg.cho_factor(G, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        raise SingularSystemError(f"block-Toeplitz system for subset {subset}, q={q} is singular") from None
    Bm = linalg.cho_solve(factor, rhs.T).T
    sig = g[0] - Bm @ rhs.T
    sig = 0.5 * (sig + sig.T)
    try:
        np.linalg.cholesky(sig)
    except np.linalg.LinAlgError:
        raise NumericDegeneracyError(f"innovation covariance of subset {subset} is not positive definite") from None
    return RestrictedModel(subset, q, Bm, sig)


def entropy_rate(sigma_us) -> float:
    """Gaussian entropy rate ``0.5 * log((2 pi e)^Q det(sigma_us))`` in nats."""
    s = np.atleast_2d(np.asarray(sigma_us, dtype=float))
    if s.shape[0] != s.shape[1] or not np.allclose(s, s.T, rtol=1e-10, atol=1e-14):
        raise CovarianceNotPDError("covariance must be square and symmetric")
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise CovarianceNotPDError("covariance is not positive definite") from None
    return 0.5 * s.shape[0] * LOG_2PIE + float(np.sum(np.log(np.diag(chol))))


def _entropy_batch(sig: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entropy rates of a stack of covariances; second output flags failures."""
    Q = sig.shape[-1]
    w = np.linalg.eigvalsh(sig)
    ok = np.all(np.isfinite(sig), axis=(-2, -1))
    ok[ok] = w[ok].min(axis=-1) > 0
    vals = np.full(sig.shape[0], np.nan)
    if ok.any():
        chol = np.linalg.cholesky(sig[ok])
        vals[ok] = 0.5 * Q * LOG_2PIE + np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(axis=-1)
    return vals, ok


def entropy_rates(
    model: TvVarModel,
    subsets: Iterable[Sequence[int]],
    q: int = DEFAULT_Q,
    L: int | None = None,
    chunk_elems: int = 4_000_000,
) -> dict[tuple[int, ...], EntropyRateSeries]:
    """Entropy-rate series for several subsets sharing one covariance pass.

    Per-step failures (no estimate, instability, singular systems) become NaN
    with a reason; nothing here raises for a single bad step.
    """
    L = max(q, model.p) if L is None else L
    if not 1 <= q <= L:
        raise PreconditionError(f"restricted order q={q} must lie in 1..L={L}")
    subsets = list(dict.fromkeys(_as_subset(s, model.M) for s in subsets))
    values = {s: np.full(model.T, np.nan) for s in subsets}
    reasons: dict[tuple[int, ...], dict[int, str]] = {s: {} for s in subsets}

    Qmax = max(len(s) for s in subsets) if subsets else 1
    chunk = max(1, chunk_elems // ((Qmax * q) ** 2 + (L + 1) * model.M**2))
    for start in range(0, model.T, chunk):
        steps = np.arange(start, min(model.T, start + chunk))
        gam, bad = lagged_covariances(model, L, steps)
        good = np.flatnonzero(np.all(np.isfinite(gam), axis=(1, 2, 3)))
        for s in subsets:
            reasons[s].update(bad)
            if not good.size:
                continue
            try:
                _, sig = _restricted_batch(gam[good], s, q)
                vals, ok = _entropy_batch(sig)
            except np.linalg.LinAlgError:
                vals = np.full(good.size, np.nan)
                ok = np.zeros(good.size, bool)
                for j, i in enumerate(good):
                    try:
                        rm = restricted_model(LaggedCovariance(gam[i]), s, q)
                        vals[j], ok[j] = entropy_rate(rm.sigma_us), True
                    except NumericError as exc:
                        reasons[s][int(steps[i])] = str(exc)
            for i in good[~ok]:
                reasons[s].setdefault(int(steps[i]), "restricted innovation covariance not positive definite")
            values[s][steps[good]] = vals
    return {s: EntropyRateSeries(s, values[s], reasons[s]) for s in subsets}


def entropy_rate_series(model: TvVarModel, subset: Sequence[int], q: int = DEFAULT_Q, L: int | None = None) -> EntropyRateSeries:
    """Time-resolved entropy rate of one subset."""
    return next(iter(entropy_rates(model, [subset], q, L).values()))
