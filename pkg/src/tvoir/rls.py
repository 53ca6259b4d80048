"""Recursive least squares identification of TV-VAR models.

The recursion pools the R realizations at every time step: with
``Y(t_n)`` (M x R) the present values and ``W(t_n)`` (Mp x R) the stacked
past, each step does::

    Phi  <- (1 - c) Phi + W W^T
    K     = Phi^{-1} W
    Z     = Y - A W               # a-priori error
    A    <- A + Z K^T

followed by the innovation covariance update.  ``c = 0`` never forgets and
ends on the pooled OLS solution; ``c = 1`` forgets everything and gives the
per-step OLS fit across realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InsufficientLengthError, PreconditionError, SingularNormalEquationsError
from .varcore import EpochData, TvVarModel

__all__ = [
    "RlsConfig",
    "RlsState",
    "RlsResult",
    "init_state",
    "rls_identify",
    "rls_run",
    "lagged_regressors",
    "mspe_curve",
    "select_order_mspe",
]


@dataclass(frozen=True)
class RlsConfig:
    """Settings for :func:`rls_identify`.

    ``c`` is the adaptation factor; the forgetting factor is ``1 - c``.
    ``delta`` is the ridge that seeds the correlation matrix, relative to the
    pooled data variance.  ``init_scale`` bounds the uniform draw of the
    initial coefficients.
    """

    p: int = 2
    c: float = 0.04
    init_scale: float = 1.0
    delta: float = 1e-8
    seed: int | None = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise PreconditionError("model order p must be a positive integer")
        if not 0.0 <= self.c <= 1.0:
            raise PreconditionError("adaptation factor c must lie in [0, 1]")
        if not self.delta > 0:
            raise PreconditionError("delta must be positive")
        if not self.init_scale >= 0:
            raise PreconditionError("init_scale must be non-negative")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "c", float(self.c))

    @property
    def forgetting(self) -> float:
        return 1.0 - self.c

    def replace(self, **changes) -> "RlsConfig":
        values = {k: getattr(self, k) for k in ("p", "c", "init_scale", "delta", "seed")}
        values.update(changes)
        return RlsConfig(**values)


@dataclass
class RlsState:
    """Mutable recursion state; owned by a single :func:`rls_run` call."""

    phi_w: np.ndarray
    A_hat: np.ndarray
    sigma_hat: np.ndarray


@dataclass(frozen=True)
class RlsResult:
    model: TvVarModel
    sq_errors: np.ndarray  # ||Z(t_n)||_F^2 per step, NaN for n < p
    n_realizations: int

    def mspe(self) -> float:
        """Mean squared a-priori error per process and realization."""
        model = self.model
        e = self.sq_errors[model.p :]
        return float(e.sum() / (e.size * model.M * self.n_realizations))


def init_state(config: RlsConfig, M: int, scale: float = 1.0) -> RlsState:
    """Initial conditions at ``t_p``: random coefficients, ridge ``Phi``, identity covariance."""
    Mp = M * config.p
    rng = np.random.default_rng(config.seed)
    A = rng.uniform(-config.init_scale, config.init_scale, size=(M, Mp))
    return RlsState(
        phi_w=config.delta * scale * np.eye(Mp),
        A_hat=A,
        sigma_hat=np.eye(M),
    )


def lagged_regressors(samples: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Present and stacked-past observation matrices for every step ``n >= p``.

    Returns ``Y`` of shape (T-p, M, R) and ``W`` of shape (T-p, M*p, R).
    """
    R, M, T = samples.shape
    x = samples.transpose(2, 1, 0)  # (T, M, R)
    Y = x[p:]
    W = np.concatenate([x[p - k : T - k] for k in range(1, p + 1)], axis=1)
    return Y, W


def _check(data: EpochData, config: RlsConfig):
    x = np.asarray(data.samples, dtype=float)
    if not np.all(np.isfinite(x)):
        raise PreconditionError("data contains non-finite values")
    R, M, T = x.shape
    if T <= config.p:
        raise InsufficientLengthError(f"T={T} must exceed the model order p={config.p}")
    if config.c == 1.0 and R < M * M * config.p:
        raise PreconditionError(
            f"memoryless identification (c=1) needs R >= M^2 p = {M * M * config.p}, got R={R}"
        )
    return x


def rls_run(data: EpochData, config: RlsConfig, state: RlsState | None = None) -> RlsResult:
    """Run the recursion and keep the per-step squared a-priori errors."""
    x = _check(data, config)
    R, M, T = x.shape
    p, c = config.p, config.c
    scale = float(np.mean(x.var(axis=(0, 2)))) if R * T > 1 else float(np.mean(x**2))
    st = state if state is not None else init_state(config, M, scale)

    coeffs = np.full((T, M, M * p), np.nan)
    sigmas = np.full((T, M, M), np.nan)
    sq_err = np.full(T, np.nan)
    Ys, Ws = lagged_regressors(x, p)
    lam = 1.0 - c

    for i in range(T - p):
        n = i + p
        Y, W = Ys[i], Ws[i]
        st.phi_w = lam * st.phi_w + W @ W.T
        st.phi_w = 0.5 * (st.phi_w + st.phi_w.T)
        try:
            factor = linalg.cho_factor(st.phi_w, check_finite=False)
        except linalg.LinAlgError:
            raise SingularNormalEquationsError(n) from None
        K = linalg.cho_solve(factor, W, check_finite=False)
        Z = Y - st.A_hat @ W
        st.A_hat = st.A_hat + Z @ K.T
        if not np.all(np.isfinite(st.A_hat)):
            raise SingularNormalEquationsError(n)

        if c == 1.0:
            U = Y - st.A_hat @ W
            st.sigma_hat = U @ U.T / R
        else:
            gain = c if c > 0.0 else 1.0 / (i + 1)
            st.sigma_hat = st.sigma_hat + gain * (Z @ Z.T / R - st.sigma_hat)
        st.sigma_hat = 0.5 * (st.sigma_hat + st.sigma_hat.T)

        coeffs[n] = st.A_hat
        sigmas[n] = st.sigma_hat
        sq_err[n] = np.sum(Z * Z)

    available = np.zeros(T, bool)
    finite = np.all(np.isfinite(sigmas[p:]), axis=(1, 2))
    ok = np.zeros(T - p, bool)
    if finite.any():
        # a residual covariance can lose definiteness on rank-deficient data
        ok[finite] = np.linalg.eigvalsh(sigmas[p:][finite]).min(axis=1) > 0
    available[p:] = ok
    model = TvVarModel(coeffs, sigmas, data.fs, available)
    return RlsResult(model, sq_err, R)


def rls_identify(data: EpochData, config: RlsConfig) -> TvVarModel:
    """Identify a TV-VAR(p) model from ``data``.

    Steps ``0..p-1`` carry no estimate and are marked unavailable.

    Raises
    ------
    SingularNormalEquationsError
        If the correlation matrix cannot be factorized at some step.
    PreconditionError
        For non-finite data, ``T <= p``, or ``c = 1`` with ``R < M^2 p``.
    """
    return rls_run(data, config).model


def mspe_curve(data: EpochData, c: float, Pmax: int, **config_kw) -> np.ndarray:
    """MSPE for orders ``1..Pmax``; entry ``k`` is order ``k + 1``."""
    if int(Pmax) != Pmax or Pmax < 1:
        raise PreconditionError("Pmax must be a positive integer")
    if data.T <= Pmax:
        raise InsufficientLengthError(f"T={data.T} must exceed Pmax={Pmax}")
    return np.array([rls_run(data, RlsConfig(p=p, c=c, **config_kw)).mspe() for p in range(1, Pmax + 1)])


def select_order_mspe(data: EpochData, c: float, Pmax: int, tolerance: float = 0.01, **config_kw) -> int:
    """Smallest order whose MSPE is within ``tolerance`` (relative) of the minimum."""
    curve = mspe_curve(data, c, Pmax, **config_kw)
    return int(np.flatnonzero(curve <= curve.min() * (1.0 + tolerance))[0] + 1)
