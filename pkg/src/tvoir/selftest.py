"""Quick analytic checks behind ``tvoir selftest``."""

from __future__ import annotations

import numpy as np

from .oir import Multiplet, OirEngine
from .spectral import FrequencyGrid, integrate_spectrum
from .submodel import LOG_2PIE, yule_walker_covariance
from .varcore import build_benchmark_model, constant_model


def _ar1_variance():
    a, s2 = 0.7, 2.0
    g = yule_walker_covariance(constant_model([[[a]]], [[s2]], T=3), 0, 1).gammas
    return abs(g[0, 0, 0] - s2 / (1 - a * a)) < 1e-10


def _white_noise_entropy():
    sigma = np.diag([1.0, 2.0, 3.0])
    model = constant_model(np.zeros((1, 3, 3)), sigma, T=2)
    eng = OirEngine(model, q=2)
    h = eng.entropy_rate([(0, 1, 2)])[(0, 1, 2)][0]
    return abs(h - 0.5 * (3 * LOG_2PIE + np.log(6.0))) < 1e-10


def _pair_is_zero():
    model = build_benchmark_model(T=5)
    vals = OirEngine(model, q=10).oir_time([Multiplet((0, 1))])[0].values
    return np.all(vals == 0.0)


def _spectral_matches_time():
    model = build_benchmark_model(T=3)
    eng = OirEngine(model, q=30, grid=FrequencyGrid(1025, model.fs))
    m = Multiplet((0, 1, 2, 3))
    t = eng.oir_time([m])[0].values
    f = eng.oir_spectral([m])[0].integrated()
    return np.max(np.abs(t - f)) < 1e-6


CHECKS = {
    "AR(1) variance from Yule-Walker": _ar1_variance,
    "white-noise entropy rate": _white_noise_entropy,
    "pair OIR is exactly zero": _pair_is_zero,
    "spectral OIR integrates to time-domain OIR": _spectral_matches_time,
}


def run_all(verbose: bool = True) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        passed = bool(fn())
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
