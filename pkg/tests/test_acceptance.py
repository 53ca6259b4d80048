"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints one ``PASS``/``FAIL`` line with the measured quantity.  Run
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_spd, random_stable_lags  # noqa: E402
from tvoir.bench import BENCH_MULTIPLETS, QUADRUPLET, BenchCell, run_cell  # noqa: E402
from tvoir.io import read_epochs, write_epochs  # noqa: E402
from tvoir.oir import Multiplet, OirEngine, oir_from_data  # noqa: E402
from tvoir.rls import RlsConfig, lagged_regressors, rls_identify  # noqa: E402
from tvoir.spectral import FrequencyGrid, psd, transfer_matrix  # noqa: E402
from tvoir.submodel import entropy_rate, yule_walker_covariance  # noqa: E402
from tvoir.varcore import (  # noqa: E402
    CoefficientSchedule,
    EpochData,
    TvVarModel,
    build_benchmark_model,
    constant_model,
    oscillator_coefficients,
    simulate,
)


def pair_nullity():
    rng = np.random.default_rng(2024)
    grid = FrequencyGrid(513)
    worst_t = worst_f = 0.0
    for _ in range(50):
        M, p = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        model = constant_model(random_stable_lags(rng, M, p, rng.uniform(0.3, 0.95)), random_spd(rng, M), T=2)
        pairs = [Multiplet(c) for c in itertools.combinations(range(M), 2)]
        eng = OirEngine(model, grid=grid)
        worst_t = max(worst_t, max(np.abs(s.values).max() for s in eng.oir_time(pairs)))
        worst_f = max(worst_f, max(np.abs(f.values).max() for f in eng.oir_spectral(pairs)))
    return worst_t < 1e-10 and worst_f < 1e-9, f"max|OIR|={worst_t:.1e}, max|spectral OIR|={worst_f:.1e}"


def spectral_integration():
    model = build_benchmark_model()
    steps = np.linspace(0, model.T - 1, 20).astype(int)
    sub = TvVarModel(model.coeffs[steps], model.sigma_u[steps], model.fs)
    eng = OirEngine(sub, grid=FrequencyGrid(1024, model.fs))
    err = 0.0
    for s, f in zip(eng.oir_time(BENCH_MULTIPLETS), eng.oir_spectral(BENCH_MULTIPLETS)):
        err = max(err, np.abs(f.integrated() - s.values).max())
    return err < 1e-3, f"max integration error={err:.2e} nats"


def sign_structure():
    model = build_benchmark_model()
    a = CoefficientSchedule().evaluate(model.T, model.fs)
    grid = FrequencyGrid(513, model.fs)
    eng = OirEngine(model, grid=grid)
    series = eng.oir_time(BENCH_MULTIPLETS)
    pos = min(s.values.min() for s in series)
    quad = series[BENCH_MULTIPLETS.index(QUADRUPLET)].values
    gap = quad[a == 0].min() - quad[a == 0.3].max()
    nu = eng.oir_spectral([Multiplet((0, 1, 2))])[0].values
    syn = nu[a == 0.3][:, grid.band(8, 12)].max()
    red = nu[a == 0][:, grid.band(30, 40)].min()
    ok = pos > 0 and gap > 0 and syn < 0 and red > 0
    return ok, f"min OIR={pos:.3f}, quad gap={gap:.3f}, max nu(8-12Hz,a=0.3)={syn:.3f}, min nu(30-40Hz,a=0)={red:.3f}"


def ols_limits():
    lags = np.array([[[0.5, 0.1], [-0.2, 0.4]], [[-0.3, 0.05], [0.1, -0.2]]])
    data = simulate(constant_model(lags, np.eye(2), T=1000), R=50, seed=4)
    Y, W = lagged_regressors(data.samples, 2)
    Yc, Wc = np.concatenate(list(Y), axis=1), np.concatenate(list(W), axis=1)
    ref = np.linalg.solve(Wc @ Wc.T, Wc @ Yc.T).T
    A0 = rls_identify(data, RlsConfig(p=2, c=0.0)).coeffs[-1]
    e0 = np.linalg.norm(A0 - ref) / np.linalg.norm(ref)
    A1 = rls_identify(data, RlsConfig(p=2, c=1.0)).coeffs[2:]
    ref1 = np.linalg.solve(W @ np.swapaxes(W, 1, 2), W @ np.swapaxes(Y, 1, 2))
    ref1 = np.swapaxes(ref1, 1, 2)
    e1 = (np.linalg.norm(A1 - ref1, axis=(1, 2)) / np.linalg.norm(ref1, axis=(1, 2))).max()
    return e0 < 1e-8 and e1 < 1e-8, f"c=0 rel err={e0:.1e}, c=1 max per-step rel err={e1:.1e}"


def benchmark_tracking():
    cell = BenchCell(R=50, c=0.04, waveform="square", n_iterations=20, seed=0)
    m = run_cell(cell)
    half = int(cell.period * cell.fs / 2)
    mids = np.arange(half // 2, cell.T, half)
    est, th = m.mean_trace[mids], m.theory[mids]
    signs_ok = np.array_equal(np.sign(np.diff(est)), np.sign(np.diff(th)))
    ok = signs_ok and m.bias_n_plateau < 0.25 and m.n_failed == 0
    return ok, f"plateau-midpoint level changes match={signs_ok}, plateau BIAS_N={m.bias_n_plateau:.3f}"


def fall_time_saturation():
    m = run_cell(BenchCell(R=10, c=0.0, waveform="square", n_iterations=20, seed=0))
    return m.fall_time == 2.0, f"fall_time={m.fall_time} s"


def analytic_oracles():
    g = yule_walker_covariance(constant_model([0.6], [[1.5]], T=1), 0, 20).gammas[:, 0, 0]
    e_ar = np.abs(g - 0.6 ** np.arange(21) * 1.5 / (1 - 0.36)).max()
    e_h = abs(entropy_rate([[1.0]]) - 0.5 * np.log(2 * np.pi * np.e))
    H = transfer_matrix(np.zeros((3, 6)), FrequencyGrid(513))
    S = random_spd(np.random.default_rng(0), 3)
    e_psd = np.abs(psd(H, S) - S).max()
    ok = e_ar < 1e-10 and e_h < 1e-12 and e_psd < 1e-12
    return ok, f"AR(1) err={e_ar:.1e}, entropy err={e_h:.1e}, white PSD err={e_psd:.1e}"


def invariances():
    rng = np.random.default_rng(8)
    lags = random_stable_lags(rng, 4, 2, 0.8)
    model = constant_model(lags, random_spd(rng, 4), T=3)
    grid = FrequencyGrid(129)
    eng = OirEngine(model, grid=grid)
    base = Multiplet((0, 2, 3))
    perm_err = 0.0
    for perm in itertools.permutations(base.indices):
        e2 = OirEngine(model, grid=grid)
        perm_err = max(
            perm_err,
            np.abs(e2.oir_time([perm])[0].values - eng.oir_time([base])[0].values).max(),
            np.abs(e2.oir_spectral([perm])[0].values - eng.oir_spectral([base])[0].values).max(),
        )
    data = simulate(constant_model(lags, np.eye(4), T=400), R=20, seed=3)
    x = data.samples * np.array([10.0, 0.01, 1.0, 3.0])[None, :, None]
    kw = dict(config=RlsConfig(p=2, c=0.05), multiplets=[base], grid=FrequencyGrid(65), q=10)
    a, b = oir_from_data(data, **kw), oir_from_data(EpochData(x), **kw)
    scale_err = max(
        np.nanmax(np.abs(a.series[base].values - b.series[base].values)),
        np.nanmax(np.abs(a.fields[base].values - b.fields[base].values)),
    )
    return perm_err < 1e-10 and scale_err < 1e-6, f"permutation err={perm_err:.1e}, rescaling err={scale_err:.1e}"


def common_driver_model(fs=2000.0, T=360, onset=120, peak_ms=20.0, driver_hz=60.0):
    """Six channels; Y5 (gamma oscillator) briefly drives Y4 and Y6 around ``peak_ms``."""
    t_ms = (np.arange(T) - onset) / fs * 1e3
    g = 0.6 * np.exp(-0.5 * ((t_ms - peak_ms) / 5.0) ** 2)
    A = np.zeros((T, 2, 6, 6))
    for i, (f, rho) in enumerate([(10, 0.97), (25, 0.95), (40, 0.95)]):
        A[:, 0, i, i], A[:, 1, i, i] = oscillator_coefficients(rho, f, fs)
    A[:, 0, 3, 3] = A[:, 0, 5, 5] = 0.5
    A[:, 0, 4, 4], A[:, 1, 4, 4] = oscillator_coefficients(0.98, driver_hz, fs)
    A[:, 0, 3, 4] = A[:, 0, 5, 4] = g
    coeffs = A.transpose(0, 2, 1, 3).reshape(T, 6, 12)
    return TvVarModel(coeffs, np.broadcast_to(np.eye(6), (T, 6, 6)), fs), t_ms


def synthetic_common_driver():
    import tempfile

    model, t_ms = common_driver_model()
    raw = simulate(model, R=50, seed=0)
    with tempfile.TemporaryDirectory() as d:
        data = read_epochs(write_epochs(raw, Path(d) / "epochs"))
    grid = FrequencyGrid(257, data.fs)
    trip = Multiplet((3, 4, 5))
    res = oir_from_data(data, RlsConfig(p=2, c=0.1), [trip], grid, q=20)
    s, f = res.series[trip].values, res.fields[trip].values
    k = int(np.nanargmax(s))
    f_peak = grid.freqs[int(np.argmax(f[k]))]
    ok = abs(t_ms[k] - 20.0) <= 10.0 and 50.0 <= f_peak <= 70.0
    return ok, f"triplet OIR peak at {t_ms[k]:+.1f} ms (programmed +20), spectral peak {f_peak:.1f} Hz (driver 60)"


CRITERIA = {
    1: ("pair nullity", pair_nullity),
    2: ("spectral integration", spectral_integration),
    3: ("benchmark sign structure", sign_structure),
    4: ("OLS limits", ols_limits),
    5: ("benchmark tracking", benchmark_tracking),
    6: ("fall-time saturation", fall_time_saturation),
    7: ("analytic oracles", analytic_oracles),
    8: ("permutation and scale invariance", invariances),
    9: ("synthetic common-driver epochs", synthetic_common_driver),
}


def _run(number):
    name, fn = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn()
    line = f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'}  {detail}  [{time.perf_counter() - t0:.1f} s]"
    return bool(ok), line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = _run(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_run(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
