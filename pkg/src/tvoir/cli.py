"""Command-line interface: ``tvoir simulate | identify | oir | bench | selftest``.

Exit status is 0 on success, 1 for usage and input errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import BenchCell, run_cell
from .errors import NumericError, TvOirError
from .io import load_config, load_model, read_epochs, save_model, write_epochs, write_results
from .oir import OirEngine, enumerate_multiplets, oir_from_data
from .rls import RlsConfig, rls_identify, select_order_mspe
from .spectral import FrequencyGrid
from .varcore import CoefficientSchedule, build_benchmark_model, simulate

log = logging.getLogger("tvoir")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in str(text).split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None

    return parse


def _order(text):
    if str(text).lower() == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("order must be an integer or 'auto'") from None


def _add_rls(p, default_c):
    p.add_argument("--p", type=_order, default="auto", help="model order, or 'auto' for MSPE selection")
    p.add_argument("--pmax", type=int, default=10, help="largest order scanned when --p auto")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c", type=float, default=None, help=f"adaptation factor (default {default_c})")
    g.add_argument("--forget", type=float, default=None, help="forgetting factor 1-c")
    p.add_argument("--delta", type=float, default=1e-8, help="ridge for the initial correlation matrix, relative to data variance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--fs", type=float, default=None, help="sampling rate for CSV input without meta.json")
    p.set_defaults(default_c=default_c)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tvoir", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file whose values override command-line flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate epochs from the benchmark process or a model file")
    s.add_argument("--model", help="model dump (.npz) to simulate instead of the benchmark process")
    s.add_argument("--waveform", default="square", choices=["square", "sinusoid", "sine", "constant"])
    s.add_argument("--amplitude", type=_csv_list(float), default=[0.0, 0.3], help="lo,hi of the coupling waveform")
    s.add_argument("--period", type=float, default=4.0, help="waveform period in seconds")
    s.add_argument("--R", type=int, default=10)
    s.add_argument("--T", type=int, default=1000)
    s.add_argument("--fs", type=float, default=100.0)
    s.add_argument("--burn-in", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="epochs.bin", help="*.bin for binary, anything else is a CSV directory")

    i = sub.add_parser("identify", help="identify a TV-VAR model from epochs")
    i.add_argument("--input", required=True)
    _add_rls(i, 0.025)
    i.add_argument("--out", default="model.npz")

    o = sub.add_parser("oir", help="time-resolved and time-frequency OIR")
    src = o.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="epochs (CSV directory or binary file)")
    src.add_argument("--model", help="model dump (.npz); skips identification")
    _add_rls(o, 0.025)
    o.add_argument("--orders", type=_csv_list(int), default=None, help="multiplet orders, e.g. 3,4 (default 3..M)")
    o.add_argument("--q", type=int, default=30, help="restricted model order")
    o.add_argument("--L", type=int, default=None, help="maximum covariance lag (default max(q, p))")
    o.add_argument("--n-freq", type=int, default=513)
    o.add_argument("--onset", type=float, default=0.0, help="stimulus time in seconds; output times are relative to it")
    o.add_argument("--out", default="oir_out")

    b = sub.add_parser("bench", help="Monte Carlo benchmark on the four-variate process")
    b.add_argument("--R", type=_csv_list(int), default=[50])
    g = b.add_mutually_exclusive_group()
    g.add_argument("--forget", type=_csv_list(float), default=None, help="forgetting factors 1-c")
    g.add_argument("--c", type=_csv_list(float), default=None)
    b.add_argument("--waveform", type=_csv_list(str), default=["square"])
    b.add_argument("--iterations", type=int, default=20, help="iterations per cell (100 reproduces the full study)")
    b.add_argument("--T", type=int, default=1000)
    b.add_argument("--p", type=_order, default=2)
    b.add_argument("--pmax", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bench_metrics.csv")

    sub.add_parser("selftest", help="run quick built-in property checks")
    for sp in sub.choices.values():
        sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def _apply_config(args, parser):
    if not args.config:
        return args
    cfg = load_config(args.config)
    known = vars(args)
    unknown = sorted(k for k in cfg if k not in known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in cfg.items():
        setattr(args, k, v)
    return args


def _c_of(args) -> float:
    if args.c is not None:
        return float(args.c)
    if args.forget is not None:
        return round(1.0 - float(args.forget), 12)
    return args.default_c


def _identify(args):
    data = read_epochs(args.input, fs=args.fs)
    if args.standardize:
        data = data.standardized()
    c = _c_of(args)
    p = args.p
    if p == "auto":
        p = select_order_mspe(data, c, args.pmax, delta=args.delta, seed=args.seed)
        log.info("MSPE selected p=%d", p)
    cfg = RlsConfig(p=p, c=c, delta=args.delta, seed=args.seed)
    return data, cfg, rls_identify(data, cfg)


def cmd_simulate(args):
    if args.model:
        model = load_model(args.model)
    else:
        lo, hi = args.amplitude
        model = build_benchmark_model(CoefficientSchedule(args.waveform, lo, hi, args.period), args.fs, args.T)
    data = simulate(model, args.R, seed=args.seed, burn_in=args.burn_in)
    path = write_epochs(data, args.out)
    print(f"wrote {data.R} x {data.M} x {data.T} epochs to {path}")


def cmd_identify(args):
    data, cfg, model = _identify(args)
    save_model(model, args.out)
    print(f"identified p={cfg.p}, c={cfg.c:g} on R={data.R}, M={data.M}, T={data.T}; wrote {args.out}")


def _config_echo(args) -> dict:
    skip = {"func", "config", "verbose", "default_c", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_oir(args):
    c = _c_of(args)
    if args.model:
        model = load_model(args.model)
        labels = None
        grid = FrequencyGrid(args.n_freq, model.fs)
        orders = args.orders or list(range(3, model.M + 1))
        ms = enumerate_multiplets(model.M, orders)
        engine = OirEngine(model, args.q, args.L, grid)
        series = dict(zip(ms, engine.oir_time(ms)))
        fields = dict(zip(ms, engine.oir_spectral(ms)))
        errors = engine.reasons
    else:
        data = read_epochs(args.input, fs=args.fs)
        labels = data.channel_labels
        orders = args.orders or list(range(3, data.M + 1))
        ms = enumerate_multiplets(data.M, orders)
        grid = FrequencyGrid(args.n_freq, data.fs)
        pmax = args.pmax if args.p == "auto" else None
        cfg = RlsConfig(p=1 if args.p == "auto" else args.p, c=c, delta=args.delta, seed=args.seed)
        res = oir_from_data(data, cfg, ms, grid, args.q, args.L, args.standardize, pmax)
        series, fields, errors = res.series, res.fields, res.report["step_errors"]
        args.p_selected = res.config.p
    echo = _config_echo(args)
    echo["c_effective"] = c
    manifest = write_results(series, fields, args.out, echo, labels, args.onset, errors)
    print(f"wrote {len(manifest.data_files())} files for {len(series)} multiplets to {args.out}")


def cmd_bench(args):
    cs = args.c if args.c is not None else [round(1.0 - f, 12) for f in (args.forget or [0.96])]
    waves = [{"sine": "sinusoid"}.get(w, w) for w in args.waveform]
    p = None if args.p == "auto" else args.p
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    iters_path = out.with_name(out.stem + "_iterations.csv")
    cols = ["R", "forget", "c", "waveform", "n_iterations", "n_failed", "bias_n", "var",
            "bias_n_plateau", "var_plateau", "fall_time_s", "fall_time_relative_s"]
    rows, iter_rows = [], []
    for R, c, w in itertools.product(args.R, cs, waves):
        cell = BenchCell(R=R, c=c, waveform=w, n_iterations=args.iterations, seed=args.seed, T=args.T, p=p, pmax=args.pmax)
        m = run_cell(cell)
        row = [R, round(1.0 - c, 12), c, w, args.iterations, m.n_failed, m.bias_n, m.var,
               m.bias_n_plateau, m.var_plateau, m.fall_time, m.fall_time_relative]
        rows.append(row)
        print(",".join("" if v is None else str(v) for v in row))
        for k, vals in enumerate(zip(m.iter_bias_n, m.iter_var, m.iter_bias_n_plateau, m.iter_var_plateau)):
            iter_rows.append([R, round(1.0 - c, 12), c, w, k, *vals])
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        wr.writerows([["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r] for r in rows])
    with open(iters_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["R", "forget", "c", "waveform", "iteration", "bias_n", "var", "bias_n_plateau", "var_plateau"])
        wr.writerows(iter_rows)
    print(f"wrote {len(rows)} metric rows to {out} and per-iteration metrics to {iters_path}")


def cmd_selftest(args):
    from .selftest import run_all

    return EXIT_OK if run_all() else EXIT_NUMERIC


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "oir": cmd_oir,
    "bench": cmd_bench,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        args = _apply_config(args, parser)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        rc = COMMANDS[args.command](args)
        return EXIT_OK if rc is None else rc
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TvOirError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
