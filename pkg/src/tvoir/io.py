"""Reading epochs, writing results, model dumps and config files.

Epoch formats
-------------
* A directory of CSV files, one per realization, sorted by file name.  Each
  file has a header line of channel labels and T rows of M values.  An
  optional ``meta.json`` with ``{"fs": ...}`` supplies the sampling rate.
* A binary container: 32-byte little-endian header
  (``b"HOIEPOCH"``, version u32, R u32, M u32, T u32, fs f64) followed by
  R*M*T float64 samples, realization-major, then channel, then time.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import IngestError
from .varcore import EpochData, TvVarModel

__all__ = [
    "MAGIC",
    "read_epochs",
    "write_epochs",
    "write_epochs_binary",
    "write_epochs_csv",
    "read_epochs_binary",
    "save_model",
    "load_model",
    "load_config",
    "ResultManifest",
    "write_results",
]

MAGIC = b"HOIEPOCH"
VERSION = 1
_HEADER = struct.Struct("<8sIIIId")
FMT = "%.17g"


def write_epochs_binary(data: EpochData, path) -> Path:
    path = Path(path)
    x = np.ascontiguousarray(data.samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.R, data.M, data.T, data.fs))
        fh.write(x.tobytes(order="C"))
    return path


def read_epochs_binary(path) -> EpochData:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise IngestError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, R, M, T, fs = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IngestError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise IngestError(f"{path}: unsupported version {version}")
    n = R * M * T
    if len(raw) - _HEADER.size != 8 * n:
        raise IngestError(f"{path}: expected {n} samples for R={R}, M={M}, T={T}")
    x = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(R, M, T)
    _check_finite(x, lambda r, m, t: f"{path}: realization {r}, channel {m}, sample {t}")
    return _epochs(x, fs, None, path)


def write_epochs_csv(data: EpochData, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    width = len(str(data.R))
    for r in range(data.R):
        np.savetxt(
            d / f"epoch_{r + 1:0{width}d}.csv",
            data.samples[r].T,
            fmt=FMT,
            delimiter=",",
            header=",".join(data.channel_labels),
            comments="",
        )
    (d / "meta.json").write_text(json.dumps({"fs": data.fs}) + "\n")
    return d


def _check_finite(x, where):
    bad = ~np.isfinite(x)
    if bad.any():
        raise IngestError(f"non-finite value at {where(*np.argwhere(bad)[0])}")


def _epochs(x, fs, labels, source) -> EpochData:
    try:
        return EpochData(x, fs, labels)
    except ValueError as exc:
        raise IngestError(f"{source}: {exc}") from None


def _read_csv_dir(d: Path, fs: float | None) -> EpochData:
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".csv")
    if not files:
        raise IngestError(f"{d}: no CSV files")
    meta = d / "meta.json"
    if fs is None and meta.exists():
        fs = float(json.loads(meta.read_text())["fs"])
    labels, blocks = None, []
    for f in files:
        with open(f, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise IngestError(f"{f}: needs a header and at least one row")
        head = [h.strip() for h in rows[0]]
        if labels is None:
            labels = head
        elif head != labels:
            raise IngestError(f"{f}: channel labels {head} differ from {labels}")
        try:
            block = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        except ValueError as exc:
            raise IngestError(f"{f}: {exc}") from None
        if block.ndim != 2 or block.shape[1] != len(labels):
            raise IngestError(f"{f}: rows do not have {len(labels)} columns")
        if blocks and block.shape != blocks[0].shape:
            raise IngestError(f"{f}: shape {block.shape} differs from {blocks[0].shape} in {files[0].name}")
        bad = ~np.isfinite(block)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise IngestError(f"{f}: non-finite value at data row {row + 1}, column {labels[col]!r}")
        blocks.append(block)
    x = np.stack(blocks).transpose(0, 2, 1)
    return _epochs(x, 1.0 if fs is None else fs, labels, d)


def read_epochs(path, fs: float | None = None) -> EpochData:
    """Load epochs from a CSV directory or a ``HOIEPOCH`` binary file.

    ``fs`` overrides the CSV ``meta.json``; it is ignored for binary input,
    which stores its own rate.  CSV directories without either default to
    1 Hz.
    """
    p = Path(path)
    if p.is_dir():
        return _read_csv_dir(p, fs)
    if not p.exists():
        raise IngestError(f"{p}: no such file or directory")
    return read_epochs_binary(p)


def write_epochs(data: EpochData, path) -> Path:
    """Binary for ``*.bin`` paths, a CSV directory otherwise."""
    p = Path(path)
    if p.suffix.lower() == ".bin":
        return write_epochs_binary(data, p)
    return write_epochs_csv(data, p)


def save_model(model: TvVarModel, path) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, coeffs=model.coeffs, sigma_u=model.sigma_u, fs=model.fs, available=model.available)
    return path


def load_model(path) -> TvVarModel:
    try:
        with np.load(path) as z:
            return TvVarModel(z["coeffs"], z["sigma_u"], float(z["fs"]), z["available"])
    except (OSError, KeyError, ValueError) as exc:
        raise IngestError(f"{path}: cannot load model ({exc})") from None


def load_config(path) -> dict:
    """A JSON object whose keys are CLI option names (dashes or underscores)."""
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"{path}: cannot read config ({exc})") from None
    if not isinstance(cfg, dict):
        raise IngestError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


@dataclass
class ResultManifest:
    run_id: str
    config: dict
    files: dict[str, dict[str, str]]
    step_errors: dict
    version: str = __version__
    path: str | None = field(default=None, compare=False)

    def data_files(self) -> list[str]:
        return [f for entry in self.files.values() for f in entry.values()]


def run_id(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_series(path: Path, times, values):
    with open(path, "w", newline="") as fh:
        fh.write("time_s,oir_nats\n")
        for t, v in zip(times, values):
            fh.write(f"{FMT % t},{FMT % v}\n")


def _write_field(path: Path, times, freqs, values):
    with open(path, "w", newline="") as fh:
        fh.write("time_s\\freq_hz," + ",".join(FMT % f for f in freqs) + "\n")
        for t, row in zip(times, values):
            fh.write(FMT % t + "," + ",".join(FMT % v for v in row) + "\n")


def write_results(series, fields, out_dir, config: dict | None = None, labels=None, onset: float = 0.0, step_errors=None) -> ResultManifest:
    """Write one series CSV and one time-frequency CSV per multiplet plus ``manifest.json``.

    ``series`` and ``fields`` map multiplets to :class:`OirSeries` and
    :class:`TimeFreqField`.  Times are seconds from the first sample minus
    ``onset``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"{out} is not writable")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    config = dict(config or {})
    files: dict[str, dict[str, str]] = {}
    for m, s in series.items():
        label = m.label(labels)
        times = np.arange(len(s.values)) / s.fs - onset
        entry = {"series": f"oir_{label}_series.csv"}
        _write_series(out / entry["series"], times, s.values)
        if m in fields:
            f = fields[m]
            entry["field"] = f"oir_{label}_tf.csv"
            _write_field(out / entry["field"], times, f.grid.freqs, f.values)
        files[label] = entry
    manifest = ResultManifest(run_id(config), config, files, {str(k): v for k, v in (step_errors or {}).items()})
    body = asdict(manifest)
    body.pop("path")
    (out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True, default=str) + "\n")
    manifest.path = str(out / "manifest.json")
    return manifest
