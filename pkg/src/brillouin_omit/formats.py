"""
On-disk formats.

Spectrum CSV::

    # power_w = 0.2778
    # delta_hz = 0
    # temperature_c = 23.5
    # seed = 7
    # model_version = 1
    omega_hz,reflectivity,sigma
    12415000000,0.99,0.0001
    ...

Map files carry the same header and an extra leading ``delta_hz`` column.
Floats are written with 17 significant digits, so a write/read cycle is
bit-exact.  Files are UTF-8 with LF line endings and are replaced atomically.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .model import MODEL_VERSION, DomainError
from .synthesis import DetuningMap, Spectrum, SpectrumMeta

__all__ = [
    "FormatError",
    "write_spectrum",
    "read_spectrum",
    "write_map",
    "read_map",
    "atomic_write_text",
    "format_float",
    "write_json",
]

SPECTRUM_COLUMNS = "omega_hz,reflectivity,sigma"
MAP_COLUMNS = "delta_hz,omega_hz,reflectivity,sigma"


class FormatError(DomainError):
    """Malformed data file; the message names the file and line."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                               prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(meta: SpectrumMeta, delta) -> list[str]:
    lines = [f"# power_w = {format_float(meta.power_in)}"]
    if delta is not None:
        lines.append(f"# delta_hz = {format_float(delta)}")
    if meta.temperature is not None:
        lines.append(f"# temperature_c = {format_float(meta.temperature)}")
    if meta.seed is not None:
        lines.append(f"# seed = {int(meta.seed)}")
    if meta.timestamp is not None:
        lines.append(f"# timestamp = {meta.timestamp}")
    lines.append(f"# model_version = {MODEL_VERSION}")
    return lines


def spectrum_to_text(spec: Spectrum) -> str:
    lines = _header(spec.meta, spec.meta.delta)
    lines.append(SPECTRUM_COLUMNS)
    for w, r, s in zip(spec.omega, spec.r_values, spec.sigma):
        lines.append(f"{format_float(w)},{format_float(r)},{format_float(s)}")
    return "\n".join(lines) + "\n"


def map_to_text(dmap: DetuningMap) -> str:
    lines = _header(dmap.meta, None)
    lines.append(MAP_COLUMNS)
    for k, d in enumerate(dmap.delta_grid):
        ds = format_float(d)
        for w, r, s in zip(dmap.omega_grid, dmap.r_matrix[k], dmap.sigma[k]):
            lines.append(f"{ds},{format_float(w)},{format_float(r)},{format_float(s)}")
    return "\n".join(lines) + "\n"


def write_spectrum(path, spec: Spectrum) -> None:
    atomic_write_text(path, spectrum_to_text(spec))


def write_map(path, dmap: DetuningMap) -> None:
    atomic_write_text(path, map_to_text(dmap))


_HEADER_KEYS = {"power_w", "delta_hz", "temperature_c", "seed", "timestamp", "model_version"}


def _parse(path, columns: str):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    header = {}
    rows = []
    seen_columns = False
    ncol = columns.count(",") + 1
    for lineno, line in enumerate(raw, start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            if seen_columns:
                raise FormatError(f"{path}:{lineno}: header line after data")
            key, sep, value = line[1:].partition("=")
            key = key.strip()
            if not sep or key not in _HEADER_KEYS:
                raise FormatError(f"{path}:{lineno}: bad header line {line!r}")
            header[key] = value.strip()
            continue
        if not seen_columns:
            if line.strip() != columns:
                raise FormatError(f"{path}:{lineno}: expected column header {columns!r}")
            seen_columns = True
            continue
        parts = line.split(",")
        if len(parts) != ncol:
            raise FormatError(f"{path}:{lineno}: expected {ncol} fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        rows.append(values)
    if not seen_columns:
        raise FormatError(f"{path}: missing column header {columns!r}")
    if not rows:
        raise FormatError(f"{path}: no data rows")
    try:
        meta = SpectrumMeta(
            power_in=float(header.get("power_w", 0.0)),
            delta=float(header.get("delta_hz", "nan")),
            temperature=float(header["temperature_c"]) if "temperature_c" in header else None,
            seed=int(header["seed"]) if "seed" in header else None,
            timestamp=header.get("timestamp"),
        )
    except ValueError as exc:
        raise FormatError(f"{path}: bad header value ({exc})") from None
    return meta, np.array(rows)


def read_spectrum(path) -> Spectrum:
    meta, data = _parse(path, SPECTRUM_COLUMNS)
    try:
        return Spectrum(data[:, 0], data[:, 1], data[:, 2], meta)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None


def read_map(path) -> DetuningMap:
    meta, data = _parse(path, MAP_COLUMNS)
    deltas, first = np.unique(data[:, 0], return_index=True)
    deltas = data[np.sort(first), 0]
    n_rows = deltas.size
    if data.shape[0] % n_rows:
        raise FormatError(f"{path}: rows do not form a rectangular map")
    n_cols = data.shape[0] // n_rows
    block = data.reshape(n_rows, n_cols, 4)
    if not (np.all(block[:, :, 0] == block[:, :1, 0]) and np.all(block[:, :, 1] == block[:1, :, 1])):
        raise FormatError(f"{path}: rows do not share one delta per row and one frequency grid")
    try:
        return DetuningMap(block[:, 0, 0], block[0, :, 1], block[:, :, 2], block[:, :, 3], meta)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
