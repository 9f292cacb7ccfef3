"""On-disk formats: spectrum JSON, CSV tables, PGM rasters and run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np

from .spectra import OneParticleSpectrum, WeightedSpectrum

FORMAT_VERSION = 1

_NUM_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MODEL = {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}}

WEIGHTED_SCHEMA = {
    "type": "object",
    "required": ["version", "model", "beta", "energies", "weights"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "model": _MODEL,
        "beta": {"type": "number", "minimum": 0},
        "energies": _NUM_LIST,
        "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "meta": {"type": "object"},
    },
}

ONE_PARTICLE_SCHEMA = {
    "type": "object",
    "required": ["version", "model", "levels", "degeneracies", "offset"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "model": _MODEL,
        "levels": _NUM_LIST,
        "degeneracies": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "offset": {"type": "number"},
        "meta": {"type": "object"},
    },
}


class SpectrumFileError(ValueError):
    """Malformed or schema-invalid spectrum file."""


def package_version() -> str:
    try:
        return metadata.version("specwalk")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _split_meta(meta: dict):
    """Separate model name/params from bookkeeping keys."""
    meta = dict(meta)
    model = {"name": str(meta.pop("name", "unknown"))}
    for key in ("Delta", "alpha", "h", "gamma", "n_majorana", "k", "J"):
        if key in meta:
            model[key] = meta.pop(key)
    return model, meta


def _merge_meta(doc) -> dict:
    model = dict(doc["model"])
    meta = dict(doc.get("meta", {}))
    meta.update(model)
    return meta


def spectrum_to_dict(spec) -> dict:
    model, meta = _split_meta(spec.model_meta)
    # json emits the shortest repr that round-trips each double exactly
    if isinstance(spec, WeightedSpectrum):
        doc = {
            "version": FORMAT_VERSION,
            "model": model,
            "beta": spec.beta,
            "energies": spec.energies.tolist(),
            "weights": spec.weights.tolist(),
            "meta": meta,
        }
    elif isinstance(spec, OneParticleSpectrum):
        doc = {
            "version": FORMAT_VERSION,
            "model": model,
            "levels": spec.levels.tolist(),
            "degeneracies": spec.degeneracies.tolist(),
            "offset": spec.offset,
            "meta": meta,
        }
    else:
        raise TypeError(f"cannot serialize {type(spec).__name__}")
    return _jsonable(doc)


def spectrum_from_dict(doc):
    if not isinstance(doc, dict):
        raise SpectrumFileError("spectrum file must hold a JSON object")
    schema = ONE_PARTICLE_SCHEMA if "levels" in doc else WEIGHTED_SCHEMA
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise SpectrumFileError(f"invalid spectrum file: {exc.message}") from None
    meta = _merge_meta(doc)
    try:
        if "levels" in doc:
            return OneParticleSpectrum(doc["levels"], doc["degeneracies"], doc["offset"], meta)
        return WeightedSpectrum(doc["energies"], doc["weights"], doc["beta"], meta)
    except ValueError as exc:
        raise SpectrumFileError(f"invalid spectrum file: {exc}") from None


def write_spectrum(path, spec) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spectrum_to_dict(spec), fh, allow_nan=False)
        fh.write("\n")
    return path


def read_spectrum(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpectrumFileError(f"{path}: not valid JSON ({exc})") from None
    return spectrum_from_dict(doc)


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=1, allow_nan=True)
        fh.write("\n")
    return path


def write_csv(path, header, rows) -> Path:
    """RFC-4180 CSV (CRLF line ends) with full-precision floats."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_walk_csv(path, points) -> Path:
    z = np.asarray(points, dtype=complex)
    return write_csv(path, ["step", "re", "im"], ((i, float(p.real), float(p.imag)) for i, p in enumerate(z)))


def write_sff_csv(path, times, values) -> Path:
    return write_csv(path, ["t", "sff"], zip(map(float, times), map(float, values)))


def pgm_bytes(bits) -> bytes:
    """Binary PGM (P5): 0 empty, 255 occupied, rows top to bottom as stored."""
    b = np.asarray(bits, dtype=bool)
    h, w = b.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + (b.astype(np.uint8) * 255).tobytes()


def write_pgm(path, bits) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(bits))
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = map(int, fields[1:])
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + w * h], dtype=np.uint8)
    if pixels.size != w * h or maxval > 255:
        raise ValueError("truncated or unsupported PGM")
    return pixels.reshape(h, w) > 0


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_path, *, command: str, argv, seeds=None, inputs=(), outputs=(), wall_clock: float | None = None, extra=None) -> Path:
    """Write ``<out_path>.manifest.json`` describing how the outputs were made."""
    out_path = Path(out_path)
    manifest = {
        "command": command,
        "argv": list(argv),
        "seeds": _jsonable(seeds or {}),
        "inputs": [{"path": str(p), "sha256": sha256_file(p)} for p in inputs],
        "outputs": [{"path": str(p), "sha256": sha256_file(p)} for p in outputs],
        "version": package_version(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "threads": os.environ.get("SPECWALK_THREADS"),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_clock_s": wall_clock,
    }
    if extra:
        manifest.update(_jsonable(extra))
    path = out_path.with_name(out_path.name + ".manifest.json")
    write_json(path, manifest)
    return path
