"""Dataset files.

Two formats, chosen by file suffix:

``.jsonl`` (default)
    UTF-8, one JSON object per line with keys ``id``, ``label``,
    ``sample_rate_hz``, ``samples`` and, for paired datasets,
    ``clean_samples``. An optional ``split`` key is written on every record.
    Floats are written with their shortest round-trip repr, so reading back
    is exact.

``.ppgd`` (binary, little-endian)
    ``b"PPGD"``, version u16, record count u64, then per record: id byte
    length u32 + UTF-8 id, label u8, rate f64, sample count u64, samples
    f32. Version 2 appends a u8 has-clean flag per record followed, when set,
    by the clean samples as f32. Samples round-trip to float32 precision.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import IntegrityError, ParseError
from .signals import Dataset, LabeledSignal, Signal

MAGIC = b"PPGD"
_REQUIRED = ("id", "label", "sample_rate_hz", "samples")


def write_dataset(dataset: Dataset, path) -> None:
    path = Path(path)
    if path.suffix == ".ppgd":
        path.write_bytes(_encode_binary(dataset))
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset.records:
            obj = {
                "id": rec.id,
                "label": rec.label,
                "sample_rate_hz": rec.signal.sample_rate_hz,
                "split": dataset.split,
                "samples": rec.signal.samples.tolist(),
            }
            if dataset.clean is not None:
                obj["clean_samples"] = dataset.clean[rec.id].samples.tolist()
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")


def read_dataset(path, split: str | None = None) -> Dataset:
    """Load a dataset file; ``split`` overrides the split stored in records."""
    path = Path(path)
    if path.suffix == ".ppgd":
        return _decode_binary(path.read_bytes(), split or "test", str(path))

    records, clean, splits = [], {}, set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or any(k not in obj for k in _REQUIRED):
                raise ParseError(f"{path}:{lineno}: record must have keys {_REQUIRED}")
            try:
                sig = Signal(obj["samples"], float(obj["sample_rate_hz"]))
                rec = LabeledSignal(str(obj["id"]), sig, int(obj["label"]))
                if "clean_samples" in obj:
                    clean[rec.id] = Signal(obj["clean_samples"], sig.sample_rate_hz)
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if "split" in obj:
                splits.add(obj["split"])
            records.append(rec)

    if split is None:
        if len(splits) > 1:
            raise IntegrityError(f"{path}: records from several splits {sorted(splits)}")
        split = splits.pop() if splits else "test"
    if clean and len(clean) != len(records):
        raise IntegrityError(f"{path}: only some records carry clean_samples")
    return Dataset(split, records, clean or None)


def _encode_binary(dataset: Dataset) -> bytes:
    version = 2 if dataset.clean is not None else 1
    parts = [MAGIC, struct.pack("<HQ", version, len(dataset.records))]
    for rec in dataset.records:
        rid = rec.id.encode("utf-8")
        x = rec.signal.samples
        parts.append(struct.pack("<I", len(rid)))
        parts.append(rid)
        parts.append(struct.pack("<BdQ", rec.label, rec.signal.sample_rate_hz, x.size))
        parts.append(x.astype("<f4").tobytes())
        if version == 2:
            parts.append(b"\x01")
            parts.append(dataset.clean[rec.id].samples.astype("<f4").tobytes())
    return b"".join(parts)


def _decode_binary(buf: bytes, split: str, name: str) -> Dataset:
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(buf):
            raise ParseError(f"{name}: truncated while reading {what} at byte {pos}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise ParseError(f"{name}: bad magic, not a PPGD file")
    version, count = struct.unpack("<HQ", take(10, "header"))
    if version not in (1, 2):
        raise ParseError(f"{name}: unsupported PPGD version {version}")
    records, clean = [], {}
    for i in range(count):
        what = f"record {i}"
        (idlen,) = struct.unpack("<I", take(4, what))
        rid = take(idlen, what).decode("utf-8")
        label, rate, n = struct.unpack("<BdQ", take(17, what))
        x = np.frombuffer(take(4 * n, what), dtype="<f4").astype(np.float64)
        try:
            rec = LabeledSignal(rid, Signal(x, rate), label)
        except ValueError as exc:
            raise ParseError(f"{name}: {what}: {exc}") from None
        records.append(rec)
        if version == 2 and take(1, what) == b"\x01":
            c = np.frombuffer(take(4 * n, what), dtype="<f4").astype(np.float64)
            clean[rid] = Signal(c, rate)
    if pos != len(buf):
        raise ParseError(f"{name}: {len(buf) - pos} trailing bytes after {count} records")
    return Dataset(split, records, clean or None)
