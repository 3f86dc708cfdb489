"""On-disk formats for keys, codewords, reports and tables.

Key and codeword files are one JSON header line followed by a binary payload.

* Bit strings are packed LSB-first within each octet, padded with zero bits
  to a whole octet.  G is stored row by row (n rows of ceil(g/8) octets),
  then the pad z (ceil(n/8) octets).
* A secret key stores P as r rows of t sorted column indices, each a
  little-endian uint32, then z.
* Public and secret halves always live in separate files.

Fixture: an 8 x 2 generator with rows 00, 10, 01, 11, 00, 10, 01, 11
(column 0 first) packs to the octets 00 01 02 03 00 01 02 03.

Key headers may carry the integer seed that produced the key.  Seeds expand
through numpy's SeedSequence into a PCG64 generator (see ``prcbreak.rng``),
so a seed plus the numpy version pins down every random draw.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import jsonschema
import numpy as np

from .complexity import ComplexityRow
from .gf2 import BitMatrix, BitVector, SparseRowMatrix
from .report import AttackReport
from .scheme import Codeword, InvalidParams, KeyPair, PrcParams, PublicKey, SecretKey

KEY_MAGIC = "PRCKEY1"
CODEWORD_MAGIC = "PRCCW1"
INDEX_DTYPE = np.dtype("<u4")
MAX_HEADER = 1 << 16


class FormatError(ValueError):
    """Base class for every malformed-input error."""


class MagicMismatch(FormatError):
    pass


class UnknownVersion(MagicMismatch):
    pass


class LengthMismatch(FormatError):
    pass


class InvariantViolation(FormatError):
    pass


def _pack(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=-1, bitorder="little").tobytes()


def _unpack(raw: bytes, rows: int, nbits: int) -> np.ndarray:
    octets = np.frombuffer(raw, dtype=np.uint8).reshape(rows, -1)
    bits = np.unpackbits(octets, axis=1, bitorder="little")
    if bits[:, nbits:].any():
        raise InvariantViolation("non-zero padding bits")
    return bits[:, :nbits]


def _check_magic(found, expected: str) -> None:
    if found == expected:
        return
    family = expected.rstrip("0123456789")
    if isinstance(found, str) and found.startswith(family) and found[len(family):].isdigit():
        raise UnknownVersion(f"unsupported format version {found!r}; this reader knows {expected!r}")
    raise MagicMismatch(f"expected magic {expected!r}, found {found!r}")


def _split(blob: bytes, magic: str) -> tuple[dict, bytes]:
    end = blob.find(b"\n", 0, MAX_HEADER)
    if end < 0:
        if not blob.startswith(b"{"):
            raise MagicMismatch(f"not a {magic} file")
        raise LengthMismatch("header line is not terminated")
    try:
        header = json.loads(blob[:end])
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MagicMismatch(f"not a {magic} file: {exc}") from None
    if not isinstance(header, dict):
        raise MagicMismatch(f"not a {magic} file")
    _check_magic(header.get("magic"), magic)
    return header, blob[end + 1 :]


def _read_blob(src) -> bytes:
    if isinstance(src, (str, os.PathLike)):
        return Path(src).read_bytes()
    return src.read()


def _write_blob(dst, blob: bytes) -> None:
    """Streams get the bytes directly; paths are replaced atomically."""
    if not isinstance(dst, (str, os.PathLike)):
        dst.write(blob)
        return
    path = Path(dst)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header_line(header: dict) -> bytes:
    return json.dumps(header, separators=(",", ":")).encode() + b"\n"


# keys

def _params_header(params: PrcParams, kind: str, seed) -> dict:
    return {
        "magic": KEY_MAGIC,
        "kind": kind,
        "scheme": params.scheme.value,
        "n": params.n,
        "r": params.r,
        "g": params.g,
        "t": params.t,
        "lambda": params.lam,
        "omega": params.omega,
        "seed": seed,
        "payload": "g-rows-lsb+z" if kind == "public" else "p-index-u32le+z",
    }


def _params_from_header(h: dict) -> PrcParams:
    try:
        return PrcParams(int(h["n"]), int(h["r"]), int(h["g"]), int(h["t"]), int(h["lambda"]),
                         float(h["omega"]), h["scheme"])
    except KeyError as exc:
        raise InvariantViolation(f"header lacks field {exc}") from None
    except (InvalidParams, ValueError, TypeError) as exc:
        raise InvariantViolation(f"header parameters invalid: {exc}") from None


def encode_public_key(pk: PublicKey, params: PrcParams, seed: int | None = None) -> bytes:
    if pk.G.rows != params.n or pk.G.cols != params.g or pk.z.length != params.n:
        raise InvariantViolation("key shape does not match parameters")
    payload = _pack(pk.G.to_bits()) + _pack(pk.z.to_bits())
    return _header_line(_params_header(params, "public", seed)) + payload


def encode_secret_key(sk: SecretKey, params: PrcParams, seed: int | None = None) -> bytes:
    P = sk.P
    if P.rows != params.r or P.cols != params.n or sk.z.length != params.n:
        raise InvariantViolation("key shape does not match parameters")
    if P.uniform_weight() != params.t:
        raise InvariantViolation(f"every P row must have weight t={params.t}")
    idx = np.sort(P.support_array(), axis=1).astype(INDEX_DTYPE)
    payload = idx.tobytes() + _pack(sk.z.to_bits())
    return _header_line(_params_header(params, "secret", seed)) + payload


def _decode_key(blob: bytes):
    h, payload = _split(blob, KEY_MAGIC)
    params = _params_from_header(h)
    n, r, g, t = params.n, params.r, params.g, params.t
    zlen = math.ceil(n / 8)
    kind = h.get("kind")
    if kind == "public":
        glen = n * math.ceil(g / 8)
        if len(payload) != glen + zlen:
            raise LengthMismatch(f"public payload is {len(payload)} bytes, expected {glen + zlen}")
        G = BitMatrix.from_bits(_unpack(payload[:glen], n, g))
        z = BitVector.from_bits(_unpack(payload[glen:], 1, n)[0])
        return h, params, PublicKey(G, z)
    if kind == "secret":
        plen = r * t * INDEX_DTYPE.itemsize
        if len(payload) != plen + zlen:
            raise LengthMismatch(f"secret payload is {len(payload)} bytes, expected {plen + zlen}")
        idx = np.frombuffer(payload[:plen], dtype=INDEX_DTYPE).reshape(r, t).astype(np.int64)
        if idx.size and (idx.max() >= n or np.any(np.diff(idx, axis=1) <= 0)):
            raise InvariantViolation("P rows must hold strictly increasing indices below n")
        z = BitVector.from_bits(_unpack(payload[plen:], 1, n)[0])
        return h, params, SecretKey(SparseRowMatrix.from_array(n, idx), z)
    raise InvariantViolation(f"unknown key kind {kind!r}")


@dataclass(frozen=True)
class KeyFile:
    params: PrcParams
    key: PublicKey | SecretKey
    seed: int | None = None


def write_key(dst, key: PublicKey | SecretKey, params: PrcParams, seed: int | None = None) -> None:
    if isinstance(key, PublicKey):
        _write_blob(dst, encode_public_key(key, params, seed))
    elif isinstance(key, SecretKey):
        _write_blob(dst, encode_secret_key(key, params, seed))
    else:
        raise TypeError("key must be a PublicKey or SecretKey; write a KeyPair with write_keypair")


def read_key(src) -> KeyFile:
    h, params, key = _decode_key(_read_blob(src))
    return KeyFile(params, key, h.get("seed"))


def keypair_paths(stem) -> tuple[Path, Path]:
    stem = Path(stem)
    return stem.with_name(stem.name + ".pk"), stem.with_name(stem.name + ".sk")


def write_keypair(stem, kp: KeyPair, seed: int | None = None) -> tuple[Path, Path]:
    pk_path, sk_path = keypair_paths(stem)
    write_key(pk_path, kp.pk, kp.params, seed)
    write_key(sk_path, kp.sk, kp.params, seed)
    return pk_path, sk_path


def read_keypair(stem) -> KeyPair:
    pk_path, sk_path = keypair_paths(stem)
    pub, sec = read_key(pk_path), read_key(sk_path)
    if pub.params != sec.params or pub.key.z != sec.key.z:
        raise InvariantViolation("public and secret files belong to different keys")
    return KeyPair(pub.key, sec.key, pub.params)


# codewords

def encode_codewords(codewords, n: int | None = None) -> bytes:
    rows = [c.x if isinstance(c, Codeword) else c for c in codewords]
    if n is None:
        if not rows:
            raise ValueError("n is required for an empty codeword list")
        n = rows[0].length
    if any(v.length != n for v in rows):
        raise InvariantViolation("codewords differ in length")
    prov = [c.provenance if isinstance(c, Codeword) else "fresh" for c in codewords]
    header = {"magic": CODEWORD_MAGIC, "n": n, "count": len(rows), "provenance": prov}
    bits = np.stack([v.to_bits() for v in rows]) if rows else np.zeros((0, n), dtype=np.uint8)
    return _header_line(header) + _pack(bits)


def decode_codewords(blob: bytes) -> list[Codeword]:
    h, payload = _split(blob, CODEWORD_MAGIC)
    try:
        n, count = int(h["n"]), int(h["count"])
        prov = list(h.get("provenance") or ["fresh"] * count)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolation(f"bad codeword header: {exc}") from None
    if n < 1 or count < 0 or len(prov) != count:
        raise InvariantViolation("codeword header counts are inconsistent")
    width = math.ceil(n / 8)
    if len(payload) != count * width:
        raise LengthMismatch(f"codeword payload is {len(payload)} bytes, expected {count * width}")
    bits = _unpack(payload, count, n) if count else np.zeros((0, n), dtype=np.uint8)
    return [Codeword(BitVector.from_bits(b), p) for b, p in zip(bits, prov)]


def write_codewords(dst, codewords, n: int | None = None) -> None:
    _write_blob(dst, encode_codewords(codewords, n))


def read_codewords(src) -> list[Codeword]:
    return decode_codewords(_read_blob(src))


# reports

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["attack", "status", "seed", "params", "counters", "statistic", "threshold",
                 "verdict", "details", "wall_time", "failure_reason"],
    "properties": {
        "attack": {"type": "string"},
        "status": {"enum": ["SUCCESS", "FAILURE"]},
        "seed": {"type": ["integer", "null"]},
        "params": {"type": "object"},
        "counters": {"type": "object"},
        "statistic": {"type": ["number", "null"]},
        "threshold": {"type": ["number", "null"]},
        "verdict": {"type": ["boolean", "null"]},
        "details": {"type": "object"},
        "wall_time": {"type": "number", "minimum": 0},
        "failure_reason": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def report_json(report: AttackReport) -> str:
    d = _jsonable(report.as_dict())
    jsonschema.validate(d, REPORT_SCHEMA)
    return json.dumps(d, indent=2)


def write_report(dst, report: AttackReport) -> None:
    _write_blob(dst, (report_json(report) + "\n").encode())


def read_report(src) -> AttackReport:
    raw = _read_blob(src)
    try:
        d = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MagicMismatch(f"not a report: {exc}") from None
    try:
        jsonschema.validate(d, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvariantViolation(exc.message) from None
    return AttackReport(**d)


# complexity tables

TABLE_COLUMNS = [f.name for f in fields(ComplexityRow)]
LLM_COLUMNS = [c for c in TABLE_COLUMNS if c not in ("eta", "log2_t_overlay_concrete")]
TABLE_DECIMALS = {"epsilon": 3, "rho": 3, "eta": 3}


def _fmt(name: str, v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return f"{v:.{TABLE_DECIMALS.get(name, 2)}f}"


def table_columns(rows: list[ComplexityRow]) -> list[str]:
    """LLM tables drop the two GIM-only columns; an empty table keeps them all."""
    if rows and all(r.eta is None and r.log2_t_overlay_concrete is None for r in rows):
        return LLM_COLUMNS
    return TABLE_COLUMNS


def table_csv(rows: list[ComplexityRow]) -> str:
    cols = table_columns(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        d = row.as_dict()
        w.writerow([_fmt(c, d[c]) for c in cols])
    return buf.getvalue()


def parse_table_csv(text: str) -> list[ComplexityRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames not in (TABLE_COLUMNS, LLM_COLUMNS):
        raise InvariantViolation(f"unexpected columns {reader.fieldnames}")
    out = []
    for rec in reader:
        vals = {}
        for c in TABLE_COLUMNS:
            s = rec.get(c, "")
            vals[c] = None if s == "" else int(s) if c in ("t", "lam") else float(s)
        out.append(ComplexityRow(**vals))
    return out


def table_json(rows: list[ComplexityRow]) -> str:
    return json.dumps([_jsonable(r.as_dict()) for r in rows], indent=2)


def write_table(dst, rows: list[ComplexityRow], fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise ValueError("fmt must be 'csv' or 'json'")
    text = table_csv(rows) if fmt == "csv" else table_json(rows) + "\n"
    _write_blob(dst, text.encode())
