"""Binary scheme container and raw library input.

Layout (all integers little-endian, fixed width)::

    header   magic "SCCC" | version u16 | N u32 | K u32 | l u32 | t u32
             | F u64 | m u8 | reduction polynomial u32 | seed u64
    section  tag 4s | payload length u64 | crc32 u32 | payload   (repeated)

Symbol payloads are ``uint16`` little-endian arrays in canonical order:
files, then t-subsets (lexicographic), then stripe position.  Caches list
each user's blocks sorted by (file, subset) followed by its pads sorted by
subset.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContainerError
from .gf import FieldSpec
from .scheme import (
    BroadcastMessage,
    KeyPool,
    PrecodedLibrary,
    SchemeParams,
    UserCache,
    derive_params,
)

__all__ = [
    "MAGIC",
    "VERSION",
    "SchemeContainer",
    "write_container",
    "read_container",
    "file_digest",
    "read_library",
    "write_library",
]

MAGIC = b"SCCC"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIIQBIQ")
_SECTION = struct.Struct("<4sQI")


@dataclass(eq=False)
class SchemeContainer:
    params: SchemeParams
    seed: int
    demand: tuple[int, ...]
    precoded: PrecodedLibrary
    pool: KeyPool
    caches: list[UserCache]
    message: BroadcastMessage
    original_bits: list[int]
    digests: list[bytes]


def file_digest(bits: np.ndarray) -> bytes:
    return hashlib.sha256(np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()).digest()


def _sym(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<u2").tobytes()


def _cache_order(params: SchemeParams, k: int):
    blocks = [(n, T) for n in range(params.n_files) for T in params.subsets if k in T]
    keys = [T for T in params.plus_subsets if k in T]
    return blocks, keys


def write_container(path, c: SchemeContainer) -> None:
    p = c.params
    sections = [
        (b"DMND", np.asarray(c.demand, dtype="<u4").tobytes()),
        (b"LENS", np.asarray(c.original_bits, dtype="<u8").tobytes()),
        (b"HASH", b"".join(c.digests)),
        (b"BLKS", _sym(c.precoded.blocks)),
        (b"YKEY", _sym(c.precoded.y_keys)),
        (b"EKEY", _sym(c.pool.e_keys)),
    ]
    for cache in c.caches:
        blocks, keys = _cache_order(p, cache.user)
        items = [cache.blocks[b] for b in blocks] + [cache.e_keys[T] for T in keys]
        payload = struct.pack("<I", cache.user) + _sym(np.stack(items))
        sections.append((b"CACH", payload))
    sections.append((b"MESG", _sym(np.stack([c.message.symbols[T] for T in p.plus_subsets]))))

    out = bytearray(
        _HEADER.pack(
            MAGIC, VERSION, p.n_files, p.n_users, p.collusion, p.t, p.file_bits, p.m,
            p.spec.reduction_polynomial, c.seed,
        )
    )
    for tag, payload in sections:
        out += _SECTION.pack(tag, len(payload), zlib.crc32(payload)) + payload
    Path(path).write_bytes(bytes(out))


def _read_sections(data: bytes, offset: int):
    sections = []
    while offset < len(data):
        if offset + _SECTION.size > len(data):
            raise ContainerError("truncated section header")
        tag, length, crc = _SECTION.unpack_from(data, offset)
        offset += _SECTION.size
        payload = data[offset: offset + length]
        if len(payload) != length:
            raise ContainerError(f"section {tag!r} truncated")
        if zlib.crc32(payload) != crc:
            raise ContainerError(f"checksum mismatch in section {tag!r}")
        sections.append((tag, payload))
        offset += length
    return sections


def read_container(path) -> SchemeContainer:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ContainerError("file too short for a container header")
    magic, version, n, k, l, t, f, m, poly, seed = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    try:
        params = derive_params(n, k, l, t, f, spec=FieldSpec(m, poly))
    except Exception as exc:
        raise ContainerError(f"invalid header parameters: {exc}") from exc

    s = params.stripe_len
    dt = params.spec.dtype

    def sym(payload, shape):
        arr = np.frombuffer(payload, dtype="<u2")
        if arr.size != int(np.prod(shape)):
            raise ContainerError(f"payload holds {arr.size} symbols, expected shape {shape}")
        if arr.size and arr.max() >= params.spec.order:
            raise ContainerError("symbol outside the field")
        return arr.reshape(shape).astype(dt)

    found: dict[bytes, list[bytes]] = {}
    for tag, payload in _read_sections(data, _HEADER.size):
        found.setdefault(tag, []).append(payload)
    for tag in (b"DMND", b"LENS", b"HASH", b"BLKS", b"YKEY", b"EKEY", b"MESG"):
        if len(found.get(tag, [])) != 1:
            raise ContainerError(f"expected exactly one {tag!r} section")

    demand = tuple(int(x) for x in np.frombuffer(found[b"DMND"][0], dtype="<u4"))
    lens = [int(x) for x in np.frombuffer(found[b"LENS"][0], dtype="<u8")]
    hashes = found[b"HASH"][0]
    if len(demand) != k or len(lens) != n or len(hashes) != 32 * n:
        raise ContainerError("demand/length/digest sections do not match N and K")
    precoded = PrecodedLibrary(
        sym(found[b"BLKS"][0], (n, params.g, s)), sym(found[b"YKEY"][0], (n, params.q, s))
    )
    n_plus = len(params.plus_subsets)
    pool = KeyPool(sym(found[b"EKEY"][0], (n_plus, s)))
    mesg = sym(found[b"MESG"][0], (n_plus, s))
    message = BroadcastMessage(demand, {T: mesg[j] for j, T in enumerate(params.plus_subsets)})

    caches = {}
    for payload in found.get(b"CACH", []):
        (user,) = struct.unpack_from("<I", payload, 0)
        if user >= k or user in caches:
            raise ContainerError(f"bad or duplicate cache for user {user}")
        blocks, keys = _cache_order(params, user)
        items = sym(payload[4:], (len(blocks) + len(keys), s))
        caches[user] = UserCache(
            user,
            {b: items[i] for i, b in enumerate(blocks)},
            {T: items[len(blocks) + i] for i, T in enumerate(keys)},
        )
    if sorted(caches) != list(range(k)):
        raise ContainerError("container must hold one cache per user")
    return SchemeContainer(
        params, seed, demand, precoded, pool, [caches[u] for u in range(k)], message, lens,
        [hashes[32 * i: 32 * (i + 1)] for i in range(n)],
    )


def read_library(path) -> list[bytes]:
    """Split raw concatenated files using the ``<path>.json`` sidecar.

    The sidecar is ``{"file_lengths": [bytes, ...]}``.
    """
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    meta = json.loads(sidecar.read_text())
    lengths = [int(x) for x in meta["file_lengths"]]
    raw = path.read_bytes()
    if sum(lengths) != len(raw):
        raise ContainerError(f"sidecar lengths sum to {sum(lengths)} but {path} has {len(raw)} bytes")
    files, offset = [], 0
    for n in lengths:
        files.append(raw[offset: offset + n])
        offset += n
    return files


def write_library(path, files) -> None:
    path = Path(path)
    path.write_bytes(b"".join(files))
    path.with_name(path.name + ".json").write_text(json.dumps({"file_lengths": [len(f) for f in files]}))
