"""On-disk bundle format for purified chains.

Layout of a ``.lpdo`` bundle file:

    bytes 0..5    magic b"LPDO1\\n"
    bytes 6..13   unsigned little-endian 64-bit manifest length L
    bytes 14..    UTF-8 JSON manifest of L bytes
    afterwards    per-site tensor payloads, concatenated in site order

The manifest records ``format_version``, ``n_sites``, ``phys_dim``,
``ortho_center`` (or null) and per-site leg dims. Each payload holds the
site tensor in C order over axes (s, left bond, right bond, kraus) as
little-endian float64 pairs (re, im) per entry. Save/load round-trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .lpdo import LpdoChain, _site

MAGIC = b"LPDO1\n"
FORMAT_VERSION = 1


class BundleFormatError(ValueError):
    """Malformed or unsupported bundle file."""


def save_bundle(chain: LpdoChain, path) -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_sites": chain.n_sites,
        "phys_dim": 2,
        "ortho_center": chain.ortho_center,
        "sites": [
            {"dims": {"s": t.data.shape[0], "l": t.data.shape[1],
                      "r": t.data.shape[2], "k": t.data.shape[3]}}
            for t in chain.sites
        ],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in chain.sites:
            data = np.ascontiguousarray(t.data, dtype=np.complex128)
            pairs = np.empty(data.size * 2, dtype="<f8")
            pairs[0::2] = data.reshape(-1).real
            pairs[1::2] = data.reshape(-1).imag
            fh.write(pairs.tobytes())


def load_bundle(path) -> LpdoChain:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise BundleFormatError(f"{path}: not an LPDO bundle")
    (mlen,) = struct.unpack("<Q", raw[len(MAGIC) : len(MAGIC) + 8])
    start = len(MAGIC) + 8
    try:
        manifest = json.loads(raw[start : start + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleFormatError(f"{path}: bad manifest ({exc})") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise BundleFormatError(
            f"{path}: unsupported format version {manifest.get('format_version')}"
        )
    offset = start + mlen
    sites = []
    for i, entry in enumerate(manifest["sites"]):
        d = entry["dims"]
        shape = (d["s"], d["l"], d["r"], d["k"])
        count = int(np.prod(shape)) * 2
        pairs = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        data = (pairs[0::2] + 1j * pairs[1::2]).reshape(shape)
        sites.append(_site(i, data))
    if offset != len(raw):
        raise BundleFormatError(f"{path}: trailing bytes after site payloads")
    return LpdoChain(tuple(sites), manifest["ortho_center"])
