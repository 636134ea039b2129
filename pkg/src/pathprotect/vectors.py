"""Golden wire vectors.

File format: one vector per line, ``<name> <hex>``; hex is lowercase without
separators.  Blank lines and lines starting with ``#`` are ignored.

A vector of exactly 8 bytes is a bare protection header; anything longer is
a packet starting with an IPv4 header.  Packets must re-serialize byte for
byte and carry valid IPv4 and transport checksums.  The protection header
has no integrity field of its own, so a CID or SN altered to another legal
value is still a well-formed vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .errors import PathProtectError
from .wire import (PROTO_PROTECT, PROTECTION_HEADER_LEN, ProtectionHeader, Stack, parse_packet,
                   parse_protection, transport_checksum_ok)

DEFAULT_VECTORS = "golden.txt"


@dataclass
class VectorResult:
    name: str
    ok: bool
    detail: str = ""


def parse_vectors(text: str) -> list[tuple[str, bytes]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<name> <hex>'")
        name, hexstr = parts
        if hexstr != hexstr.lower():
            raise ValueError(f"line {lineno}: hex must be lowercase")
        try:
            out.append((name, bytes.fromhex(hexstr)))
        except ValueError:
            raise ValueError(f"line {lineno}: invalid hex in vector {name!r}") from None
    return out


def format_vectors(vectors) -> str:
    return "".join(f"{name} {data.hex()}\n" for name, data in vectors)


def default_vectors_text() -> str:
    return resources.files("pathprotect").joinpath("data", DEFAULT_VECTORS).read_text()


def check_vector(name: str, data: bytes) -> VectorResult:
    """Parse, re-serialize from parsed fields and compare byte for byte."""
    try:
        if len(data) == PROTECTION_HEADER_LEN:
            h = ProtectionHeader.unpack(data)
            again = h.pack()
            if len(again) != PROTECTION_HEADER_LEN:
                return VectorResult(name, False, f"protection header is {len(again)} bytes")
        else:
            p = parse_packet(data)
            if p.ip.protocol == PROTO_PROTECT and p.stack is not Stack.PROTECTED:
                return VectorResult(name, False,
                                    "tunnel packet does not carry protection header + IPv4")
            if p.stack is Stack.PROTECTED:
                ph = p.protection.pack()
                if len(ph) != PROTECTION_HEADER_LEN:
                    return VectorResult(name, False, f"protection header is {len(ph)} bytes")
                tunnel = p.data[p.ip.header_len:]
                if parse_protection(tunnel).serialize() != tunnel:
                    return VectorResult(name, False, "P/IP/TP layer does not round-trip")
            again = p.serialize()
            problem = _checksum_problem(p)
            if problem:
                return VectorResult(name, False, problem)
    except PathProtectError as e:
        return VectorResult(name, False, f"parse failed: {e}")
    if again != data:
        at = next(i for i in range(min(len(again), len(data)) + 1)
                  if i == min(len(again), len(data)) or again[i] != data[i])
        return VectorResult(name, False, f"re-serialization differs at byte {at}")
    return VectorResult(name, True)


def _checksum_problem(p) -> str:
    if not p.ip.checksum_ok:
        return "outer IPv4 checksum invalid"
    if p.inner is not None:
        if not p.inner.checksum_ok:
            return "inner IPv4 checksum invalid"
        start = p.ip.header_len + PROTECTION_HEADER_LEN + p.inner.header_len
        if not transport_checksum_ok(p.inner, p.data[start:]):
            return "inner transport checksum invalid"
    elif not transport_checksum_ok(p.ip, p.data[p.ip.header_len:]):
        return "transport checksum invalid"
    return ""


def run_vectors(text: str) -> list[VectorResult]:
    return [check_vector(name, data) for name, data in parse_vectors(text)]
