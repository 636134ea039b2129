"""Parsing and serialization of the supported IPv4 header stacks.

Stacks recognised by :func:`parse_packet`::

    PLAIN       IPv4 / TCP|UDP
    IP_ONLY     IPv4 / <opaque payload>
    PROTECTED   IPv4 (tunnel) / P / IPv4 / [TCP|UDP]

plus ``PROTECTION`` (``P / IPv4 / ...``), the intermediate form left behind
once the tunnel header has been stripped.

The protection header (P) is 8 bytes, all fields in network byte order::

     0                   1                   2                   3
     0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |             Connection identifier             |   SN[31:24]   |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
    |                   SN[23:0]                    | Next protocol |
    +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
"""

from __future__ import annotations

import dataclasses
import enum
import ipaddress
import struct
from dataclasses import dataclass

from .errors import AlreadyProtected, MalformedPacket, RangeError, WrongLayer

PROTO_ICMP = 1
PROTO_IPV4 = 4
PROTO_TCP = 6
PROTO_UDP = 17
# RFC 3692 experimental value; the controller may override it per scenario.
PROTO_PROTECT = 253

IPV4_MIN_LEN = 20
PROTECTION_HEADER_LEN = 8
ENCAP_OVERHEAD = IPV4_MIN_LEN + PROTECTION_HEADER_LEN
DEFAULT_TTL = 64

CID_BITS = 24
SN_BITS = 32

_IPV4 = struct.Struct("!BBHHHBBHII")
_PORTS = struct.Struct("!HH")


def ip_to_int(addr) -> int:
    if isinstance(addr, int):
        if not 0 <= addr < 1 << 32:
            raise RangeError(f"IPv4 address out of range: {addr}")
        return addr
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


def internet_checksum(data: bytes) -> int:
    """RFC 1071 ones-complement sum over 16-bit words."""
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


class Stack(enum.Enum):
    PLAIN = "IP/TP"
    IP_ONLY = "IP"
    PROTECTED = "IP/P/IP/TP"
    PROTECTION = "P/IP/TP"


@dataclass(frozen=True)
class ProtectionHeader:
    cid: int
    sn: int
    next_protocol: int = PROTO_IPV4

    def __post_init__(self):
        if not 0 <= self.cid < 1 << CID_BITS:
            raise RangeError(f"cid must fit in {CID_BITS} bits, got {self.cid}")
        if not 0 <= self.sn < 1 << SN_BITS:
            raise RangeError(f"sn must fit in {SN_BITS} bits, got {self.sn}")
        if not 0 <= self.next_protocol < 256:
            raise RangeError(f"next_protocol must fit in 8 bits, got {self.next_protocol}")

    def pack(self) -> bytes:
        return (self.cid.to_bytes(3, "big") + self.sn.to_bytes(4, "big")
                + bytes((self.next_protocol,)))

    @classmethod
    def unpack(cls, data: bytes) -> "ProtectionHeader":
        if len(data) < PROTECTION_HEADER_LEN:
            raise MalformedPacket(
                f"protection header needs {PROTECTION_HEADER_LEN} bytes, got {len(data)}")
        return cls(int.from_bytes(data[0:3], "big"),
                   int.from_bytes(data[3:7], "big"),
                   data[7])


def serialize_protection_header(h: ProtectionHeader) -> bytes:
    return h.pack()


@dataclass(frozen=True)
class Ipv4Header:
    """IPv4 header without option parsing; options are carried as raw bytes.

    Instances built through :meth:`new` or :meth:`replace` always carry a
    valid checksum.  Parsed instances keep whatever checksum was on the wire.
    """

    src: int
    dst: int
    protocol: int
    total_length: int
    ttl: int = DEFAULT_TTL
    tos: int = 0
    identification: int = 0
    flags_fragment: int = 0
    header_checksum: int = 0
    options: bytes = b""

    @classmethod
    def new(cls, src, dst, protocol, payload_len, ttl=DEFAULT_TTL, **kw) -> "Ipv4Header":
        hdr = cls(ip_to_int(src), ip_to_int(dst), protocol,
                  IPV4_MIN_LEN + len(kw.get("options", b"")) + payload_len, ttl, **kw)
        return hdr.with_checksum()

    @property
    def header_len(self) -> int:
        return IPV4_MIN_LEN + len(self.options)

    def _pack(self, checksum) -> bytes:
        ihl = self.header_len // 4
        return _IPV4.pack(0x40 | ihl, self.tos, self.total_length, self.identification,
                          self.flags_fragment, self.ttl, self.protocol, checksum,
                          self.src, self.dst) + self.options

    def pack(self) -> bytes:
        return self._pack(self.header_checksum)

    def compute_checksum(self) -> int:
        return internet_checksum(self._pack(0))

    @property
    def checksum_ok(self) -> bool:
        return internet_checksum(self.pack()) == 0

    def with_checksum(self) -> "Ipv4Header":
        return dataclasses.replace(self, header_checksum=self.compute_checksum())

    def replace(self, **changes) -> "Ipv4Header":
        """Copy with ``changes`` applied and the checksum recomputed."""
        return dataclasses.replace(self, **changes).with_checksum()

    @classmethod
    def unpack(cls, data: bytes) -> "Ipv4Header":
        if len(data) < IPV4_MIN_LEN:
            raise MalformedPacket(f"IPv4 header needs {IPV4_MIN_LEN} bytes, got {len(data)}")
        (ver_ihl, tos, total_length, ident, flags_frag, ttl, proto, csum,
         src, dst) = _IPV4.unpack_from(data)
        if ver_ihl >> 4 != 4:
            raise MalformedPacket(f"IP version {ver_ihl >> 4} is not 4")
        hlen = (ver_ihl & 0x0F) * 4
        if hlen < IPV4_MIN_LEN:
            raise MalformedPacket(f"IHL {hlen // 4} below minimum")
        if hlen > len(data):
            raise MalformedPacket(f"IHL claims {hlen} header bytes, only {len(data)} present")
        if total_length < hlen:
            raise MalformedPacket(f"total_length {total_length} shorter than header {hlen}")
        return cls(src, dst, proto, total_length, ttl, tos, ident, flags_frag, csum,
                   bytes(data[IPV4_MIN_LEN:hlen]))


@dataclass(frozen=True)
class Transport:
    """TCP or UDP header reduced to what classification needs.

    ``rest`` holds the remaining header bytes after the two port fields so the
    header re-serializes exactly.
    """

    protocol: int
    src_port: int
    dst_port: int
    rest: bytes

    def pack(self) -> bytes:
        return _PORTS.pack(self.src_port, self.dst_port) + self.rest

    @property
    def length(self) -> int:
        return 4 + len(self.rest)

    @classmethod
    def unpack(cls, protocol: int, data: bytes) -> "Transport":
        if protocol == PROTO_UDP:
            hlen = 8
        elif protocol == PROTO_TCP:
            if len(data) < 13:
                raise MalformedPacket("truncated TCP header")
            hlen = (data[12] >> 4) * 4
            if hlen < 20:
                raise MalformedPacket(f"TCP data offset {hlen // 4} below minimum")
        else:
            raise MalformedPacket(f"protocol {protocol} has no port fields")
        if len(data) < hlen:
            raise MalformedPacket(f"transport header needs {hlen} bytes, got {len(data)}")
        sport, dport = _PORTS.unpack_from(data)
        return cls(protocol, sport, dport, bytes(data[4:hlen]))


@dataclass(frozen=True)
class FiveTuple:
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int


@dataclass(frozen=True)
class Packet:
    """A parsed packet.

    ``ip`` is the outermost IPv4 header (absent for ``PROTECTION``), ``inner``
    the encapsulated one, ``transport`` belongs to the innermost IP header and
    ``payload`` is everything after the last parsed header.
    """

    data: bytes
    stack: Stack
    ip: Ipv4Header | None = None
    protection: ProtectionHeader | None = None
    inner: Ipv4Header | None = None
    transport: Transport | None = None
    payload: bytes = b""

    def serialize(self) -> bytes:
        """Rebuild the wire bytes from the parsed header fields."""
        parts = []
        if self.ip is not None:
            parts.append(self.ip.pack())
        if self.protection is not None:
            parts.append(self.protection.pack())
        if self.inner is not None:
            parts.append(self.inner.pack())
        if self.transport is not None:
            parts.append(self.transport.pack())
        parts.append(self.payload)
        return b"".join(parts)

    def __len__(self):
        return len(self.data)

    @property
    def checksum_ok(self) -> bool:
        return self.ip is None or self.ip.checksum_ok

    @property
    def flow_ip(self) -> Ipv4Header | None:
        """The IP header the transport header belongs to."""
        return self.inner if self.inner is not None else self.ip

    def five_tuple(self) -> FiveTuple:
        ip = self.flow_ip
        if ip is None:
            raise WrongLayer("packet carries no IPv4 header")
        if self.transport is None:
            return FiveTuple(ip.src, ip.dst, 0, 0, ip.protocol)
        return FiveTuple(ip.src, ip.dst, self.transport.src_port,
                         self.transport.dst_port, ip.protocol)


def _parse_ip_datagram(data: bytes):
    """Parse an IPv4 datagram occupying all of ``data``.

    Returns ``(ip, transport, payload)``.
    """
    ip = Ipv4Header.unpack(data)
    if ip.total_length != len(data):
        raise MalformedPacket(
            f"total_length {ip.total_length} does not match {len(data)} available bytes")
    body = data[ip.header_len:]
    transport = None
    if ip.protocol in (PROTO_TCP, PROTO_UDP) and not ip.flags_fragment & 0x1FFF:
        transport = Transport.unpack(ip.protocol, body)
        body = body[transport.length:]
    return ip, transport, bytes(body)


def _try_inner(data: bytes):
    try:
        return _parse_ip_datagram(data)
    except MalformedPacket:
        return None


def parse_packet(data: bytes, protect_proto: int = PROTO_PROTECT) -> Packet:
    """Parse bytes that start with an IPv4 header.

    A packet is ``PROTECTED`` only when the outer protocol is
    ``protect_proto``, the protection header announces IPv4 and the bytes
    after it really parse as an IPv4 datagram; otherwise the outer datagram
    is treated as ``IP_ONLY``.  A bad outer checksum is not an error, see
    :attr:`Packet.checksum_ok`.
    """
    data = bytes(data)
    if len(data) < IPV4_MIN_LEN:
        raise MalformedPacket(f"{len(data)} bytes is shorter than an IPv4 header")
    ip = Ipv4Header.unpack(data)
    if ip.total_length != len(data):
        raise MalformedPacket(
            f"total_length {ip.total_length} does not match {len(data)} available bytes")
    body = data[ip.header_len:]
    if ip.protocol == protect_proto and len(body) >= PROTECTION_HEADER_LEN:
        ph = ProtectionHeader.unpack(body)
        if ph.next_protocol == PROTO_IPV4:
            inner = _try_inner(body[PROTECTION_HEADER_LEN:])
            if inner is not None:
                inner_ip, transport, payload = inner
                return Packet(data, Stack.PROTECTED, ip, ph, inner_ip, transport, payload)
        return Packet(data, Stack.IP_ONLY, ip, payload=bytes(body))
    if ip.protocol in (PROTO_TCP, PROTO_UDP) and not ip.flags_fragment & 0x1FFF:
        transport = Transport.unpack(ip.protocol, body)
        return Packet(data, Stack.PLAIN, ip, transport=transport,
                      payload=bytes(body[transport.length:]))
    return Packet(data, Stack.IP_ONLY, ip, payload=bytes(body))


def parse_protection(data: bytes) -> Packet:
    """Parse bytes that start with a protection header (the ``P/IP/TP`` form)."""
    data = bytes(data)
    ph = ProtectionHeader.unpack(data)
    body = data[PROTECTION_HEADER_LEN:]
    if ph.next_protocol == PROTO_IPV4:
        inner = _try_inner(body)
        if inner is not None:
            inner_ip, transport, payload = inner
            return Packet(data, Stack.PROTECTION, None, ph, inner_ip, transport, payload)
    return Packet(data, Stack.PROTECTION, None, ph, payload=bytes(body))


def encapsulate(p: Packet, h: ProtectionHeader, outer_src, outer_dst,
                protect_proto: int = PROTO_PROTECT, ttl: int = DEFAULT_TTL) -> Packet:
    """Push a protection header and a tunnel IPv4 header in front of ``p``."""
    if p.stack in (Stack.PROTECTED, Stack.PROTECTION):
        raise AlreadyProtected("nested protection is not supported")
    outer = Ipv4Header.new(outer_src, outer_dst, protect_proto,
                           PROTECTION_HEADER_LEN + len(p.data), ttl=ttl)
    data = outer.pack() + h.pack() + p.data
    if h.next_protocol != PROTO_IPV4:
        return Packet(data, Stack.IP_ONLY, outer, payload=data[IPV4_MIN_LEN:])
    return Packet(data, Stack.PROTECTED, outer, h, p.ip, p.transport, p.payload)


def strip_outer_ip(p: Packet, protect_proto: int = PROTO_PROTECT) -> Packet:
    """Remove the tunnel IPv4 header.

    A ``PROTECTED`` packet becomes ``PROTECTION``; an IPv4-in-IPv4 packet
    becomes the inner datagram.
    """
    if p.stack is Stack.PROTECTED:
        return Packet(p.data[p.ip.header_len:], Stack.PROTECTION, None,
                      p.protection, p.inner, p.transport, p.payload)
    if p.stack is Stack.IP_ONLY and p.ip.protocol == PROTO_IPV4:
        return parse_packet(p.payload, protect_proto)
    raise WrongLayer(f"no tunnel IPv4 header on a {p.stack.name} packet")


def strip_protection(p: Packet) -> Packet:
    if p.stack is not Stack.PROTECTION:
        raise WrongLayer(f"a {p.stack.name} packet does not start with a protection header")
    if p.inner is None:
        raise MalformedPacket(
            f"protection header announces protocol {p.protection.next_protocol}, not IPv4")
    stack = Stack.PLAIN if p.transport is not None else Stack.IP_ONLY
    return Packet(p.data[PROTECTION_HEADER_LEN:], stack, p.inner,
                  transport=p.transport, payload=p.payload)


def decrement_ttl(p: Packet) -> Packet | None:
    """Return ``p`` with the outermost TTL decremented, or None once it hits zero."""
    ttl = p.ip.ttl - 1
    if ttl <= 0:
        return None
    ip = p.ip.replace(ttl=ttl)
    data = ip.pack() + p.data[ip.header_len:]
    return dataclasses.replace(p, data=data, ip=ip)


# --- builders -------------------------------------------------------------

def _pseudo_header(src: int, dst: int, proto: int, length: int) -> bytes:
    return struct.pack("!IIBBH", src, dst, 0, proto, length)


def build_udp(src, dst, sport, dport, payload=b"", ttl=DEFAULT_TTL, identification=0) -> bytes:
    src, dst = ip_to_int(src), ip_to_int(dst)
    length = 8 + len(payload)
    hdr = struct.pack("!HHHH", sport, dport, length, 0)
    csum = internet_checksum(_pseudo_header(src, dst, PROTO_UDP, length) + hdr + payload)
    hdr = hdr[:6] + struct.pack("!H", csum or 0xFFFF)
    ip = Ipv4Header.new(src, dst, PROTO_UDP, length, ttl=ttl, identification=identification)
    return ip.pack() + hdr + payload


def build_tcp(src, dst, sport, dport, payload=b"", seq=0, ack=0, flags=0x18,
              window=65535, ttl=DEFAULT_TTL) -> bytes:
    src, dst = ip_to_int(src), ip_to_int(dst)
    hdr = struct.pack("!HHIIBBHHH", sport, dport, seq, ack, 5 << 4, flags, window, 0, 0)
    length = len(hdr) + len(payload)
    csum = internet_checksum(_pseudo_header(src, dst, PROTO_TCP, length) + hdr + payload)
    hdr = hdr[:16] + struct.pack("!H", csum) + hdr[18:]
    ip = Ipv4Header.new(src, dst, PROTO_TCP, length, ttl=ttl)
    return ip.pack() + hdr + payload


ICMP_ECHO_REPLY = 0
ICMP_ECHO_REQUEST = 8


def build_icmp_echo(src, dst, ident, seq, payload=b"", reply=False, ttl=DEFAULT_TTL) -> bytes:
    kind = ICMP_ECHO_REPLY if reply else ICMP_ECHO_REQUEST
    body = struct.pack("!BBHHH", kind, 0, 0, ident, seq) + payload
    body = body[:2] + struct.pack("!H", internet_checksum(body)) + body[4:]
    ip = Ipv4Header.new(src, dst, PROTO_ICMP, len(body), ttl=ttl)
    return ip.pack() + body


def transport_checksum_ok(ip: Ipv4Header, segment: bytes) -> bool:
    """Verify the ICMP, UDP or TCP checksum of ``segment`` carried by ``ip``.

    Other protocols, fragments and UDP without a checksum count as valid.
    """
    segment = bytes(segment)
    if ip.flags_fragment & 0x3FFF:
        return True
    if ip.protocol == PROTO_ICMP:
        return internet_checksum(segment) == 0
    if ip.protocol == PROTO_UDP:
        if len(segment) >= 8 and segment[6:8] == b"\0\0":
            return True
    elif ip.protocol != PROTO_TCP:
        return True
    pseudo = _pseudo_header(ip.src, ip.dst, ip.protocol, len(segment))
    return internet_checksum(pseudo + segment) == 0


def parse_icmp_echo(payload: bytes):
    """Return ``(is_reply, ident, seq, data)`` for an echo message, else None."""
    if len(payload) < 8:
        return None
    kind, code, _, ident, seq = struct.unpack_from("!BBHHH", payload)
    if code != 0 or kind not in (ICMP_ECHO_REPLY, ICMP_ECHO_REQUEST):
        return None
    return kind == ICMP_ECHO_REPLY, ident, seq, payload[8:]
