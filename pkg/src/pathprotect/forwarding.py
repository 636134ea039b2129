"""Longest-prefix-match route table for plain IPv4 forwarding."""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass

from .errors import ConflictError, RangeError
from .wire import ip_to_int


def prefix_mask(prefix_len: int) -> int:
    return (0xFFFFFFFF << (32 - prefix_len)) & 0xFFFFFFFF


@dataclass(frozen=True)
class Route:
    prefix: int
    prefix_len: int
    egress_port: int

    def __post_init__(self):
        if not 0 <= self.prefix_len <= 32:
            raise RangeError(f"prefix length {self.prefix_len} outside [0, 32]")
        if self.prefix & ~prefix_mask(self.prefix_len) & 0xFFFFFFFF:
            raise RangeError(
                f"prefix {ipaddress.IPv4Address(self.prefix)} has bits set beyond /{self.prefix_len}")

    @property
    def cidr(self) -> str:
        return f"{ipaddress.IPv4Address(self.prefix)}/{self.prefix_len}"

    def matches(self, addr: int) -> bool:
        return addr & prefix_mask(self.prefix_len) == self.prefix


def parse_cidr(text) -> tuple[int, int]:
    net = ipaddress.IPv4Network(text, strict=True)
    return int(net.network_address), net.prefixlen


class LpmTable:
    """Routes bucketed by prefix length; lookup probes from /32 down to /0."""

    def __init__(self, routes=()):
        self._by_len: dict[int, dict[int, int]] = {}
        self._lengths: list[int] = []
        self._order: list[Route] = []
        for r in routes:
            self.add(r)

    def add(self, route: Route) -> None:
        bucket = self._by_len.setdefault(route.prefix_len, {})
        if route.prefix in bucket:
            raise ConflictError(f"route {route.cidr} already installed")
        bucket[route.prefix] = route.egress_port
        self._order.append(route)
        self._lengths = sorted(self._by_len, reverse=True)

    def add_cidr(self, cidr, egress_port: int) -> Route:
        prefix, plen = parse_cidr(cidr)
        route = Route(prefix, plen, egress_port)
        self.add(route)
        return route

    def lookup(self, dst) -> int | None:
        """Egress port of the longest matching prefix, or None for no route."""
        addr = ip_to_int(dst)
        for plen in self._lengths:
            port = self._by_len[plen].get(addr & prefix_mask(plen))
            if port is not None:
                return port
        return None

    def routes(self) -> list[Route]:
        """Installed routes in installation order."""
        return list(self._order)

    def __len__(self):
        return len(self._order)
