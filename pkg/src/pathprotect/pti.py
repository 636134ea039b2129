"""Protection tunnel ingress: flow classification and Protect&Forward."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConflictError, RangeError
from .seqwin import SN_SPACE, SnCounter, next_sn
from .wire import (PROTO_PROTECT, PROTO_IPV4, FiveTuple, Packet, ProtectionHeader,
                   encapsulate, int_to_ip, ip_to_int)

FIELD_WIDTHS = {
    "src_ip": 32,
    "dst_ip": 32,
    "src_port": 16,
    "dst_port": 16,
    "protocol": 8,
}
FIELDS = tuple(FIELD_WIDTHS)


@dataclass(frozen=True)
class Ternary:
    value: int = 0
    mask: int = 0

    def matches(self, x: int) -> bool:
        return x & self.mask == self.value


WILDCARD = Ternary(0, 0)


@dataclass(frozen=True)
class FlowMatch:
    """Ternary match on the 5-tuple; an all-zero mask is a wildcard."""

    src_ip: Ternary = WILDCARD
    dst_ip: Ternary = WILDCARD
    src_port: Ternary = WILDCARD
    dst_port: Ternary = WILDCARD
    protocol: Ternary = WILDCARD

    def __post_init__(self):
        for name, width in FIELD_WIDTHS.items():
            t = getattr(self, name)
            full = (1 << width) - 1
            if not (0 <= t.mask <= full and 0 <= t.value <= full):
                raise RangeError(f"{name}: value/mask exceed {width} bits")
            if t.value & ~t.mask:
                raise RangeError(
                    f"{name}: value {t.value:#x} has bits outside mask {t.mask:#x}")

    def matches(self, ft: FiveTuple) -> bool:
        return (self.src_ip.matches(ft.src_ip) and self.dst_ip.matches(ft.dst_ip)
                and self.src_port.matches(ft.src_port)
                and self.dst_port.matches(ft.dst_port)
                and self.protocol.matches(ft.protocol))


@dataclass(frozen=True)
class ProtectParams:
    """Arguments of the protect action bound to a flow rule."""

    index: int
    cid: int
    pti_ip: int
    pte_ip: int
    egress_ports: tuple[int, int]


@dataclass(frozen=True)
class FlowRule:
    match: FlowMatch
    priority: int
    action: ProtectParams


@dataclass
class ProtectionConnection:
    index: int
    cid: int
    pti_ip: int
    pte_ip: int
    egress_ports: tuple[int, int]
    counter: SnCounter = field(default_factory=SnCounter)

    @property
    def params(self) -> ProtectParams:
        return ProtectParams(self.index, self.cid, self.pti_ip, self.pte_ip, self.egress_ports)

    def __str__(self):
        return (f"connection {self.index} cid={self.cid} "
                f"{int_to_ip(self.pti_ip)} -> {int_to_ip(self.pte_ip)} ports={self.egress_ports}")


class FlowTable:
    """The ProtectedFlows match-action table.

    Higher priority wins; among equal priorities the rule installed first
    wins.
    """

    def __init__(self):
        self._rules: list[tuple[int, int, FlowRule]] = []  # (-priority, seq, rule)
        self._seq = 0

    def install(self, rule: FlowRule) -> None:
        for _, _, r in self._rules:
            if r.match == rule.match and r.priority == rule.priority:
                raise ConflictError(
                    f"a rule with identical match and priority {rule.priority} exists")
        self._rules.append((-rule.priority, self._seq, rule))
        self._seq += 1
        self._rules.sort(key=lambda t: (t[0], t[1]))

    def remove(self, rule: FlowRule) -> None:
        self._rules = [t for t in self._rules if t[2] is not rule]

    def classify(self, ft: FiveTuple) -> FlowRule | None:
        for _, _, rule in self._rules:
            if rule.match.matches(ft):
                return rule
        return None

    def rules(self) -> list[FlowRule]:
        """Rules in installation order."""
        return [r for _, _, r in sorted(self._rules, key=lambda t: t[1])]

    def lookup_order(self) -> list[FlowRule]:
        """Rules in the order they are tried."""
        return [r for _, _, r in self._rules]

    def __len__(self):
        return len(self._rules)


def classify(p: Packet, rules) -> FlowRule | None:
    """Highest-priority rule matching ``p``'s 5-tuple, or None on a miss.

    ``rules`` is a :class:`FlowTable` or any iterable of rules (tried with the
    same priority/installation-order semantics).
    """
    if not isinstance(rules, FlowTable):
        table = FlowTable()
        for r in rules:
            table.install(r)
        rules = table
    return rules.classify(p.five_tuple())


def protect_and_forward(p: Packet, conn: ProtectionConnection,
                        protect_proto: int = PROTO_PROTECT, ttl: int = 64):
    """Stamp the next SN, tunnel ``p`` to the PTE and emit it on both ports.

    Returns ``[(packet, port_a), (packet, port_b)]`` with identical packets.
    """
    counter, sn = next_sn(conn.counter)
    header = ProtectionHeader(conn.cid, sn, PROTO_IPV4)
    out = encapsulate(p, header, conn.pti_ip, conn.pte_ip, protect_proto, ttl)
    conn.counter = counter
    port_a, port_b = conn.egress_ports
    return [(out, port_a), (out, port_b)]


def new_connection(index, cid, pti_ip, pte_ip, egress_ports, sn_space=SN_SPACE):
    return ProtectionConnection(index, cid, ip_to_int(pti_ip), ip_to_int(pte_ip),
                                tuple(egress_ports),
                                SnCounter(0, sn_space))
