"""A switch running the protection pipeline.

Ingress control flow, in order:

1. Decaps-IP: tunnel packets addressed to this node lose their outer header.
2. Decaps-P: protected packets are deduplicated by sequence number.
3. Protect&Forward: packets matching a protected flow are tunnelled and
   duplicated; everything else takes the LPM route.

``mode`` selects one of the three forwarding modes compared in experiments:
``plain`` (LPM only), ``unprotected`` (full pipeline, flow table bypassed)
and ``protected``.
"""

from __future__ import annotations

from collections import Counter

from .errors import ConflictError, DropDecision, MalformedPacket, RangeError, UnknownCid
from .forwarding import LpmTable
from .pte import DROP, PASS_THROUGH, PteTable, decaps_ip, decaps_p
from .pti import FlowTable, ProtectionConnection, protect_and_forward
from .wire import PROTO_PROTECT, Packet, Stack, decrement_ttl, ip_to_int, parse_packet

MODES = ("plain", "unprotected", "protected")


class Node:
    def __init__(self, name: str, ip, mode: str = "protected",
                 protect_proto: int = PROTO_PROTECT, max_connections: int = 1024):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.name = name
        self.ip = ip_to_int(ip)
        self.mode = mode
        self.protect_proto = protect_proto
        self.flows = FlowTable()
        self.connections: dict[int, ProtectionConnection] = {}
        self.pte = PteTable(max_connections)
        self.routes = LpmTable()
        self.counters: Counter[str] = Counter()

    def add_connection(self, conn: ProtectionConnection) -> None:
        if conn.index in self.connections:
            raise ConflictError(f"{self.name}: connection index {conn.index} already in use")
        for other in self.connections.values():
            if other.cid == conn.cid and other.pte_ip == conn.pte_ip:
                raise ConflictError(
                    f"{self.name}: cid {conn.cid} towards the same PTE already in use")
        self.connections[conn.index] = conn

    def receive(self, data: bytes):
        """Parse and process raw bytes.

        Returns ``(outputs, drop_reason)``; ``drop_reason`` is None unless the
        packet was dropped, in which case ``outputs`` is empty.
        """
        self.counters["received"] += 1
        try:
            p = parse_packet(data, self.protect_proto)
            out = ingress_pipeline(p, self)
        except DropDecision as e:
            self.counters[e.reason] += 1
            return [], e.reason
        except MalformedPacket:
            self.counters["malformed"] += 1
            return [], "malformed"
        self.counters["emitted"] += len(out)
        return out, None

    def __repr__(self):
        return f"Node({self.name!r}, mode={self.mode!r})"


def _lpm_forward(p: Packet, node: Node, decrement: bool):
    port = node.routes.lookup(p.ip.dst)
    if port is None:
        raise DropDecision("no_route", f"no route to {p.ip.dst:#010x}")
    if decrement:
        p = decrement_ttl(p)
        if p is None:
            raise DropDecision("ttl_expired")
    return [(p, port)]


def ingress_pipeline(p: Packet, node: Node):
    """Run one packet through the node's ingress control flow.

    Returns a list of ``(packet, egress_port)``; deliberate drops raise
    :class:`DropDecision` with the counter name as ``reason``.
    """
    if not p.checksum_ok:
        node.counters["bad_checksum"] += 1
    if node.mode == "plain":
        return _lpm_forward(p, node, decrement=True)

    decrement = True
    decapped = decaps_ip(p, node.ip, node.protect_proto)
    if decapped is not PASS_THROUGH:
        decrement = False
        if decapped.stack is Stack.PROTECTION:
            try:
                inner = decaps_p(decapped, node.pte)
            except UnknownCid as e:
                raise DropDecision("unknown_cid", str(e)) from None
            except RangeError as e:
                raise DropDecision("bad_sn", str(e)) from None
            if inner is DROP:
                raise DropDecision("duplicate")
            node.counters["decapsulated"] += 1
            p = inner
        else:
            p = decapped

    # Protect&Forward
    if node.mode == "protected" and p.stack in (Stack.PLAIN, Stack.IP_ONLY):
        rule = node.flows.classify(p.five_tuple())
        if rule is not None:
            conn = node.connections[rule.action.index]
            node.counters["protected"] += 1
            return protect_and_forward(p, conn, node.protect_proto)
    return _lpm_forward(p, node, decrement)
