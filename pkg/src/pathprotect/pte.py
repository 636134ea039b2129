"""Protection tunnel egress: Decaps-IP and Decaps-P.

The egress strips the tunnel header, looks the connection up by CID and lets
only the first copy of every sequence number through.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import ConflictError, RangeError, UnknownCid, WrongLayer
from .seqwin import AcceptState, SeqParams, accept
from .wire import (CID_BITS, PROTO_PROTECT, PROTO_IPV4, Packet, Stack, strip_outer_ip,
                   strip_protection)


class Verdict(enum.Enum):
    PASS_THROUGH = "pass-through"
    DROP = "drop"


PASS_THROUGH = Verdict.PASS_THROUGH
DROP = Verdict.DROP


@dataclass
class PteConnectionState:
    cid: int
    params: SeqParams = field(default_factory=SeqParams)
    accept: AcceptState = field(default_factory=AcceptState)
    accepted: int = 0
    duplicates_dropped: int = 0

    @property
    def processed(self) -> int:
        return self.accepted + self.duplicates_dropped


class PteTable:
    """Per-CID receiver state, dense-indexed by CID."""

    def __init__(self, max_connections: int = 1024):
        if not 0 < max_connections <= 1 << CID_BITS:
            raise RangeError(f"max_connections must be in (0, 2^{CID_BITS}]")
        self.max_connections = max_connections
        self._slots: list[PteConnectionState | None] = [None] * max_connections
        self.unknown_cid = 0

    def register(self, cid: int, params: SeqParams | None = None) -> PteConnectionState:
        if not 0 <= cid < self.max_connections:
            raise RangeError(f"cid {cid} outside [0, {self.max_connections})")
        if self._slots[cid] is not None:
            raise ConflictError(f"cid {cid} already registered at this PTE")
        st = PteConnectionState(cid, params or SeqParams())
        self._slots[cid] = st
        return st

    def get(self, cid: int) -> PteConnectionState | None:
        if 0 <= cid < self.max_connections:
            return self._slots[cid]
        return None

    def __getitem__(self, cid):
        st = self.get(cid)
        if st is None:
            raise KeyError(cid)
        return st

    def __contains__(self, cid):
        return self.get(cid) is not None

    def states(self) -> list[PteConnectionState]:
        return [s for s in self._slots if s is not None]

    def snapshot(self) -> dict:
        """Counter export: ``{"unknown_cid": n, "connections": {cid: {...}}}``."""
        return {
            "unknown_cid": self.unknown_cid,
            "connections": {
                s.cid: {"last": s.accept.last, "accepted": s.accepted,
                        "duplicates_dropped": s.duplicates_dropped}
                for s in self.states()
            },
        }


def decaps_ip(p: Packet, my_ip: int, protect_proto: int = PROTO_PROTECT):
    """Strip a tunnel header addressed to ``my_ip``.

    Returns the ``PROTECTION`` packet for Decaps-P, the inner datagram for
    IPv4-in-IPv4, or :data:`PASS_THROUGH` for anything else.
    """
    ip = p.ip
    if ip is None or ip.dst != my_ip:
        return PASS_THROUGH
    if p.stack is Stack.PROTECTED or (p.stack is Stack.IP_ONLY and ip.protocol == PROTO_IPV4):
        return strip_outer_ip(p, protect_proto)
    return PASS_THROUGH


def decaps_p(p: Packet, states: PteTable):
    """Keep the first copy of each SN, drop the rest.

    Returns the original inner packet or :data:`DROP`.  Unknown CIDs are
    counted on the table and raise :class:`UnknownCid`.
    """
    if p.stack is not Stack.PROTECTION:
        raise WrongLayer(f"a {p.stack.name} packet does not start with a protection header")
    h = p.protection
    st = states.get(h.cid)
    if st is None:
        states.unknown_cid += 1
        raise UnknownCid(h.cid)
    decision, new = accept(st.accept, h.sn, st.params)
    if not decision:
        st.duplicates_dropped += 1
        return DROP
    inner = strip_protection(p)
    st.accept = new
    st.accepted += 1
    return inner
