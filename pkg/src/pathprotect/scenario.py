"""Declarative description of a simulated network.

A :class:`Scenario` is what the controller reads from a config document and
what the simulator runs: hosts, switches with their tables, links with their
delay/jitter/loss/failure models, traffic generators and the RNG seed.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass

from .errors import ValidationError
from .node import MODES
from .pti import FlowMatch
from .seqwin import SN_SPACE
from .wire import CID_BITS, PROTO_PROTECT


@dataclass(frozen=True)
class LinkModel:
    """One direction of a link.

    Per-packet latency is ``base_delay + U(jitter[0], jitter[1])`` plus
    ``bits / capacity`` when a capacity is set.  ``down`` lists
    ``(down_at, up_at)`` failure intervals in seconds.
    """

    base_delay: float = 0.0
    jitter: tuple[float, float] = (0.0, 0.0)
    loss_rate: float = 0.0
    capacity: float | None = None
    down: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Endpoint:
    node: str
    port: int

    def __str__(self):
        return f"{self.node}:{self.port}"


@dataclass(frozen=True)
class LinkSpec:
    name: str
    a: Endpoint
    b: Endpoint
    forward: LinkModel = LinkModel()  # a -> b
    reverse: LinkModel = LinkModel()  # b -> a


@dataclass(frozen=True)
class HostSpec:
    name: str
    ip: str


@dataclass(frozen=True)
class ConnectionSpec:
    index: int
    cid: int
    pte: str
    ports: tuple[int, int]
    sn_space: int = SN_SPACE
    window: int | None = None


@dataclass(frozen=True)
class FlowSpec:
    match: FlowMatch
    priority: int
    connection: int


@dataclass(frozen=True)
class RouteSpec:
    prefix: str
    port: int


@dataclass(frozen=True)
class SwitchSpec:
    name: str
    ip: str
    connections: tuple[ConnectionSpec, ...] = ()
    flows: tuple[FlowSpec, ...] = ()
    routes: tuple[RouteSpec, ...] = ()


@dataclass(frozen=True)
class TrafficSpec:
    """A traffic generator.

    ``kind`` is ``cbr`` (one UDP/TCP packet every ``interval`` seconds) or
    ``ping`` (ICMP echo requests answered by the destination host).
    """

    kind: str
    name: str
    src: str
    dst: str
    count: int
    interval: float
    start: float = 0.0
    size: int = 64
    protocol: str = "udp"
    src_port: int = 5000
    dst_port: int = 6000


@dataclass(frozen=True)
class Scenario:
    hosts: tuple[HostSpec, ...] = ()
    switches: tuple[SwitchSpec, ...] = ()
    links: tuple[LinkSpec, ...] = ()
    traffic: tuple[TrafficSpec, ...] = ()
    seed: int = 0
    duration: float = 1.0
    mode: str = "protected"
    protect_protocol: int = PROTO_PROTECT
    max_connections: int = 1024
    name: str = "scenario"

    def node_names(self):
        return [h.name for h in self.hosts] + [s.name for s in self.switches]

    def switch(self, name) -> SwitchSpec:
        for s in self.switches:
            if s.name == name:
                return s
        raise KeyError(name)

    def host(self, name) -> HostSpec:
        for h in self.hosts:
            if h.name == name:
                return h
        raise KeyError(name)


# The declarative tree is what controllers exchange; it is the scenario itself.
ConfigDocument = Scenario


def _ip_ok(text, path):
    try:
        ipaddress.IPv4Address(text)
    except ValueError:
        raise ValidationError(f"not an IPv4 address: {text!r}", path) from None


def _validate_model(m: LinkModel, path):
    if m.base_delay < 0:
        raise ValidationError("delay must be >= 0", f"{path}.delay")
    lo, hi = m.jitter
    if lo > hi:
        raise ValidationError(f"jitter range [{lo}, {hi}] is reversed", f"{path}.jitter")
    if m.base_delay + lo < 0:
        raise ValidationError("delay + jitter low end must be >= 0", f"{path}.jitter")
    if not 0.0 <= m.loss_rate <= 1.0:
        raise ValidationError(f"loss rate {m.loss_rate} outside [0, 1]", f"{path}.loss")
    if m.capacity is not None and m.capacity <= 0:
        raise ValidationError("capacity must be positive", f"{path}.capacity")
    prev_up = None
    for i, (down, up) in enumerate(m.down):
        if not 0 <= down < up:
            raise ValidationError(f"interval ({down}, {up}) must satisfy 0 <= down < up",
                                  f"{path}.down[{i}]")
        if prev_up is not None and down < prev_up:
            raise ValidationError("failure intervals must be sorted and non-overlapping",
                                  f"{path}.down[{i}]")
        prev_up = up


def validate(s: Scenario) -> None:
    """Raise :class:`ValidationError` naming the first offending field."""
    if s.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}", "mode")
    if s.duration <= 0:
        raise ValidationError("duration must be positive", "duration")
    if not 0 <= s.protect_protocol < 256:
        raise ValidationError("protocol number must fit in 8 bits", "protect_protocol")
    if not 0 < s.max_connections <= 1 << CID_BITS:
        raise ValidationError("max_connections out of range", "max_connections")

    names = set()
    ips = {}
    for i, h in enumerate(s.hosts):
        _check_new_name(h.name, names, f"hosts[{i}].name")
        _ip_ok(h.ip, f"hosts[{i}].ip")
        ips[h.name] = h.ip
    for i, sw in enumerate(s.switches):
        _check_new_name(sw.name, names, f"switches[{i}].name")
        _ip_ok(sw.ip, f"switches[{i}].ip")
        ips[sw.name] = sw.ip

    ports: dict[str, set[int]] = {n: set() for n in names}
    host_names = {h.name for h in s.hosts}
    link_names = set()
    for i, ln in enumerate(s.links):
        path = f"links[{i}]"
        if ln.name in link_names:
            raise ValidationError(f"duplicate link name {ln.name!r}", f"{path}.name")
        link_names.add(ln.name)
        for side in ("a", "b"):
            ep = getattr(ln, side)
            if ep.node not in names:
                raise ValidationError(f"unknown node {ep.node!r}", f"{path}.{side}")
            if ep.node in host_names and ep.port != 0:
                raise ValidationError("hosts have a single port 0", f"{path}.{side}")
            if ep.port in ports[ep.node]:
                raise ValidationError(f"port {ep} already linked", f"{path}.{side}")
            ports[ep.node].add(ep.port)
        _validate_model(ln.forward, path)
        _validate_model(ln.reverse, f"{path}.reverse")

    switch_names = {sw.name for sw in s.switches}
    cids_at_pte: dict[str, set[int]] = {n: set() for n in switch_names}
    for i, sw in enumerate(s.switches):
        base = f"switches[{i}]"
        indices = set()
        for j, c in enumerate(sw.connections):
            path = f"{base}.protection_connections[{j}]"
            if c.index in indices:
                raise ValidationError(f"duplicate connection index {c.index}", f"{path}.index")
            indices.add(c.index)
            if c.pte not in switch_names:
                raise ValidationError(f"unknown PTE {c.pte!r}", f"{path}.pte")
            if not 0 <= c.cid < s.max_connections:
                raise ValidationError(
                    f"cid {c.cid} outside [0, {s.max_connections})", f"{path}.cid")
            if c.cid in cids_at_pte[c.pte]:
                raise ValidationError(f"cid {c.cid} already used at PTE {c.pte!r}",
                                      f"{path}.cid")
            cids_at_pte[c.pte].add(c.cid)
            if len(c.ports) != 2 or c.ports[0] == c.ports[1]:
                raise ValidationError("needs two distinct egress ports", f"{path}.ports")
            for p in c.ports:
                if p not in ports[sw.name]:
                    raise ValidationError(f"port {p} of {sw.name} is not linked",
                                          f"{path}.ports")
            n = c.sn_space
            if n < 2 or n & (n - 1) or n > SN_SPACE:
                raise ValidationError("sn_space must be a power of two <= 2^32",
                                      f"{path}.sn_space")
            if c.window is not None and not 0 < c.window < n:
                raise ValidationError("window must satisfy 0 < W < sn_space", f"{path}.window")
        for j, f in enumerate(sw.flows):
            if f.connection not in indices:
                raise ValidationError(f"no protection connection with index {f.connection}",
                                      f"{base}.protected_flows[{j}].connection")
        for j, r in enumerate(sw.routes):
            path = f"{base}.routes[{j}]"
            try:
                ipaddress.IPv4Network(r.prefix, strict=True)
            except ValueError as e:
                raise ValidationError(str(e), f"{path}.prefix") from None
            if r.port not in ports[sw.name]:
                raise ValidationError(f"port {r.port} of {sw.name} is not linked",
                                      f"{path}.port")

    tnames = set()
    for i, t in enumerate(s.traffic):
        path = f"traffic[{i}]"
        if t.name in tnames:
            raise ValidationError(f"duplicate traffic name {t.name!r}", f"{path}.name")
        tnames.add(t.name)
        if t.kind not in ("cbr", "ping"):
            raise ValidationError("kind must be 'cbr' or 'ping'", f"{path}.kind")
        for side in ("src", "dst"):
            if getattr(t, side) not in host_names:
                raise ValidationError(f"unknown host {getattr(t, side)!r}", f"{path}.{side}")
        if 0 not in ports[t.src]:
            raise ValidationError(f"host {t.src!r} is not linked", f"{path}.src")
        if t.count < 0:
            raise ValidationError("count must be >= 0", f"{path}.count")
        if t.interval <= 0:
            raise ValidationError("interval must be positive", f"{path}.interval")
        if t.start < 0:
            raise ValidationError("start must be >= 0", f"{path}.start")
        if t.protocol not in ("udp", "tcp"):
            raise ValidationError("protocol must be 'udp' or 'tcp'", f"{path}.protocol")
        minimum = 28 if t.kind == "ping" else (48 if t.protocol == "tcp" else 36)
        if not minimum <= t.size <= 65535:
            raise ValidationError(f"size must be in [{minimum}, 65535]", f"{path}.size")


def _check_new_name(name, names, path):
    if not name:
        raise ValidationError("name must be non-empty", path)
    if name in names:
        raise ValidationError(f"duplicate node name {name!r}", path)
    names.add(name)


def max_path_latency(s: Scenario) -> float:
    worst = 0.0
    for ln in s.links:
        for m in (ln.forward, ln.reverse):
            worst = max(worst, m.base_delay + max(m.jitter[1], 0.0))
    return worst
