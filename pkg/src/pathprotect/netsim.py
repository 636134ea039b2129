"""Deterministic discrete-event simulator for protected two-path networks.

Time is kept in integer nanoseconds.  Every link direction owns an
independent PCG64 stream spawned from the scenario seed, and every
traversal draws exactly two variates (loss, jitter), so a run is a pure
function of the scenario and seed.

Packets are plain bytes on the wire; switches are :class:`~pathprotect.node.Node`
instances running the real pipeline.  A side-channel tag travels with each
copy so that drops and deliveries can be attributed to flows without
peeking into the bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import heapq
import io
import os
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import controller
from .network import Network
from .scenario import LinkModel, Scenario, max_path_latency, validate
from .wire import (PROTO_ICMP, build_icmp_echo, build_tcp, build_udp, parse_icmp_echo,
                   parse_packet)

NS = 1_000_000_000
DRAIN_FACTOR = 10

_TAG = struct.Struct("!II")


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS))


class EventQueue:
    """Min-heap of events ordered by (time, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, time_ns: int, kind: str, *args) -> None:
        heapq.heappush(self._heap, (time_ns, self._seq, kind, args))
        self._seq += 1

    def pop(self):
        t, _, kind, args = heapq.heappop(self._heap)
        return t, kind, args

    def peek_time(self):
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)


class _Direction:
    """One direction of a link with its own random stream."""

    __slots__ = ("base", "lo", "span", "loss", "capacity", "down", "dest", "rng", "name")

    def __init__(self, name, model: LinkModel, dest, rng):
        self.name = name
        self.base = to_ns(model.base_delay)
        self.lo = model.jitter[0] * NS
        self.span = (model.jitter[1] - model.jitter[0]) * NS
        self.loss = model.loss_rate
        self.capacity = model.capacity
        self.down = [(to_ns(a), to_ns(b)) for a, b in model.down]
        self.dest = dest
        self.rng = rng

    def traverse(self, t: int, nbytes: int):
        """Arrival time in ns, or None if the packet is lost."""
        u_loss, u_jit = self.rng.random(2)
        delay = self.base + int(round(self.lo + u_jit * self.span))
        if self.capacity:
            delay += int(round(nbytes * 8 * NS / self.capacity))
        arrive = t + max(delay, 0)
        if u_loss < self.loss:
            return None
        for down, up in self.down:
            if t < up and down <= arrive:
                return None
        return arrive


@dataclass
class FlowStats:
    name: str
    kind: str
    sent: int = 0
    delivered: int = 0
    duplicates_dropped: int = 0
    duplicates_delivered: int = 0
    stale_dropped: int = 0
    altered: int = 0
    delays_ns: list[int] = field(default_factory=list)
    rtts_ns: list[int] = field(default_factory=list)

    @property
    def lost(self) -> int:
        return self.sent - self.delivered

    @property
    def mean_delay(self) -> float:
        samples = self.rtts_ns if self.kind == "ping" else self.delays_ns
        return float(np.mean(samples)) / NS if samples else float("nan")

    @property
    def rtt_mad(self) -> float:
        return mean_abs_deviation(self.rtts_ns) / NS


@dataclass
class PacketRecord:
    flow: str
    seq: int
    sent_ns: int
    delivered_ns: int | None = None


@dataclass
class MetricsRecord:
    scenario: str
    seed: int
    mode: str
    flows: dict[str, FlowStats]
    packets: list[PacketRecord]
    copies: Counter
    node_counters: dict[str, dict[str, int]]
    pte_counters: dict[str, dict]
    end_ns: int
    events: int

    FLOW_COLUMNS = ("flow", "kind", "sent", "delivered", "lost", "duplicates_dropped",
                    "stale_dropped", "duplicates_delivered", "altered", "mean_delay_s",
                    "rtt_mad_s")
    PACKET_COLUMNS = ("flow", "seq", "sent_ns", "delivered_ns", "delay_ns")

    def flow_rows(self):
        for f in self.flows.values():
            yield {"flow": f.name, "kind": f.kind, "sent": f.sent, "delivered": f.delivered,
                   "lost": f.lost, "duplicates_dropped": f.duplicates_dropped,
                   "stale_dropped": f.stale_dropped,
                   "duplicates_delivered": f.duplicates_delivered, "altered": f.altered,
                   "mean_delay_s": _fmt(f.mean_delay),
                   "rtt_mad_s": _fmt(f.rtt_mad) if f.kind == "ping" else ""}

    def packet_rows(self):
        for p in self.packets:
            delivered = "" if p.delivered_ns is None else p.delivered_ns
            delay = "" if p.delivered_ns is None else p.delivered_ns - p.sent_ns
            yield {"flow": p.flow, "seq": p.seq, "sent_ns": p.sent_ns,
                   "delivered_ns": delivered, "delay_ns": delay}

    def flows_csv(self) -> str:
        return _csv(self.FLOW_COLUMNS, self.flow_rows())

    def packets_csv(self) -> str:
        return _csv(self.PACKET_COLUMNS, self.packet_rows())

    def summary(self) -> str:
        lines = [f"scenario {self.scenario}  mode={self.mode}  seed={self.seed}  "
                 f"end={self.end_ns / NS:.6f}s  events={self.events}"]
        for f in self.flows.values():
            line = (f"flow {f.name} [{f.kind}]: sent={f.sent} delivered={f.delivered} "
                    f"lost={f.lost} loss_rate={_fmt(f.lost / f.sent if f.sent else 0.0)} "
                    f"dup_dropped={f.duplicates_dropped} stale_dropped={f.stale_dropped} "
                    f"dup_delivered={f.duplicates_delivered}")
            if f.kind == "ping":
                line += f" rtt_mean_s={_fmt(f.mean_delay)} rtt_mad_s={_fmt(f.rtt_mad)}"
            else:
                line += f" delay_mean_s={_fmt(f.mean_delay)}"
            lines.append(line)
        lines.append("copies: " + " ".join(f"{k}={v}" for k, v in sorted(self.copies.items())))
        for name, counters in self.node_counters.items():
            lines.append(f"node {name}: " + " ".join(f"{k}={v}" for k, v in sorted(counters.items())))
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.flows_csv().encode())
        h.update(self.packets_csv().encode())
        h.update(self.summary().encode())
        return h.hexdigest()

    def write(self, out_dir, packets=True) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for fname, text in (("flows.csv", self.flows_csv()),
                            ("packets.csv", self.packets_csv() if packets else None),
                            ("summary.txt", self.summary())):
            if text is None:
                continue
            path = os.path.join(out_dir, fname)
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
            written.append(path)
        return written

    def conservation_ok(self) -> bool:
        c = self.copies
        terminal = sum(v for k, v in c.items() if k not in ("created", "in_flight"))
        return c["created"] == terminal + c["in_flight"]


def _fmt(x: float) -> str:
    return "nan" if x != x else f"{x:.9f}"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def mean_abs_deviation(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return float("nan")
    return float(np.mean(np.abs(x - x.mean())))


def _normalise_hops(data: bytes) -> bytes:
    # TTL and header checksum legitimately change per routed hop
    return data[:8] + b"\0" + data[9:10] + b"\0\0" + data[12:]


class Simulator:
    def __init__(self, scenario: Scenario, mode: str | None = None, seed: int | None = None):
        if mode is not None:
            scenario = dataclasses.replace(scenario, mode=mode)
        if seed is not None:
            scenario = dataclasses.replace(scenario, seed=seed)
        validate(scenario)
        self.scenario = scenario
        self.network = controller.apply(scenario, Network(scenario))
        self.queue = EventQueue()
        self.copies = Counter()
        self.flows: dict[str, FlowStats] = {}
        self.records: dict[tuple[str, int], PacketRecord] = {}
        self.originals: dict[tuple[str, int], bytes] = {}
        self._ping_sent: dict[tuple[str, int], int] = {}
        self._selected: set[tuple] = set()  # tags some PTE has already let through

        children = np.random.SeedSequence(scenario.seed).spawn(2 * len(scenario.links))
        self.ports: dict[tuple[str, int], _Direction] = {}
        for i, ln in enumerate(scenario.links):
            self.ports[(ln.a.node, ln.a.port)] = _Direction(
                f"{ln.name}>", ln.forward, ln.b.node, np.random.Generator(np.random.PCG64(children[2 * i])))
            self.ports[(ln.b.node, ln.b.port)] = _Direction(
                f"{ln.name}<", ln.reverse, ln.a.node, np.random.Generator(np.random.PCG64(children[2 * i + 1])))

        self.duration_ns = to_ns(scenario.duration)
        self.end_ns = self.duration_ns + DRAIN_FACTOR * to_ns(max_path_latency(scenario))
        for idx, t in enumerate(scenario.traffic):
            self.flows[t.name] = FlowStats(t.name, t.kind)
            if t.count:
                self.queue.push(to_ns(t.start), "gen", idx, 0)

    # -- wire --------------------------------------------------------------

    def _transmit(self, t, node, port, data, tag):
        d = self.ports.get((node, port))
        if d is None:
            self.copies["dropped_no_link"] += 1
            return
        arrive = d.traverse(t, len(data))
        if arrive is None:
            self.copies["lost_link"] += 1
            return
        self.queue.push(arrive, "rx", d.dest, data, tag)

    # -- traffic -----------------------------------------------------------

    def _generate(self, t, idx, seq):
        spec = self.scenario.traffic[idx]
        if t >= self.duration_ns:
            return
        src = self.network.hosts[spec.src]
        dst = self.network.hosts[spec.dst]
        stats = self.flows[spec.name]
        if spec.kind == "ping":
            data = build_icmp_echo(src.ip, dst.ip, idx & 0xFFFF, seq & 0xFFFF,
                                   b"\0" * (spec.size - 28))
            self._ping_sent[(spec.name, seq)] = t
            tag = (spec.name, seq, "req")
        else:
            payload = _TAG.pack(idx, seq) + b"\0" * (spec.size - 36)
            if spec.protocol == "tcp":
                payload = payload[:spec.size - 40]
                data = build_tcp(src.ip, dst.ip, spec.src_port, spec.dst_port, payload, seq=seq)
            else:
                data = build_udp(src.ip, dst.ip, spec.src_port, spec.dst_port, payload,
                                 identification=seq & 0xFFFF)
            key = (spec.name, seq)
            self.records[key] = PacketRecord(spec.name, seq, t)
            self.originals[key] = _normalise_hops(data)
            tag = (spec.name, seq, "data")
        stats.sent += 1
        self.copies["created"] += 1
        self._transmit(t, spec.src, 0, data, tag)
        if seq + 1 < spec.count:
            self.queue.push(t + to_ns(spec.interval), "gen", idx, seq + 1)

    # -- reception ---------------------------------------------------------

    def _host_rx(self, t, host, data, tag):
        flow, seq, kind = tag
        stats = self.flows[flow]
        try:
            p = parse_packet(data)
        except Exception:
            self.copies["dropped_malformed_host"] += 1
            return
        if p.ip.dst != host.ip:
            self.copies["misdelivered"] += 1
            return
        self.copies["delivered"] += 1
        if kind == "data":
            rec = self.records[(flow, seq)]
            if rec.delivered_ns is not None:
                stats.duplicates_delivered += 1
                return
            rec.delivered_ns = t
            stats.delivered += 1
            stats.delays_ns.append(t - rec.sent_ns)
            if _normalise_hops(data) != self.originals[(flow, seq)]:
                stats.altered += 1
        elif kind == "req":
            echo = parse_icmp_echo(p.payload) if p.ip.protocol == PROTO_ICMP else None
            if echo is None or echo[0]:
                return
            _, ident, icmp_seq, body = echo
            reply = build_icmp_echo(host.ip, p.ip.src, ident, icmp_seq, body, reply=True)
            self.copies["created"] += 1
            self._transmit(t, host.name, 0, reply, (flow, seq, "rep"))
        else:
            key = (flow, seq)
            if key not in self._ping_sent:
                stats.duplicates_delivered += 1
                return
            stats.delivered += 1
            stats.rtts_ns.append(t - self._ping_sent.pop(key))

    def _switch_rx(self, t, node, data, tag):
        before = node.counters["decapsulated"]
        outputs, reason = node.receive(data)
        if reason is not None:
            self.copies[f"dropped_{reason}"] += 1
            if reason == "duplicate":
                stats = self.flows[tag[0]]
                stats.duplicates_dropped += 1
                if tag not in self._selected:
                    # rejected although no copy went through: arrived behind a newer SN
                    stats.stale_dropped += 1
            return
        if node.counters["decapsulated"] != before:
            self._selected.add(tag)
        if len(outputs) > 1:
            self.copies["created"] += len(outputs) - 1
        for pkt, port in outputs:
            self._transmit(t, node.name, port, pkt.data, tag)

    # -- main loop ---------------------------------------------------------

    def run(self) -> MetricsRecord:
        q = self.queue
        events = 0
        hosts, switches = self.network.hosts, self.network.switches
        while q and q.peek_time() <= self.end_ns:
            t, kind, args = q.pop()
            events += 1
            if kind == "rx":
                name, data, tag = args
                if name in switches:
                    self._switch_rx(t, switches[name], data, tag)
                else:
                    self._host_rx(t, hosts[name], data, tag)
            else:
                self._generate(t, *args)
        self.copies["in_flight"] = sum(1 for e in q._heap if e[2] == "rx")
        packets = sorted(self.records.values(), key=lambda r: (r.flow, r.seq))
        return MetricsRecord(
            scenario=self.scenario.name, seed=self.scenario.seed, mode=self.scenario.mode,
            flows=self.flows, packets=packets, copies=self.copies,
            node_counters={n: dict(sorted(s.counters.items())) for n, s in switches.items()},
            pte_counters={n: s.pte.snapshot() for n, s in switches.items()},
            end_ns=self.end_ns, events=events)


def run(scenario: Scenario, mode: str | None = None, seed: int | None = None) -> MetricsRecord:
    """Simulate ``scenario`` to completion (traffic duration plus drain)."""
    return Simulator(scenario, mode, seed).run()


def ping_experiment(scenario: Scenario, flow: str | None = None) -> dict:
    """Mean absolute RTT deviation of one ping flow, unprotected vs protected.

    The same scenario (and seed) is run once with the flow table bypassed,
    so pings follow the single routed path, and once fully protected.
    """
    name = flow or next(t.name for t in scenario.traffic if t.kind == "ping")
    unprot = run(scenario, mode="unprotected").flows[name]
    prot = run(scenario, mode="protected").flows[name]
    u, p = unprot.rtt_mad, prot.rtt_mad
    return {"flow": name, "unprotected_mad": u, "protected_mad": p,
            "ratio": p / u if u else float("nan"),
            "unprotected_rtts": len(unprot.rtts_ns), "protected_rtts": len(prot.rtts_ns)}
