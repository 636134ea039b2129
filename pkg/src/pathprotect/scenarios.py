"""Ready-made scenarios.

:func:`two_path` builds the reference topology::

    h1 --- s1 ==== path A (port 1) ==== s2 --- h2
              ==== path B (port 2) ====

s1 and s2 both act as PTI and PTE, so traffic is protected in both
directions.  Unprotected traffic is routed over path A.
"""

from __future__ import annotations

from .pti import FlowMatch, Ternary
from .scenario import (ConnectionSpec, Endpoint, FlowSpec, HostSpec, LinkModel, LinkSpec,
                       RouteSpec, Scenario, SwitchSpec, TrafficSpec)
from .seqwin import SN_SPACE
from .wire import ip_to_int

H1_NET, H2_NET = "10.0.1.0/24", "10.0.2.0/24"


def _dst_match(cidr: str) -> FlowMatch:
    net, plen = cidr.split("/")
    mask = (0xFFFFFFFF << (32 - int(plen))) & 0xFFFFFFFF
    return FlowMatch(dst_ip=Ternary(ip_to_int(net), mask))


def _model(delay, jitter, loss, down):
    if isinstance(jitter, (int, float)):
        jitter = (0.0, float(jitter))
    return LinkModel(float(delay), tuple(jitter), float(loss), None,
                     tuple(tuple(iv) for iv in down))


def two_path(*, delay_a=0.005, delay_b=0.005, jitter_a=0.0, jitter_b=0.0,
             loss_a=0.0, loss_b=0.0, down_a=(), down_b=(), access_delay=0.0001,
             traffic=(), seed=1, duration=1.0, mode="protected", sn_space=SN_SPACE,
             window=None, name="two-path") -> Scenario:
    """Two hosts joined by two switch-to-switch paths.

    Path parameters apply to both directions of each path.
    """
    access = LinkModel(access_delay)
    conn = lambda pte: (ConnectionSpec(0, 1, pte, (1, 2), sn_space, window),)
    s1 = SwitchSpec("s1", "10.255.0.1", conn("s2"),
                    (FlowSpec(_dst_match(H2_NET), 10, 0),),
                    (RouteSpec(H1_NET, 0), RouteSpec(H2_NET, 1)))
    s2 = SwitchSpec("s2", "10.255.0.2", conn("s1"),
                    (FlowSpec(_dst_match(H1_NET), 10, 0),),
                    (RouteSpec(H2_NET, 0), RouteSpec(H1_NET, 1)))
    a = _model(delay_a, jitter_a, loss_a, down_a)
    b = _model(delay_b, jitter_b, loss_b, down_b)
    links = (
        LinkSpec("h1-s1", Endpoint("h1", 0), Endpoint("s1", 0), access, access),
        LinkSpec("pathA", Endpoint("s1", 1), Endpoint("s2", 1), a, a),
        LinkSpec("pathB", Endpoint("s1", 2), Endpoint("s2", 2), b, b),
        LinkSpec("s2-h2", Endpoint("s2", 0), Endpoint("h2", 0), access, access),
    )
    return Scenario((HostSpec("h1", "10.0.1.1"), HostSpec("h2", "10.0.2.1")),
                    (s1, s2), links, tuple(traffic), seed, duration, mode, name=name)


def cbr(name="cbr", count=1000, interval=0.001, size=100, src="h1", dst="h2", **kw):
    return TrafficSpec("cbr", name, src, dst, count, interval, size=size, **kw)


def ping(name="ping", count=1000, interval=0.1, src="h1", dst="h2", **kw):
    return TrafficSpec("ping", name, src, dst, count, interval, **kw)


def failover(count=1000, interval=0.001, fail_at=None, seed=1, mode="protected"):
    """Protected CBR flow; path A goes down for good halfway through."""
    duration = count * interval
    fail_at = duration / 2 if fail_at is None else fail_at
    return two_path(delay_a=0.002, delay_b=0.004, down_a=[(fail_at, duration * 100)],
                    traffic=[cbr(count=count, interval=interval)], seed=seed,
                    duration=duration, mode=mode, name="failover")


def jitter(j=0.010, j_b=None, pings=10_000, interval=None, seed=1, delay=0.005):
    """Ping flow over two paths with uniform jitter of width ``j`` (``j_b`` on path B)."""
    j_b = j if j_b is None else j_b
    interval = interval or 4 * (delay + max(j, j_b)) + 0.001
    return two_path(delay_a=delay, delay_b=delay, jitter_a=j, jitter_b=j_b,
                    traffic=[ping(count=pings, interval=interval)], seed=seed,
                    duration=pings * interval, name="jitter")
