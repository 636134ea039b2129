import pytest
from hypothesis import given, settings, strategies as st

from pathprotect.errors import ConflictError, RangeError, UnknownCid, WrongLayer
from pathprotect.pte import DROP, PASS_THROUGH, PteTable, decaps_ip, decaps_p
from pathprotect.pti import new_connection, protect_and_forward
from pathprotect.seqwin import AcceptState, SeqParams
from pathprotect.wire import (Ipv4Header, ProtectionHeader, build_udp, encapsulate, ip_to_int,
                              parse_packet)

PTI, PTE = "10.255.0.1", "10.255.0.2"
PTE_INT = ip_to_int(PTE)


def _protected(payload=b"", cid=1, sn=1):
    inner = parse_packet(build_udp("10.0.1.1", "10.0.2.1", 1, 2, payload))
    return encapsulate(inner, ProtectionHeader(cid, sn), PTI, PTE), inner


def _table(cid=1, params=None):
    t = PteTable(16)
    t.register(cid, params)
    return t


def test_first_copy_forwarded_second_dropped():
    pkt, inner = _protected()
    t = _table()
    out = decaps_p(decaps_ip(pkt, PTE_INT), t)
    assert out.data == inner.data
    assert decaps_p(decaps_ip(pkt, PTE_INT), t) is DROP
    assert t[1].accepted == 1 and t[1].duplicates_dropped == 1 and t[1].processed == 2


def test_sn_behind_window_dropped():
    t = _table(params=SeqParams(16))
    t[1].accept = AcceptState(10)
    pkt, _ = _protected(sn=4)
    assert decaps_p(decaps_ip(pkt, PTE_INT), t) is DROP
    assert t[1].accept.last == 10


def test_decaps_ip_pass_through():
    pkt, inner = _protected()
    assert decaps_ip(inner, PTE_INT) is PASS_THROUGH
    assert decaps_ip(pkt, ip_to_int("10.9.9.9")) is PASS_THROUGH


def test_decaps_ip_strips_ip_in_ip():
    inner = build_udp("10.0.1.1", "10.0.2.1", 1, 2)
    outer = Ipv4Header.new(PTI, PTE, 4, len(inner))
    assert decaps_ip(parse_packet(outer.pack() + inner), PTE_INT).data == inner


def test_unknown_cid_is_counted_and_raised():
    t = _table()
    pkt, _ = _protected(cid=7)
    with pytest.raises(UnknownCid):
        decaps_p(decaps_ip(pkt, PTE_INT), t)
    assert t.unknown_cid == 1
    assert t.snapshot()["unknown_cid"] == 1


def test_decaps_p_needs_protection_layer():
    pkt, _ = _protected()
    with pytest.raises(WrongLayer):
        decaps_p(pkt, _table())


def test_registration_rules():
    t = PteTable(4)
    t.register(3)
    with pytest.raises(ConflictError):
        t.register(3)
    with pytest.raises(RangeError):
        t.register(4)
    assert 3 in t and 2 not in t
    with pytest.raises(KeyError):
        t[2]


def test_snapshot():
    pkt, _ = _protected(sn=9)
    t = _table()
    decaps_p(decaps_ip(pkt, PTE_INT), t)
    assert t.snapshot() == {"unknown_cid": 0, "connections": {
        1: {"last": 9, "accepted": 1, "duplicates_dropped": 0}}}


@st.composite
def deliveries(draw):
    """Copies of a stamped packet stream arriving in a bounded-reordering order.

    Each packet i is sent at time i; copy k arrives at i + delay_k(i) with
    delays below ``n - w`` packet times, and at most one copy may be lost.
    """
    n = draw(st.sampled_from([8, 16, 64, 256]))
    w = n // 2
    count = draw(st.integers(1, 3 * n))
    slack = n - w - 1
    arrivals = []
    for i in range(count):
        lost = draw(st.sampled_from([None, None, None, 0, 1]))
        for k in (0, 1):
            if k != lost:
                arrivals.append((i + draw(st.integers(0, slack)) + k * 0.5, i, k))
    arrivals.sort()
    return n, count, [(i, k) for _, i, k in arrivals]


@settings(max_examples=200)
@given(deliveries())
def test_exactly_once_against_max_seen_oracle(case):
    n, count, order = case
    conn = new_connection(0, 1, PTI, PTE, (1, 2), sn_space=n)
    originals, copies = [], []
    for i in range(count):
        inner = parse_packet(build_udp("10.0.1.1", "10.0.2.1", 1, 2, i.to_bytes(2, "big")))
        originals.append(inner.data)
        copies.append(protect_and_forward(inner, conn))
    t = _table(params=SeqParams(n))
    forwarded = []
    best = 0  # oracle: unbounded index of the newest packet forwarded so far
    for i, k in order:
        out = decaps_p(decaps_ip(copies[i][k][0], PTE_INT), t)
        fresh = i + 1 > best
        assert (out is not DROP) == fresh, (i, k)
        if fresh:
            best = i + 1
            assert out.data == originals[i]
            forwarded.append(i)
    assert len(forwarded) == len(set(forwarded))
    assert t[1].processed == len(order)
    assert t[1].accepted == len(forwarded)


def test_delay_difference_beyond_bound_lets_duplicates_through():
    # N=16, W=8: a copy trailing by more than N - W packets looks new again
    n, lag = 16, 9
    conn = new_connection(0, 1, PTI, PTE, (1, 2), sn_space=n)
    inner = parse_packet(build_udp("10.0.1.1", "10.0.2.1", 1, 2))
    stream = [protect_and_forward(inner, conn)[0][0] for _ in range(40)]
    t = _table(params=SeqParams(n))
    events = sorted([(i, 0, i) for i in range(40)] + [(i + lag, 1, i) for i in range(40)])
    forwarded = [i for _, _, i in events if decaps_p(decaps_ip(stream[i], PTE_INT), t) is not DROP]
    assert len(forwarded) > len(set(forwarded))
