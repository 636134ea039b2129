import pytest

from pathprotect.errors import ConflictError
from pathprotect.node import Node
from pathprotect.pti import FlowMatch, FlowRule, Ternary, new_connection
from pathprotect.seqwin import SeqParams
from pathprotect.wire import (ProtectionHeader, Stack, build_udp, encapsulate, ip_to_int,
                              parse_packet)

S1, S2 = "10.255.0.1", "10.255.0.2"
TO_H2 = build_udp("10.0.1.1", "10.0.2.1", 1000, 2000, b"data")


def _pair(mode="protected", sn_space=1 << 32):
    s1, s2 = Node("s1", S1, mode), Node("s2", S2, mode)
    conn = new_connection(0, 3, S1, S2, (1, 2), sn_space)
    s1.add_connection(conn)
    s1.flows.install(FlowRule(FlowMatch(dst_ip=Ternary(ip_to_int("10.0.2.0"), 0xFFFFFF00)),
                              10, conn.params))
    s2.pte.register(3, SeqParams(sn_space))
    for n, local, remote in ((s1, "10.0.1.0/24", "10.0.2.0/24"),
                             (s2, "10.0.2.0/24", "10.0.1.0/24")):
        n.routes.add_cidr(local, 0)
        n.routes.add_cidr(remote, 1)
    return s1, s2


def test_protected_path_end_to_end():
    s1, s2 = _pair()
    out, reason = s1.receive(TO_H2)
    assert reason is None
    assert [port for _, port in out] == [1, 2]
    copy = out[0][0]
    assert copy.stack is Stack.PROTECTED and copy.protection.sn == 1
    first, _ = s2.receive(copy.data)
    assert len(first) == 1 and first[0][1] == 0
    assert first[0][0].data == TO_H2          # TTL untouched after decapsulation
    assert s2.receive(out[1][0].data) == ([], "duplicate")
    assert s1.counters["protected"] == 1
    assert s2.counters["decapsulated"] == 1 and s2.counters["duplicate"] == 1


def test_unprotected_mode_bypasses_flow_table():
    s1, _ = _pair("unprotected")
    out, _ = s1.receive(TO_H2)
    assert len(out) == 1 and out[0][1] == 1
    assert out[0][0].ip.ttl == 63


def test_plain_mode_does_not_decapsulate():
    s1, s2 = _pair()
    copy = s1.receive(TO_H2)[0][0][0]
    s2.mode = "plain"
    s2.routes.add_cidr("10.255.0.0/16", 3)
    out, _ = s2.receive(copy.data)
    assert out[0][1] == 3 and out[0][0].stack is Stack.PROTECTED


def test_transit_protected_packet_follows_lpm():
    s1, _ = _pair()
    s3 = Node("s3", "10.255.0.3")
    s3.routes.add_cidr("10.255.0.2/32", 5)
    copy = s1.receive(TO_H2)[0][0][0]
    out, _ = s3.receive(copy.data)
    assert out[0][1] == 5
    assert out[0][0].ip.ttl == copy.ip.ttl - 1
    assert out[0][0].stack is Stack.PROTECTED


def test_drop_reasons():
    s1, s2 = _pair(sn_space=16)
    assert s1.receive(build_udp("10.0.1.1", "10.7.0.1", 1, 2)) == ([], "no_route")
    assert s1.receive(build_udp("10.0.2.9", "10.0.1.1", 1, 2, ttl=1)) == ([], "ttl_expired")
    assert s1.receive(b"\x45\x00") == ([], "malformed")
    inner = parse_packet(TO_H2)
    unknown = encapsulate(inner, ProtectionHeader(9, 1), S1, S2)
    assert s2.receive(unknown.data) == ([], "unknown_cid")
    assert s2.pte.unknown_cid == 1
    out_of_space = encapsulate(inner, ProtectionHeader(3, 100), S1, S2)
    assert s2.receive(out_of_space.data) == ([], "bad_sn")


def test_connection_conflicts():
    s1, _ = _pair()
    with pytest.raises(ConflictError):
        s1.add_connection(new_connection(0, 4, S1, S2, (1, 2)))
    with pytest.raises(ConflictError):
        s1.add_connection(new_connection(1, 3, S1, S2, (1, 2)))
    s1.add_connection(new_connection(1, 3, S1, "10.255.0.9", (1, 2)))


def test_unknown_mode():
    with pytest.raises(ValueError):
        Node("x", "1.2.3.4", "fast")
