import pytest
from hypothesis import given, strategies as st

from oracles import lpm_oracle
from pathprotect.errors import ConflictError, RangeError
from pathprotect.forwarding import LpmTable, Route, parse_cidr, prefix_mask


def test_default_route_matches_everything():
    t = LpmTable()
    t.add_cidr("0.0.0.0/0", 7)
    assert t.lookup("1.2.3.4") == 7
    assert t.lookup("255.255.255.255") == 7


def test_longer_prefix_wins():
    t = LpmTable()
    t.add_cidr("10.1.0.0/16", 1)
    t.add_cidr("10.1.2.0/24", 2)
    assert t.lookup("10.1.2.3") == 2
    assert t.lookup("10.1.3.3") == 1
    assert t.lookup("10.2.0.0") is None


def test_duplicate_route_conflicts():
    t = LpmTable()
    t.add_cidr("10.0.0.0/8", 1)
    with pytest.raises(ConflictError):
        t.add_cidr("10.0.0.0/8", 2)


def test_host_bits_rejected():
    with pytest.raises(RangeError):
        Route(0x0A000001, 8, 1)
    with pytest.raises(RangeError):
        Route(0, 33, 1)
    with pytest.raises(ValueError):
        parse_cidr("10.0.0.1/8")


def test_routes_keep_installation_order():
    t = LpmTable()
    for cidr, port in [("10.0.0.0/8", 1), ("0.0.0.0/0", 0), ("10.1.0.0/16", 2)]:
        t.add_cidr(cidr, port)
    assert [r.cidr for r in t.routes()] == ["10.0.0.0/8", "0.0.0.0/0", "10.1.0.0/16"]
    assert len(t) == 3


@st.composite
def route_sets(draw):
    # cluster prefixes under a few roots so that nested matches are common
    roots = draw(st.lists(st.integers(0, (1 << 32) - 1), min_size=1, max_size=3))
    routes = {}
    for _ in range(draw(st.integers(0, 40))):
        plen = draw(st.integers(0, 32))
        base = draw(st.sampled_from(roots)) ^ draw(st.integers(0, 255))
        routes[(base & prefix_mask(plen), plen)] = draw(st.integers(0, 15))
    addrs = draw(st.lists(st.one_of(st.sampled_from(roots),
                                    st.integers(0, (1 << 32) - 1)), min_size=1, max_size=30))
    return [(p, l, port) for (p, l), port in routes.items()], addrs


@given(route_sets())
def test_lpm_agrees_with_linear_scan(case):
    routes, addrs = case
    t = LpmTable(Route(*r) for r in routes)
    for a in addrs:
        assert t.lookup(a) == lpm_oracle(routes, a)
