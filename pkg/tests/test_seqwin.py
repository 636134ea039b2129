import itertools

import pytest
from hypothesis import given, strategies as st

from oracles import window_oracle
from pathprotect.errors import ParamError, RangeError
from pathprotect.seqwin import (ACCEPT, REJECT, SN_SPACE, AcceptState, SeqParams, SnCounter,
                                accept, accept_general, accept_reformulated,
                                max_compensable_delay, next_sn)

SMALL_SPACES = (8, 16, 32, 256)


@pytest.mark.parametrize("n", SMALL_SPACES)
def test_forms_agree_with_oracle_exhaustively(n):
    p = SeqParams(n)
    for last, sn in itertools.product(range(n), repeat=2):
        g, _ = accept_general(AcceptState(last), sn, p)
        r, _ = accept_reformulated(AcceptState(last), sn, p)
        expected = window_oracle(last, sn, n, n // 2)
        assert bool(g) == bool(r) == expected, (last, sn)


@pytest.mark.parametrize("n,w", [(16, 1), (16, 5), (16, 8), (16, 12), (16, 15), (32, 3), (32, 30)])
def test_general_form_matches_oracle_for_any_window(n, w):
    p = SeqParams(n, w)
    for last, sn in itertools.product(range(n), repeat=2):
        d, _ = accept_general(AcceptState(last), sn, p)
        assert bool(d) == window_oracle(last, sn, n, w), (last, sn)


@pytest.mark.parametrize("last,sn,n,expected", [
    (0, 1, SN_SPACE, ACCEPT),
    (10, 2, 16, ACCEPT),
    (8, 0, 16, ACCEPT),
    (3, 11, 16, ACCEPT),
    (10, 4, 16, REJECT),
    (5, 5, 16, REJECT),
    (0xFFFFFFFF, 0, SN_SPACE, ACCEPT),
    (0x7FFFFFFF, 0xFFFFFFFF, SN_SPACE, ACCEPT),
    (0x7FFFFFFF, 0, SN_SPACE, REJECT),
    (0, 0x80000000, SN_SPACE, ACCEPT),
    (0, 0x80000001, SN_SPACE, REJECT),
])
def test_worked_examples(last, sn, n, expected):
    p = SeqParams(n)
    for fn in (accept_general, accept_reformulated, accept):
        assert fn(AcceptState(last), sn, p)[0] is expected


def test_seam_between_regimes_has_no_gap():
    # last + W == SN_max is the first value handled by the wrapping branch
    n = 16
    p = SeqParams(n)
    last = n // 2 - 1
    accepted = [sn for sn in range(n) if accept_general(AcceptState(last), sn, p)[0]]
    assert accepted == list(range(last + 1, last + 1 + n // 2))


def test_reformulated_requires_half_window():
    with pytest.raises(ParamError):
        accept_reformulated(AcceptState(0), 1, SeqParams(16, 4))


def test_accept_dispatches_to_general_for_other_windows():
    p = SeqParams(16, 4)
    assert accept(AcceptState(14), 2, p)[0] is ACCEPT
    assert accept(AcceptState(14), 3, p)[0] is REJECT


@pytest.mark.parametrize("sn", [-1, 16, 100])
def test_out_of_range_sn(sn):
    for fn in (accept_general, accept_reformulated):
        with pytest.raises(RangeError):
            fn(AcceptState(0), sn, SeqParams(16))


@pytest.mark.parametrize("n,w", [(12, None), (1, None), (1 << 33, None), (16, 0), (16, 16)])
def test_bad_params(n, w):
    with pytest.raises(ParamError):
        SeqParams(n, w)


def test_counter_is_increment_then_use_and_wraps():
    c, sn = next_sn(SnCounter())
    assert sn == 1
    c, sn = next_sn(SnCounter(0xFFFFFFFF))
    assert sn == 0 and c.last == 0
    c, sn = next_sn(SnCounter(15, 16))
    assert sn == 0


@given(n=st.sampled_from(SMALL_SPACES + (SN_SPACE,)), data=st.data())
def test_same_sn_twice_is_accept_then_reject(n, data):
    p = SeqParams(n)
    last = data.draw(st.integers(0, n - 1))
    sn = data.draw(st.integers(0, n - 1).filter(lambda s: s != last))
    st0 = AcceptState(last)
    d1, st1 = accept(st0, sn, p)
    if d1 is REJECT:
        # sn was stale to begin with; it must stay stale
        assert accept(st1, sn, p)[0] is REJECT
        return
    assert st1.last == sn
    assert accept(st1, sn, p)[0] is REJECT


@given(n=st.sampled_from(SMALL_SPACES + (SN_SPACE,)), data=st.data())
def test_increasing_stream_with_small_gaps_is_accepted(n, data):
    p = SeqParams(n)
    state = AcceptState(data.draw(st.integers(0, n - 1)))
    gaps = data.draw(st.lists(st.integers(1, n // 2 - 1 if n > 2 else 1), max_size=200))
    for g in gaps:
        sn = (state.last + g) % n
        d, state = accept(state, sn, p)
        assert d is ACCEPT


@pytest.mark.parametrize("n", SMALL_SPACES)
def test_stale_numbers_are_rejected(n):
    # sn at distance 0 or W+1 .. N-1 ahead of last (mod N) is old or a duplicate
    p = SeqParams(n)
    w = n // 2
    for last in range(n):
        for d in itertools.chain([0], range(w + 1, n)):
            sn = (last + d) % n
            assert accept_general(AcceptState(last), sn, p)[0] is REJECT
            assert accept_reformulated(AcceptState(last), sn, p)[0] is REJECT
            assert not window_oracle(last, sn, n, w)


@given(n=st.sampled_from(SMALL_SPACES), data=st.data())
def test_reject_never_mutates_state(n, data):
    p = SeqParams(n)
    state = AcceptState(data.draw(st.integers(0, n - 1)))
    for sn in data.draw(st.lists(st.integers(0, n - 1), max_size=50)):
        for fn in (accept_general, accept_reformulated):
            d, after = fn(state, sn, p)
            if d is REJECT:
                assert after is state
            else:
                assert after.last == sn
        state = after


def test_decision_is_truthy():
    assert ACCEPT and not REJECT


@pytest.mark.parametrize("n,w,bits,rate,expected", [
    (16, 8, 320, 320, 8.0),
    (16, 16, 320, 320, 0.0),
    (SN_SPACE, SN_SPACE // 2, 320, 10**12, 0.68719476736),
    (256, 128, 8, 1, 1024.0),
])
def test_max_compensable_delay(n, w, bits, rate, expected):
    assert max_compensable_delay(n, w, bits, rate) == expected


def test_max_compensable_delay_rejects_nonpositive_rate():
    with pytest.raises(ParamError):
        max_compensable_delay(16, 8, 320, 0)
