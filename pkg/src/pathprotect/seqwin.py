"""Sequence numbers and the duplicate/stale acceptance window.

The sender side keeps a counter that is incremented before use, so a
zero-initialised counter stamps 1 on the first packet.  The receiver keeps
the last accepted sequence number and accepts a new one when it lies at most
``window`` steps ahead of it in the circular space of ``sn_space`` values.

Two equivalent decision procedures are provided:

* :func:`accept_general` splits on whether ``last + W`` reaches the top of
  the space (``SN_max = sn_space - 1``) and works for any window size.
* :func:`accept_reformulated` splits on ``W <= sn`` instead and relies on
  ``W == sn_space / 2``; it needs only two comparisons per branch, which is
  what a register-action-limited pipeline can afford.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParamError, RangeError

SN_SPACE = 1 << 32


class Decision(enum.Enum):
    ACCEPT = True
    REJECT = False

    def __bool__(self):
        return self.value


ACCEPT = Decision.ACCEPT
REJECT = Decision.REJECT


@dataclass(frozen=True)
class SeqParams:
    sn_space: int = SN_SPACE
    window: int | None = None

    def __post_init__(self):
        n = self.sn_space
        if n < 2 or n & (n - 1):
            raise ParamError(f"sn_space must be a power of two >= 2, got {n}")
        if n > SN_SPACE:
            raise ParamError(f"sn_space {n} does not fit the 32-bit SN field")
        if self.window is None:
            object.__setattr__(self, "window", n // 2)
        if not 0 < self.window < n:
            raise ParamError(f"window must satisfy 0 < W < {n}, got {self.window}")

    @property
    def sn_max(self) -> int:
        return self.sn_space - 1

    @property
    def halved(self) -> bool:
        """True when the window is exactly half the space."""
        return 2 * self.window == self.sn_space


@dataclass(frozen=True)
class SnCounter:
    last: int = 0
    sn_space: int = SN_SPACE


def next_sn(counter: SnCounter) -> tuple[SnCounter, int]:
    """Increment-then-use: returns the advanced counter and the SN to stamp."""
    sn = (counter.last + 1) % counter.sn_space
    return SnCounter(sn, counter.sn_space), sn


@dataclass(frozen=True)
class AcceptState:
    last: int = 0


def _check_sn(sn, params):
    if not 0 <= sn < params.sn_space:
        raise RangeError(f"sequence number {sn} outside [0, {params.sn_space})")


def accept_general(state: AcceptState, sn: int, params: SeqParams):
    """Window test valid for any ``0 < W < N``; returns ``(decision, new_state)``."""
    _check_sn(sn, params)
    last, w, sn_max = state.last, params.window, params.sn_max
    if last + w < sn_max:
        ok = last < sn <= last + w
    else:
        ok = last < sn or sn < last + w - sn_max
    if ok:
        return ACCEPT, AcceptState(sn)
    return REJECT, state


def accept_reformulated(state: AcceptState, sn: int, params: SeqParams):
    """Window test for ``W == N / 2`` using only same-width comparisons."""
    if not params.halved:
        raise ParamError(
            f"reformulated test needs window == sn_space/2, got W={params.window}, "
            f"N={params.sn_space}")
    _check_sn(sn, params)
    last, w = state.last, params.window
    if w <= sn:
        ok = last < sn and sn - last <= w
    else:
        ok = last < sn or w <= last - sn
    if ok:
        return ACCEPT, AcceptState(sn)
    return REJECT, state


def accept(state: AcceptState, sn: int, params: SeqParams):
    """Pick the reformulated test when the window allows it, else the general one."""
    if params.halved:
        return accept_reformulated(state, sn, params)
    return accept_general(state, sn, params)


def max_compensable_delay(sn_space: int, window: int, packet_bits, line_rate) -> float:
    """Largest path delay difference in seconds the window tolerates.

    A late copy may trail its first copy by ``sn_space - window`` sequence
    numbers; at line rate with minimum-size packets that many packets take
    ``(sn_space - window) * packet_bits / line_rate`` seconds.
    """
    if line_rate <= 0:
        raise ParamError(f"line_rate must be positive, got {line_rate}")
    if not 0 < window <= sn_space:
        raise ParamError(f"window must satisfy 0 < W <= N, got {window}")
    slack = Fraction(sn_space - window) * Fraction(packet_bits) / Fraction(line_rate)
    return float(slack)
