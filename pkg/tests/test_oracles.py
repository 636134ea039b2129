"""The oracles themselves, checked against closed forms or a second method."""

import numpy as np

from oracles import JITTER_ORACLE_RATIO, lpm_oracle, min_of_uniforms_mad_ratio, window_oracle


def _mad_from_density(x, f):
    dx = x[1] - x[0]
    f = f / (f.sum() * dx)
    mean = (x * f).sum() * dx
    return (np.abs(x - mean) * f).sum() * dx


def test_jitter_ratio_by_convolution():
    # one leg: U(0,1) has density 1, min of two has density 2(1 - x)
    dx = 1e-4
    x = np.arange(0, 1, dx) + dx / 2
    single, best = np.ones_like(x), 2 * (1 - x)
    rtt_x = np.arange(len(x) * 2 - 1) * dx + dx
    u = np.convolve(single, single) * dx
    p = np.convolve(best, best) * dx
    ratio = _mad_from_density(rtt_x, p) / _mad_from_density(rtt_x, u)
    assert abs(ratio - JITTER_ORACLE_RATIO) < 5e-4


def test_jitter_ratio_by_monte_carlo():
    assert abs(min_of_uniforms_mad_ratio() - JITTER_ORACLE_RATIO) < 2e-3


def test_unprotected_rtt_mad_closed_form():
    # sum of two U(0,1) is triangular on [0,2]: MAD = 1/3
    rng = np.random.default_rng(1)
    s = rng.random((1_000_000, 2)).sum(axis=1)
    assert abs(np.abs(s - s.mean()).mean() - 1 / 3) < 2e-3


def test_window_oracle_hand_cases():
    # N=16, W=8, by hand on the unwrapped number line
    assert window_oracle(10, 2, 16, 8)       # 18 in (10, 18]
    assert not window_oracle(10, 4, 16, 8)   # 4, 20 and -12 all outside (10, 18]
    assert not window_oracle(5, 5, 16, 8)


def test_lpm_oracle_hand_case():
    routes = [(0, 0, 1), (0x0A000000, 8, 2), (0x0A010000, 16, 3)]
    assert lpm_oracle(routes, 0x0A010203) == 3
    assert lpm_oracle(routes, 0x0A020203) == 2
    assert lpm_oracle(routes, 0x0B000000) == 1
