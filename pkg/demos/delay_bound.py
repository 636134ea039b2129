"""
How much path skew the window tolerates
=======================================

A late copy is recognised as old only while it trails its first copy by
fewer than N - W sequence numbers.  At line rate with minimum-size packets
that translates into a time budget.
"""

from pathprotect.netsim import run
from pathprotect.scenarios import cbr, two_path
from pathprotect.seqwin import max_compensable_delay

# 32-bit sequence numbers, W = N/2, 40-byte packets, 1 Tb/s.
print(f"{max_compensable_delay(2**32, 2**31, 320, 1e12):.3f} s")

# The same budget in a toy sequence space: N = 16, W = 8 and one packet per
# millisecond allow just under 8 ms of skew.  Shift path B from 7.5 ms to 11 ms
# behind path A and watch duplicates leak through once the budget is spent.
for skew in (0.0075, 0.011):
    s = two_path(sn_space=16, delay_a=0.001, delay_b=0.001 + skew,
                 traffic=[cbr(count=300, interval=0.001)])
    f = run(s).flows["cbr"]
    print(f"skew {skew * 1e3:4.1f} ms: delivered={f.delivered} "
          f"duplicates reaching the host={f.duplicates_delivered}")
