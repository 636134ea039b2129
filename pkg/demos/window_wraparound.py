"""
Sequence numbers that wrap
==========================

A 4-bit sequence space makes the acceptance window easy to see.  With
N = 16 and W = 8 the receiver accepts a number when it is one to eight
steps ahead of the last accepted one, counting around the circle.
"""

from pathprotect.seqwin import AcceptState, SeqParams, accept_general, accept_reformulated

params = SeqParams(16)

# Which numbers are fresh after accepting 10?
last = AcceptState(10)
row = "".join("A" if accept_general(last, sn, params)[0] else "." for sn in range(16))
print("sn:     " + "".join(f"{sn:x}" for sn in range(16)))
print("last=a: " + row)

# The register-friendly form splits on the top bit of the incoming number
# instead of on last + W; both agree on every pair.
agree = all(bool(accept_general(AcceptState(l), s, params)[0])
            == bool(accept_reformulated(AcceptState(l), s, params)[0])
            for l in range(16) for s in range(16))
print("general and reformulated forms agree on all 256 pairs:", agree)

# A stream that runs around the space twice, each number delivered twice.
state, forwarded = AcceptState(0), []
for sn in [n % 16 for n in range(1, 33)]:
    for _copy in range(2):
        decision, state = accept_reformulated(state, sn, params)
        if decision:
            forwarded.append(sn)
print("forwarded:", forwarded)
