"""Bound-pair quantum resonance.

At B_Q = 2 pi a lone flip sees tau = 2 pi, an antiresonance: its kicks undo
each other every second period. A bound pair sees tau_b = 4 pi, the primary
resonance, and spreads ballistically. Two neighbouring flips therefore race
off while a well-separated pair stays put.
"""

import numpy as np

from kickedxxz import ChainParams, TwoExcitationState, apply_floquet, build_floquet
from kickedxxz.observables import com_second_moment

p = ChainParams(N=128, J=8.0, Delta=4.0, B_Q=2 * np.pi)
op = build_floquet(p)
n0 = int(p.n0)
for label, sites in (("neighbours", (n0, n0 + 1)), ("10 apart", (n0 - 5, n0 + 5))):
    state = TwoExcitationState.localized(p.N, *sites)
    moments = [com_second_moment(state, n0, p.B_Q)]
    for _ in range(10):
        state = apply_floquet(op, state)
        moments.append(com_second_moment(state, n0, p.B_Q))
    print(f"{label:>10}: " + " ".join(f"{m:8.1f}" for m in moments))
