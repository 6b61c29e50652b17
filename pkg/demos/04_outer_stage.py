"""Outer stage demo: syndrome exchange over a batch of accepted frames.

The outer code takes the concatenation of accepted inner payloads, sends a
100-bit one-time-padded syndrome, and corrects the residual bit errors
that slipped past the inner screen.
"""

import numpy as np

from sbrec import outer

code = outer.make_outer_code(100000, 0.999)
print(f"outer code: n = {code.n_out}, syndrome bits = {code.m_rows}, "
      f"corrects t = {code.t} errors (GF(2^{code.m_gf}))")

rng = np.random.default_rng(7)
w = rng.integers(0, 2, code.n_out).astype(np.uint8)
p = code.syndrome(w)

for nerr in (0, 3, 5, 6):
    w_hat = w.copy()
    w_hat[rng.choice(code.n_out, size=nerr, replace=False)] ^= 1
    got, ok = outer.outer_decode_word(code, w_hat, p)
    exact = ok and np.array_equal(got, w)
    print(f"{nerr} injected errors -> converged = {ok}, exact = {exact}")

# attempt statistics: how many inner frames until a batch is full
stats = outer.expected_attempts(100, fer=0.5, n_out=100000, n_inner=1000)
print(f"E[attempts] per batch at FER 0.5, A = 100: {stats['per_batch']:.0f} "
      f"(per-blocklength variant: {stats['per_blocklength']:.0f})")
