"""Compiled trial loop for populations made of confidence-interval
interpolations (unbiased/optimistic/pessimistic and their per-arm mixes).

Each trial owns a counter-based splitmix64 stream seeded from its derived
trial seed, so results do not depend on how trials are chunked across
workers.  Rewards are drawn at pull time, which is distributionally
identical to pre-drawing the tape and lets early-exit trials skip the
randomness they would never consume.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

__all__ = ["simulate_interpolated"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@nb.njit(inline="always")
def _next_u01(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, (z >> np.uint64(11)) * _INV53


@nb.njit(cache=True)
def simulate_interpolated(
    mu1,
    mu2,
    n0,
    horizon,
    etas,
    lam1s,
    lam2s,
    cum_weights,
    seeds,
    stop_after,
):
    """Run one trial per seed; returns (good pulls, executed rounds) arrays.

    Component k of the population has index rule
    lcb + lam * (ucb - lcb) at scale etas[k]; cum_weights holds the mixture
    CDF.  A nonnegative `stop_after` stops a trial once the good arm has
    been pulled stop_after + 1 times (the failure indicator is then fixed).
    """
    n_trials = seeds.size
    n_comp = etas.size
    good_out = np.empty(n_trials, np.int64)
    rounds_out = np.empty(n_trials, np.int64)
    for j in range(n_trials):
        state = seeds[j]
        s1 = 0
        for _ in range(n0):
            state, u = _next_u01(state)
            if u < mu1:
                s1 += 1
        s2 = 0
        for _ in range(n0):
            state, u = _next_u01(state)
            if u < mu2:
                s2 += 1
        n1 = n0
        n2 = n0
        good = 0
        t = 0
        while t < horizon:
            t += 1
            k = 0
            if n_comp > 1:
                state, u = _next_u01(state)
                while k < n_comp - 1 and u >= cum_weights[k]:
                    k += 1
            eta = etas[k]
            m1 = s1 / n1
            m2 = s2 / n2
            h1 = math.sqrt(eta / n1)
            h2 = math.sqrt(eta / n2)
            lo1 = max(0.0, m1 - h1)
            hi1 = min(1.0, m1 + h1)
            lo2 = max(0.0, m2 - h2)
            hi2 = min(1.0, m2 + h2)
            # Endpoint weights take the bound itself, so pure optimism and
            # pessimism tie bitwise-exactly (e.g. both UCBs truncated at 1).
            lam1 = lam1s[k]
            if lam1 == 1.0:
                i1 = hi1
            elif lam1 == 0.0:
                i1 = lo1
            else:
                i1 = lo1 + lam1 * (hi1 - lo1)
            lam2 = lam2s[k]
            if lam2 == 1.0:
                i2 = hi2
            elif lam2 == 0.0:
                i2 = lo2
            else:
                i2 = lo2 + lam2 * (hi2 - lo2)
            if i1 > i2:
                arm = 1
            elif i2 > i1:
                arm = 2
            else:
                state, u = _next_u01(state)
                arm = 1 if u < 0.5 else 2
            state, u = _next_u01(state)
            if arm == 1:
                if u < mu1:
                    s1 += 1
                n1 += 1
                good += 1
                if stop_after >= 0 and good > stop_after:
                    break
            else:
                if u < mu2:
                    s2 += 1
                n2 += 1
        good_out[j] = good
        rounds_out[j] = t
    return good_out, rounds_out
