"""Fused numba kernels for the keyed generator and the hot sketch-update paths.

Everything in this module is deterministic: a draw is a pure function of the
64-bit key state (derived from seed/index/repetition/level/purpose) and a draw
counter.  The integer layer is bit-exact on every platform; keep the constants
and the draw layout frozen (see RNG_VERSION in rng.py) or serialized sketches
stop being mergeable across builds.

Key-state derivation (all arithmetic mod 2^64):

    s0 = mix64(seed_lo + SEEDC)
    s1 = mix64(s0 ^ seed_hi)
    sv = mix64(s1 + v * VC)                       # per stream index
    state = sv + j*JC + k*KC + purpose*PC         # per (repetition, level, role)
    word(state, ctr) = mix64(state + ctr*CTRC + GOLD)

mix64 is the SplitMix64 finalizer (full avalanche, bijective), so distinct
linear inputs give distinct words and incrementing counters give a SplitMix64
stream per key.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64, float64

U = uint64

# Pinned odd 64-bit constants (format version 1).
SEEDC = U(0x243F6A8885A308D3)
VC = U(0x9FB21C651E98DF25)
JC = U(0xD6E8FEB86659FD93)
KC = U(0xA24BAED4963EE407)
PC = U(0x8CB92BA72F3D8DD7)
CTRC = U(0x2545F4914F6CDD1D)
GOLD = U(0x9E3779B97F4A7C15)

TWOPI = 2.0 * math.pi


@njit(uint64(uint64), inline="always", cache=True)
def mix64(x):
    x ^= x >> U(30)
    x *= U(0xBF58476D1CE4E5B9)
    x ^= x >> U(27)
    x *= U(0x94D049BB133111EB)
    x ^= x >> U(31)
    return x


@njit(uint64(uint64, uint64), inline="always", cache=True)
def word_at(state, ctr):
    return mix64(state + ctr * CTRC + GOLD)


@njit(float64(uint64), inline="always", cache=True)
def to_u01(w):
    # 53-bit uniform, strictly inside (0, 1) so log/ndtri never see an endpoint
    return ((w >> U(11)) + 0.5) * (2.0 ** -53)


@njit(float64(float64), inline="always", cache=True)
def wrap2pi(v):
    if v >= 0.0:
        if v < TWOPI:
            return v
        if v < 2.0 * TWOPI:
            return v - TWOPI
    return v % TWOPI


@njit(uint64(uint64, uint64), inline="always", cache=True)
def index_state(s1, v):
    return mix64(s1 + v * VC)


@njit(uint64(uint64, uint64, uint64, uint64), inline="always", cache=True)
def cell_state(sv, j, kenc, purpose):
    return sv + j * JC + kenc * KC + purpose * PC


@njit(cache=True)
def fill_uniform_grid(out, sv, m, levels, purpose, ctr):
    """Fill out[j, c] with the (key=(sv,j,levels[c],purpose), ctr) uniform."""
    nc = levels.shape[0]
    for j in range(m):
        base = sv + U(j) * JC + U(purpose) * PC
        for c in range(nc):
            w = word_at(base + U(levels[c]) * KC, U(ctr))
            out[j, c] = to_u01(w)


@njit(cache=True)
def accum_suffix(reg, vals, y, scales):
    """Tower accumulation for one index update.

    vals[j, k] holds the unit draw for level k (column K is the base draw at
    t=2^-K, columns k<K the per-interval increments).  The path value at level
    k is the suffix sum of scales*vals; each register is wrapped after its add.
    """
    m, K1 = vals.shape
    for j in range(m):
        acc = 0.0
        for k in range(K1 - 1, -1, -1):
            acc += scales[k] * vals[j, k]
            reg[j, k] = wrap2pi(reg[j, k] + y * acc)


@njit(cache=True)
def suffix_path(vals, scales):
    """Path values at levels 0..K from unit draws; same arithmetic as accum_suffix."""
    m, K1 = vals.shape
    out = np.empty((m, K1))
    for j in range(m):
        acc = 0.0
        for k in range(K1 - 1, -1, -1):
            acc += scales[k] * vals[j, k]
            out[j, k] = acc
    return out


# ---------------------------------------------------------------------------
# Poisson counts
# ---------------------------------------------------------------------------

@njit(uint64(uint64, float64), inline="always", cache=True)
def poisson_from_state(state, mu):
    """Poisson(mu) as a pure function of the key state.

    Inversion (one uniform, ctr 0) below mean 10; Hormann's PTRS transformed
    rejection above, attempt a consuming ctrs (2a, 2a+1).
    """
    if mu <= 0.0:
        return U(0)
    if mu < 10.0:
        u = to_u01(word_at(state, U(0)))
        p = math.exp(-mu)
        c = p
        n = U(0)
        while u > c and n < U(200):
            n += U(1)
            p *= mu / n
            c += p
        return n
    b = 0.931 + 2.53 * math.sqrt(mu)
    a = -0.059 + 0.02483 * b
    vr = 0.9277 - 3.6224 / (b - 2.0)
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    lnmu = math.log(mu)
    for attempt in range(1000):
        uu = to_u01(word_at(state, U(2 * attempt))) - 0.5
        vv = to_u01(word_at(state, U(2 * attempt + 1)))
        us = 0.5 - abs(uu)
        k = math.floor((2.0 * a / us + b) * uu + mu + 0.43)
        if us >= 0.07 and vv <= vr:
            return U(k)
        if k < 0.0 or (us < 0.013 and vv > us):
            continue
        if (math.log(vv * invalpha / (a / (us * us) + b))
                <= k * lnmu - mu - math.lgamma(k + 1.0)):
            return U(k)
    return U(0)  # unreachable: acceptance probability is ~0.9 per attempt


# ---------------------------------------------------------------------------
# Compound-Poisson family (arrival-based path realization)
# ---------------------------------------------------------------------------
#
# One realization of the process on (0, 1] per (v, j): a Poisson(rate) number
# of jumps with i.i.d. uniform arrival times; X(2^-k) sums the jumps that
# arrived in (0, 2^-k].  The path is therefore independent of the tower depth
# K: deepening the tower never changes any level.

P_CP_COUNT = 4
P_CP_ARRIVAL = 5
P_CP_JUMP = 6
P_CP_TAPE_A = 7
P_CP_SIGN = 8


@njit(inline="always", cache=True)
def _arrival_kmax(ua, K):
    # levels k with 2^-k >= arrival time
    km = int(-math.log2(ua))
    if km > K:
        km = K
    return km


@njit(inline="always", cache=True)
def _table_jump_index(uj, cum):
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if uj > cum[mid]:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def cp_accumulate(reg, sv, y, K, m, rate, proj, cum, gnp_cap, jump_scale):
    """Add one compound-Poisson index update into tower registers.

    Table mode (gnp_cap == 0): jump i has projected value proj[i] (already
    <y, s_i>), picked by inverse CDF on cum.  Tape mode (gnp_cap >= 1): jumps
    are the streaming bit-tape law with depth cap gnp_cap, scaled by
    jump_scale (2*pi) and projected by y.
    """
    for j in range(m):
        sj = sv + U(j) * JC
        n = poisson_from_state(sj + U(P_CP_COUNT) * PC, rate)
        if n == U(0):
            continue
        for t in range(n):
            ua = to_u01(word_at(sj + U(P_CP_ARRIVAL) * PC, U(t)))
            if gnp_cap == 0:
                uj = to_u01(word_at(sj + U(P_CP_JUMP) * PC, U(t)))
                s = proj[_table_jump_index(uj, cum)]
            else:
                wb = word_at(sj + U(P_CP_JUMP) * PC, U(t))
                T = 1
                probe = U(1) << U(63)
                while T < gnp_cap and (wb & probe) == U(0):
                    T += 1
                    probe >>= U(1)
                wa = word_at(sj + U(P_CP_TAPE_A) * PC, U(t))
                prefix = wa >> U(64 - (T - 1)) if T > 1 else U(0)
                frac = (2.0 * prefix + 1.0) * (2.0 ** -T)
                ws = word_at(sj + U(P_CP_SIGN) * PC, U(t))
                sgn = 1.0 if (ws & U(1)) == U(1) else -1.0
                s = y * jump_scale * sgn * frac
            kmax = _arrival_kmax(ua, K)
            for k in range(kmax + 1):
                reg[j, k] = wrap2pi(reg[j, k] + s)


@njit(cache=True)
def cp_path(sv, j, K, rate, jumps, cum, gnp_cap, jump_scale):
    """Path values (K+1, d) of one compound-Poisson copy; matches cp_accumulate."""
    d = jumps.shape[1]
    out = np.zeros((K + 1, d))
    sj = sv + U(j) * JC
    n = poisson_from_state(sj + U(P_CP_COUNT) * PC, rate)
    for t in range(n):
        ua = to_u01(word_at(sj + U(P_CP_ARRIVAL) * PC, U(t)))
        kmax = _arrival_kmax(ua, K)
        if gnp_cap == 0:
            uj = to_u01(word_at(sj + U(P_CP_JUMP) * PC, U(t)))
            idx = _table_jump_index(uj, cum)
            for k in range(kmax + 1):
                for c in range(d):
                    out[k, c] += jumps[idx, c]
        else:
            wb = word_at(sj + U(P_CP_JUMP) * PC, U(t))
            T = 1
            probe = U(1) << U(63)
            while T < gnp_cap and (wb & probe) == U(0):
                T += 1
                probe >>= U(1)
            wa = word_at(sj + U(P_CP_TAPE_A) * PC, U(t))
            prefix = wa >> U(64 - (T - 1)) if T > 1 else U(0)
            frac = (2.0 * prefix + 1.0) * (2.0 ** -T)
            ws = word_at(sj + U(P_CP_SIGN) * PC, U(t))
            sgn = 1.0 if (ws & U(1)) == U(1) else -1.0
            for k in range(kmax + 1):
                out[k, 0] += jump_scale * sgn * frac
    return out


# ---------------------------------------------------------------------------
# Pure-killed towers
# ---------------------------------------------------------------------------

P_KILL = 9


@njit(inline="always", cache=True)
def _kill_kmax(sv, j, level, c):
    """Deepest level killed by the exponential kill time under key (sv,j,level)."""
    u = to_u01(word_at(sv + U(j) * JC + U(level) * KC + U(P_KILL) * PC, U(0)))
    kt = -math.log1p(-u) / c
    if kt > 1.0:
        return -1
    return int(-math.log2(kt))


@njit(cache=True)
def killed_hll_accumulate(dead, sv_arr, c, K, m):
    """OR in HLL-coupled insertions: one kill time per (v, j) governs all levels."""
    for i in range(sv_arr.shape[0]):
        sv = sv_arr[i]
        for j in range(m):
            kmax = _kill_kmax(sv, j, 0, c)
            if kmax < 0:
                continue
            if kmax > K:
                kmax = K
            for k in range(kmax + 1):
                dead[j, k] = 1


@njit(cache=True)
def killed_pcsa_accumulate(dead, sv_arr, c, K, m):
    """OR in PCSA-coupled insertions: independent kill draw per (v, j, level).

    Iterates (j, k) outer and stops at the first killing v: once a dead bit is
    set, later draws for that cell cannot be observed, so skipping them leaves
    the final state identical to update-at-a-time order.
    """
    nv = sv_arr.shape[0]
    for j in range(m):
        for k in range(K + 1):
            if dead[j, k] != 0:
                continue
            thresh = 2.0 ** -k
            for i in range(nv):
                u = to_u01(word_at(sv_arr[i] + U(j) * JC + U(k) * KC + U(P_KILL) * PC, U(0)))
                kt = -math.log1p(-u) / c
                if kt <= thresh:
                    dead[j, k] = 1
                    break
