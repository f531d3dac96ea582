"""Deterministic keyed random oracle and primitive distribution samplers.

Every sample is a pure function of an OracleKey plus a draw counter, so the
same (seed, index, repetition) always reproduces the same process sample; this
is what makes the sketches linear and mergeable.  The integer layer (raw64)
is bit-exact across platforms and pinned by RNG_VERSION.  The float transforms
on top (tan, inverse normal CDF, ...) are pinned to this build's numpy/scipy
libm and are deterministic run-to-run on a given install.

Transform choices (frozen):
  gaussian          inverse CDF, scipy.special.ndtri
  exponential       -log1p(-u) / rate
  stable_symmetric  alpha=2: sqrt(2)*ndtri(u); alpha=1: tan(pi*(u-1/2));
                    otherwise the Chambers-Mallows-Stuck transform of
                    (Uniform(-pi/2, pi/2), Exp(1)), normalized so the
                    characteristic function is exactly exp(-|z|^alpha)
  stable_onesided   Kanter's transform, Laplace transform exactly exp(-z^q)
  poisson           inversion below mean 10, PTRS rejection above
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import _kernels as _k

RNG_VERSION = 1

_M64 = (1 << 64) - 1
_SEEDC = int(_k.SEEDC)
_VC = int(_k.VC)
_JC = int(_k.JC)
_KC = int(_k.KC)
_PC = int(_k.PC)
_CTRC = int(_k.CTRC)
_GOLD = int(_k.GOLD)


class ParameterError(ValueError):
    """A sampler parameter is outside its documented domain."""


@dataclass(frozen=True)
class OracleKey:
    """Addresses one independent random stream.

    master_seed is an opaque 128-bit integer; index is the stream key v
    (64-bit), rep the repetition j (32-bit), level the dyadic level k (signed
    32-bit, 0 for unit-time use) and purpose a tag separating sample roles
    (jump count vs jump value vs subordinator and so on).
    """

    master_seed: int
    index: int = 0
    rep: int = 0
    level: int = 0
    purpose: int = 0


def _mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    x ^= x >> 31
    return x


def seed_state(master_seed: int) -> int:
    """Per-seed base state s1 (see _kernels key derivation)."""
    lo = master_seed & _M64
    hi = (master_seed >> 64) & _M64
    return _mix64(_mix64((lo + _SEEDC) & _M64) ^ hi)


def index_state(s1: int, v: int) -> int:
    return _mix64((s1 + (v & _M64) * _VC) & _M64)


def key_state(key: OracleKey) -> int:
    sv = index_state(seed_state(key.master_seed), key.index)
    kenc = key.level & 0xFFFFFFFF
    return (sv + (key.rep & 0xFFFFFFFF) * _JC + kenc * _KC
            + (key.purpose & 0xFFFFFFFF) * _PC) & _M64


def raw64_from_state(state: int, ctr: int) -> int:
    return _mix64((state + (ctr & _M64) * _CTRC + _GOLD) & _M64)


def raw64(key: OracleKey, ctr: int = 0) -> int:
    """Deterministic 64-bit word for (key, ctr); the random oracle primitive."""
    return raw64_from_state(key_state(key), ctr)


def uniform01(key: OracleKey, ctr: int = 0) -> float:
    """53-bit-precision uniform in [0, 1) (in fact strictly inside (0, 1))."""
    return u01_from_word(raw64(key, ctr))


def u01_from_word(w: int) -> float:
    return ((w >> 11) + 0.5) * 2.0 ** -53


# -- pure transforms (uniforms -> target law), shared with the process layer --

def exponential_icdf(u: float, rate: float) -> float:
    return -math.log1p(-u) / rate


def gaussian_icdf(u, sigma):
    return sigma * ndtri(u)


def stable_symmetric_from_uniforms(u0, u1, alpha: float):
    """Unit symmetric alpha-stable (CF exp(-|z|^alpha)) from two uniforms.

    Accepts scalars or arrays.  alpha=1 and alpha=2 use the reduced one-uniform
    forms of the CMS transform (tan, Gaussian); u1 is ignored there and the
    keyed samplers only consume one counter for those alphas.
    """
    if alpha == 2.0:
        return math.sqrt(2.0) * ndtri(u0)
    if alpha == 1.0:
        return np.tan(np.pi * (np.asarray(u0) - 0.5))
    theta = np.pi * (np.asarray(u0) - 0.5)
    w = -np.log1p(-np.asarray(u1))
    ia = 1.0 / alpha
    return (np.sin(alpha * theta) / np.cos(theta) ** ia
            * (np.cos((1.0 - alpha) * theta) / w) ** ((1.0 - alpha) * ia))


def stable_onesided_from_uniforms(u0, u1, q: float):
    """Kanter's one-sided q-stable transform; Laplace transform exp(-z^q)."""
    theta = np.pi * np.asarray(u0)
    w = -np.log1p(-np.asarray(u1))
    a = (np.sin((1.0 - q) * theta)
         * np.sin(q * theta) ** (q / (1.0 - q))
         / np.sin(theta) ** (1.0 / (1.0 - q)))
    return (a / w) ** ((1.0 - q) / q)


# -- keyed samplers (the module contract) --

def exponential(key: OracleKey, ctr: int, rate: float) -> float:
    if not rate > 0.0:
        raise ParameterError(f"exponential rate must be positive, got {rate}")
    return exponential_icdf(uniform01(key, ctr), rate)


def gaussian(key: OracleKey, ctr: int, sigma: float) -> float:
    if sigma < 0.0:
        raise ParameterError(f"gaussian sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return 0.0
    return float(gaussian_icdf(uniform01(key, ctr), sigma))


def poisson(key: OracleKey, ctr: int, mean: float) -> int:
    if not 0.0 <= mean <= 2.0 ** 30:
        raise ParameterError(f"poisson mean out of range [0, 2^30]: {mean}")
    state = (key_state(key) + (ctr & _M64) * _CTRC) & _M64
    # counter offset folds into the state so multi-draw rejection stays keyed
    return int(_k.poisson_from_state(np.uint64(state), mean))


def stable_symmetric(key: OracleKey, ctr: int, alpha: float) -> float:
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"stable alpha must be in (0, 2], got {alpha}")
    u0 = uniform01(key, ctr)
    if alpha == 2.0 or alpha == 1.0:
        return float(stable_symmetric_from_uniforms(u0, 0.5, alpha))
    return float(stable_symmetric_from_uniforms(u0, uniform01(key, ctr + 1), alpha))


def stable_onesided(key: OracleKey, ctr: int, q: float) -> float:
    if not 0.0 < q < 1.0:
        raise ParameterError(f"one-sided stable q must be in (0, 1), got {q}")
    return float(stable_onesided_from_uniforms(uniform01(key, ctr),
                                               uniform01(key, ctr + 1), q))
