"""Levy process catalog: characteristic exponents and keyed path sampling.

Each ProcessSpec variant pins both the target function f (char_exponent, with
E exp(i<z, X_t>) = exp(-t f(z))) and a deterministic sampling construction:

* unit-time samples for the self-similar families (stable, Gaussian,
  subordinated), used by the real-register sketch;
* dyadic paths at times 2^-k for every family, used by the phase-register
  tower.  A path is a base draw at t = 2^-K plus independent per-interval
  increments over (2^-(k+1), 2^-k], each increment keyed by its level.
  Compound-Poisson paths are realized from one arrival sequence on (0, 1]
  (same law, and the realization is independent of the depth K).

Pure-killed processes live here only as spec + kill-time sampling; their
OR-register sketch is in tower.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _kernels as _k
from . import rng
from .errors import ConfigError, ParameterError

U = np.uint64

# purpose tags (4..9 are pinned in _kernels)
P_PATH = 1
P_PATH_BASE = 2
P_COORD = 3
P_COORD_BASE = 10
P_SUB = 11
P_SUB_BASE = 12
P_KILL = _k.P_KILL


# ---------------------------------------------------------------------------
# Spec variants
# ---------------------------------------------------------------------------

def _as_tuple(x):
    if np.ndim(x) == 0:
        return (float(x),)
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class Drift:
    gamma: tuple  # R^d drift vector

    def __post_init__(self):
        object.__setattr__(self, "gamma", _as_tuple(self.gamma))
        if not all(math.isfinite(g) for g in self.gamma):
            raise ConfigError("drift vector must be finite")


@dataclass(frozen=True)
class Gaussian:
    """sigma2 is the variance for d=1; cov a d x d covariance matrix for d>=2."""
    sigma2: float | None = None
    cov: tuple | None = None

    def __post_init__(self):
        if (self.sigma2 is None) == (self.cov is None):
            raise ConfigError("Gaussian needs exactly one of sigma2 or cov")
        if self.sigma2 is not None:
            if not (math.isfinite(self.sigma2) and self.sigma2 >= 0.0):
                raise ConfigError(f"sigma2 must be nonnegative, got {self.sigma2}")
        else:
            a = np.asarray(self.cov, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ConfigError("cov must be a square matrix")
            if not np.allclose(a, a.T, atol=1e-12):
                raise ConfigError("cov must be symmetric")
            try:
                np.linalg.cholesky(a + 1e-15 * np.eye(a.shape[0]))
            except np.linalg.LinAlgError:
                raise ConfigError("cov must be positive semidefinite") from None
            object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in a))


@dataclass(frozen=True)
class Stable1D:
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigError(f"alpha must be in (0, 2], got {self.alpha}")


@dataclass(frozen=True)
class StableSpectral:
    """Symmetric alpha-stable on R^d with discrete spectral measure.

    atoms is a sequence of (weight, unit vector); the exponent is
    sum_i w_i |<z, xi_i>|^alpha.  List both signs explicitly if you mean them.
    """
    alpha: float
    atoms: tuple

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ConfigError(f"spectral alpha must be in (0, 2), got {self.alpha}")
        norm = []
        for w, xi in self.atoms:
            xi = _as_tuple(xi)
            if w <= 0.0:
                raise ConfigError("spectral weights must be positive")
            if abs(math.sqrt(sum(c * c for c in xi)) - 1.0) > 1e-12:
                raise ConfigError("spectral atoms must be unit vectors")
            norm.append((float(w), xi))
        if not norm:
            raise ConfigError("spectral measure needs at least one atom")
        d = len(norm[0][1])
        if any(len(xi) != d for _, xi in norm):
            raise ConfigError("spectral atoms must share one dimension")
        object.__setattr__(self, "atoms", tuple(norm))


@dataclass(frozen=True)
class CompoundPoisson:
    """Finite-activity jump process: jumps is a sequence of (value in R^d, rate)."""
    jumps: tuple

    def __post_init__(self):
        norm = []
        for s, lam in self.jumps:
            s = _as_tuple(s)
            if not lam > 0.0:
                raise ConfigError("jump rates must be strictly positive")
            norm.append((s, float(lam)))
        if norm:
            d = len(norm[0][0])
            if any(len(s) != d for s, _ in norm):
                raise ConfigError("jump values must share one dimension")
        object.__setattr__(self, "jumps", tuple(norm))


@dataclass(frozen=True)
class SubordinatedLpq:
    """d i.i.d. p-stable coordinates time-changed by one q-stable subordinator."""
    p: float
    q: float
    d: int = 1

    def __post_init__(self):
        if not 0.0 < self.p <= 2.0:
            raise ConfigError(f"p must be in (0, 2], got {self.p}")
        if not 0.0 < self.q < 1.0:
            raise ConfigError(f"q must be in (0, 1), got {self.q}")
        if self.d < 1:
            raise ConfigError("d must be >= 1")


@dataclass(frozen=True)
class PureKilled:
    rate: float  # kill rate c

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ConfigError(f"kill rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class ZPUniform:
    modulus: int

    def __post_init__(self):
        if not (isinstance(self.modulus, int) and self.modulus >= 2):
            raise ConfigError(f"modulus must be an integer >= 2, got {self.modulus}")


@dataclass(frozen=True)
class GnpFinite:
    w: int

    def __post_init__(self):
        if not (isinstance(self.w, int) and 1 <= self.w <= 16):
            raise ConfigError(f"w must be an integer in [1, 16], got {self.w}")


@dataclass(frozen=True)
class GnpStreaming:
    depth_cap: int

    def __post_init__(self):
        if not (isinstance(self.depth_cap, int) and 1 <= self.depth_cap <= 64):
            raise ConfigError(f"depth_cap must be in [1, 64], got {self.depth_cap}")


@dataclass(frozen=True)
class Palette:
    """Heterogeneous per-index targets: index v uses specs[v mod len(specs)]."""
    specs: tuple
    assign: str = "mod"

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise ConfigError("palette needs at least one spec")
        if self.assign != "mod":
            raise ConfigError(f"unknown palette assignment rule {self.assign!r}")
        d = spec_dim(specs[0])
        if any(spec_dim(s) != d for s in specs):
            raise ConfigError("palette specs must share one dimension")
        if any(isinstance(s, (Palette, PureKilled)) for s in specs):
            raise ConfigError("palette entries must be plain samplable specs")
        object.__setattr__(self, "specs", specs)

    def spec_for(self, v: int):
        return self.specs[int(v) % len(self.specs)]


ProcessSpec = (Drift | Gaussian | Stable1D | StableSpectral | CompoundPoisson
               | SubordinatedLpq | PureKilled | ZPUniform | GnpFinite | GnpStreaming)


def spec_dim(spec) -> int:
    if isinstance(spec, Drift):
        return len(spec.gamma)
    if isinstance(spec, Gaussian):
        return 1 if spec.sigma2 is not None else len(spec.cov)
    if isinstance(spec, StableSpectral):
        return len(spec.atoms[0][1])
    if isinstance(spec, CompoundPoisson):
        return len(spec.jumps[0][0]) if spec.jumps else 1
    if isinstance(spec, SubordinatedLpq):
        return spec.d
    if isinstance(spec, Palette):
        return spec_dim(spec.specs[0])
    return 1


def effective_alpha(spec) -> float:
    """Stability index of the unit-time projection law."""
    if isinstance(spec, Stable1D):
        return spec.alpha
    if isinstance(spec, StableSpectral):
        return spec.alpha
    if isinstance(spec, Gaussian):
        return 2.0
    if isinstance(spec, SubordinatedLpq):
        return spec.p * spec.q
    raise ConfigError(f"{type(spec).__name__} is not a stable-family spec")


# ---------------------------------------------------------------------------
# JSON encoding (canonical structured-text form, embedded in sketch files)
# ---------------------------------------------------------------------------

def spec_to_json(spec) -> dict:
    if isinstance(spec, Drift):
        return {"type": "drift", "gamma": list(spec.gamma)}
    if isinstance(spec, Gaussian):
        if spec.sigma2 is not None:
            return {"type": "gaussian", "sigma2": spec.sigma2}
        return {"type": "gaussian", "cov": [list(r) for r in spec.cov]}
    if isinstance(spec, Stable1D):
        return {"type": "stable1d", "alpha": spec.alpha}
    if isinstance(spec, StableSpectral):
        return {"type": "stable_spectral", "alpha": spec.alpha,
                "atoms": [{"weight": w, "xi": list(xi)} for w, xi in spec.atoms]}
    if isinstance(spec, CompoundPoisson):
        return {"type": "compound_poisson",
                "jumps": [{"value": list(s), "rate": lam} for s, lam in spec.jumps]}
    if isinstance(spec, SubordinatedLpq):
        return {"type": "subordinated_lpq", "p": spec.p, "q": spec.q, "d": spec.d}
    if isinstance(spec, PureKilled):
        return {"type": "pure_killed", "rate": spec.rate}
    if isinstance(spec, ZPUniform):
        return {"type": "zp_uniform", "modulus": spec.modulus}
    if isinstance(spec, GnpFinite):
        return {"type": "gnp_finite", "w": spec.w}
    if isinstance(spec, GnpStreaming):
        return {"type": "gnp_streaming", "depth_cap": spec.depth_cap}
    if isinstance(spec, Palette):
        return {"type": "palette", "assign": spec.assign,
                "specs": [spec_to_json(s) for s in spec.specs]}
    raise ConfigError(f"unknown spec {spec!r}")


def spec_from_json(obj: dict):
    try:
        t = obj["type"]
        if t == "drift":
            return Drift(tuple(obj["gamma"]))
        if t == "gaussian":
            if "sigma2" in obj:
                return Gaussian(sigma2=float(obj["sigma2"]))
            return Gaussian(cov=tuple(tuple(r) for r in obj["cov"]))
        if t == "stable1d":
            return Stable1D(float(obj["alpha"]))
        if t == "stable_spectral":
            return StableSpectral(float(obj["alpha"]),
                                  tuple((a["weight"], tuple(a["xi"])) for a in obj["atoms"]))
        if t == "compound_poisson":
            return CompoundPoisson(tuple((tuple(j["value"]), j["rate"]) for j in obj["jumps"]))
        if t == "subordinated_lpq":
            return SubordinatedLpq(float(obj["p"]), float(obj["q"]), int(obj["d"]))
        if t == "pure_killed":
            return PureKilled(float(obj["rate"]))
        if t == "zp_uniform":
            return ZPUniform(int(obj["modulus"]))
        if t == "gnp_finite":
            return GnpFinite(int(obj["w"]))
        if t == "gnp_streaming":
            return GnpStreaming(int(obj["depth_cap"]))
        if t == "palette":
            return Palette(tuple(spec_from_json(s) for s in obj["specs"]),
                           obj.get("assign", "mod"))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad process spec encoding: {e}") from e
    raise ConfigError(f"unknown process spec type {t!r}")


# ---------------------------------------------------------------------------
# g_np coefficients and the streaming jump law
# ---------------------------------------------------------------------------

def dyadic_valuation(x: int) -> int:
    """tau(x): the exponent of the largest power of two dividing x (x >= 1)."""
    if x <= 0:
        raise ParameterError(f"dyadic valuation needs x >= 1, got {x}")
    return (x & -x).bit_length() - 1


def gnp_rates_exact(w: int) -> list[Fraction]:
    """Exact jump rates (2^(2 tau(j)+1) + 1) / (3 * 2^(2w-1)) for j = 1..2^w-1."""
    if not 1 <= w <= 16:
        raise ParameterError(f"w must be in [1, 16], got {w}")
    den = 3 * 2 ** (2 * w - 1)
    return [Fraction(2 ** (2 * dyadic_valuation(j) + 1) + 1, den)
            for j in range(1, 2 ** w)]


def gnp_coefficients(w: int) -> list[tuple[float, float]]:
    """(jump magnitude 2*pi*j/2^w, rate) pairs for j = 1..2^w-1.

    The symmetrized jump law puts half of each rate on each sign; the total
    rate is (2^(2w) - 1) / (3 * 2^(2w-1)).
    """
    rates = gnp_rates_exact(w)
    p = 2 ** w
    return [(2.0 * math.pi * j / p, float(rates[j - 1])) for j in range(1, p)]


GNP_STREAM_RATE = 2.0 / 3.0


@lru_cache(maxsize=None)
def gnp_stream_law(depth_cap: int) -> tuple:
    """Exact magnitude law of the capped bit-tape jump sampler.

    Returns (fractions array in (0,1), Fraction probabilities) over magnitudes
    x = (2*prefix+1)/2^T; P(T=t) = 2^-t for t < cap and 2^-(cap-1) at the cap,
    uniform over the 2^(t-1) prefixes.  Probabilities cover |J|; signs are
    symmetric.
    """
    if not 1 <= depth_cap <= 16:
        raise ParameterError("gnp stream law enumeration supports depth_cap <= 16")
    fracs, probs = [], []
    for t in range(1, depth_cap + 1):
        pt = Fraction(1, 2 ** t) if t < depth_cap else Fraction(1, 2 ** (depth_cap - 1))
        pp = pt / 2 ** (t - 1)
        for prefix in range(2 ** (t - 1)):
            fracs.append(Fraction(2 * prefix + 1, 2 ** t))
            probs.append(pp)
    order = np.argsort([float(f) for f in fracs])
    return (np.array([float(fracs[i]) for i in order]),
            tuple(probs[int(i)] for i in order))


# ---------------------------------------------------------------------------
# Characteristic exponents
# ---------------------------------------------------------------------------

def _zmat(z, d: int):
    """Normalize z to an (N, d) float array; remembers scalar-ness."""
    a = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ParameterError("char_exponent needs finite z")
    if d == 1:
        scalar = a.ndim == 0
        return a.reshape(-1, 1), scalar
    if a.ndim == 1:
        if a.shape[0] != d:
            raise ConfigError(f"z has dimension {a.shape[0]}, spec has {d}")
        return a.reshape(1, d), True
    if a.ndim == 2 and a.shape[1] == d:
        return a, False
    raise ConfigError(f"z must be (d,) or (N, d) with d={d}")


def char_exponent(spec, z):
    """f(z) with E exp(i<z, X_t>) = exp(-t f(z)).

    Accepts a scalar (d=1), a d-vector, or a batch of either; returns complex.
    """
    d = spec_dim(spec)
    zm, scalar = _zmat(z, d)
    if isinstance(spec, Drift):
        out = -1j * (zm @ np.asarray(spec.gamma))
    elif isinstance(spec, Gaussian):
        if spec.sigma2 is not None:
            out = 0.5 * spec.sigma2 * zm[:, 0] ** 2 + 0j
        else:
            a = np.asarray(spec.cov)
            out = 0.5 * np.einsum("nd,de,ne->n", zm, a, zm) + 0j
    elif isinstance(spec, Stable1D):
        out = np.abs(zm[:, 0]) ** spec.alpha + 0j
    elif isinstance(spec, StableSpectral):
        ws = np.array([w for w, _ in spec.atoms])
        xis = np.array([xi for _, xi in spec.atoms])
        out = (np.abs(zm @ xis.T) ** spec.alpha) @ ws + 0j
    elif isinstance(spec, CompoundPoisson):
        if not spec.jumps:
            out = np.zeros(zm.shape[0], dtype=complex)
        else:
            svals = np.array([s for s, _ in spec.jumps])
            lams = np.array([lam for _, lam in spec.jumps])
            out = (1.0 - np.exp(1j * (zm @ svals.T))) @ lams
    elif isinstance(spec, SubordinatedLpq):
        out = (np.abs(zm) ** spec.p).sum(axis=1) ** spec.q + 0j
    elif isinstance(spec, PureKilled):
        out = np.where(zm[:, 0] != 0.0, spec.rate, 0.0) + 0j
    elif isinstance(spec, ZPUniform):
        p = spec.modulus
        j = np.arange(p)
        out = (1.0 - np.cos(np.outer(zm[:, 0], 2.0 * np.pi * j / p))).sum(axis=1) / p + 0j
    elif isinstance(spec, GnpFinite):
        mags, rates = _gnp_tables(spec.w)
        out = (1.0 - np.cos(np.outer(zm[:, 0], mags))) @ rates + 0j
    elif isinstance(spec, GnpStreaming):
        fracs, probs = gnp_stream_law(spec.depth_cap)
        pr = np.array([float(p) for p in probs])
        out = GNP_STREAM_RATE * ((1.0 - np.cos(np.outer(zm[:, 0], 2.0 * np.pi * fracs))) @ pr) + 0j
    else:
        raise ConfigError(f"char_exponent: unsupported spec {type(spec).__name__}")
    return complex(out[0]) if scalar else out


@lru_cache(maxsize=None)
def _gnp_tables(w: int):
    coeffs = gnp_coefficients(w)
    mags = np.array([m for m, _ in coeffs])
    rates = np.array([r for _, r in coeffs])
    return mags, rates


# ---------------------------------------------------------------------------
# Jump tables for the compound-Poisson family
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def jump_table(spec):
    """(values (n,d), rates (n,), total_rate, cum (n,)) for table-mode sampling."""
    if isinstance(spec, CompoundPoisson):
        if not spec.jumps:
            return (np.zeros((0, 1)), np.zeros(0), 0.0, np.zeros(0))
        values = np.array([s for s, _ in spec.jumps], dtype=float)
        rates = np.array([lam for _, lam in spec.jumps], dtype=float)
    elif isinstance(spec, ZPUniform):
        p = spec.modulus
        values = (2.0 * np.pi * np.arange(1, p) / p).reshape(-1, 1)
        rates = np.full(p - 1, 1.0 / p)
    elif isinstance(spec, GnpFinite):
        mags, r = _gnp_tables(spec.w)
        values = np.concatenate([mags, -mags]).reshape(-1, 1)
        rates = np.concatenate([r, r]) / 2.0
    else:
        raise ConfigError(f"{type(spec).__name__} has no finite jump table")
    total = float(rates.sum())
    cum = np.cumsum(rates) / total
    cum[-1] = 1.0
    return values, rates, total, cum


def _is_cp_family(spec) -> bool:
    return isinstance(spec, (CompoundPoisson, ZPUniform, GnpFinite, GnpStreaming))


# ---------------------------------------------------------------------------
# Sampling: transforms on keyed uniform grids
# ---------------------------------------------------------------------------

def _chain_scales(K: int, exponent: float, c: float) -> np.ndarray:
    """Level scales: increments over (2^-(k+1), 2^-k] for k < K, base at 2^-K."""
    dt = 2.0 ** -(np.arange(K + 1, dtype=float) + 1.0)
    dt[K] = 2.0 ** -K
    return c * dt ** exponent


def _grid(sv, m: int, levels, purpose: int, ctr: int) -> np.ndarray:
    out = np.empty((m, len(levels)))
    _k.fill_uniform_grid(out, U(sv), m, np.asarray(levels, dtype=np.uint64),
                         purpose, ctr)
    return out


def _grid_pair(sv, m, K, purpose, purpose_base, ctr):
    """Uniform grid with columns 0..K-1 keyed (purpose, level k) and column K
    keyed (purpose_base, level K)."""
    out = np.empty((m, K + 1))
    levels = np.arange(K, dtype=np.uint64)
    _k.fill_uniform_grid(out[:, :K], U(sv), m, levels, purpose, ctr)
    _k.fill_uniform_grid(out[:, K:], U(sv), m, np.array([K], dtype=np.uint64),
                         purpose_base, ctr)
    return out


def _stable_vals(sv, m, K, alpha, purpose, purpose_base, ctr0):
    u0 = _grid_pair(sv, m, K, purpose, purpose_base, ctr0)
    if alpha == 1.0:
        np.subtract(u0, 0.5, out=u0)
        np.multiply(u0, np.pi, out=u0)
        return np.tan(u0, out=u0)
    if alpha == 2.0:
        return rng.gaussian_icdf(u0, math.sqrt(2.0))
    u1 = _grid_pair(sv, m, K, purpose, purpose_base, ctr0 + 1)
    return np.asarray(rng.stable_symmetric_from_uniforms(u0, u1, alpha))


def _lpq_vals(sv, m, K, spec, y):
    """<y, increment> matrix for SubordinatedLpq (time scales folded in)."""
    uz0 = _grid_pair(sv, m, K, P_SUB, P_SUB_BASE, 0)
    uz1 = _grid_pair(sv, m, K, P_SUB, P_SUB_BASE, 1)
    dz = np.asarray(rng.stable_onesided_from_uniforms(uz0, uz1, spec.q))
    dz *= _chain_scales(K, 1.0 / spec.q, 1.0)
    w = dz ** (1.0 / spec.p)
    acc = np.zeros((m, K + 1))
    for i in range(spec.d):
        if y[i] == 0.0:
            continue
        s0 = _grid_pair(sv, m, K, P_COORD, P_COORD_BASE, 2 * i)
        if spec.p == 1.0:
            np.subtract(s0, 0.5, out=s0)
            np.multiply(s0, np.pi, out=s0)
            si = np.tan(s0, out=s0)
        elif spec.p == 2.0:
            si = rng.gaussian_icdf(s0, math.sqrt(2.0))
        else:
            s1 = _grid_pair(sv, m, K, P_COORD, P_COORD_BASE, 2 * i + 1)
            si = np.asarray(rng.stable_symmetric_from_uniforms(s0, s1, spec.p))
        acc += y[i] * si
    acc *= w
    return acc


_ONES_CACHE: dict[int, np.ndarray] = {}


def _ones(K: int) -> np.ndarray:
    if K not in _ONES_CACHE:
        _ONES_CACHE[K] = np.ones(K + 1)
    return _ONES_CACHE[K]


def accumulate_tower(spec, reg: np.ndarray, s1: int, vs, ys, K: int) -> None:
    """Fold updates (v_i, y_i) into phase registers reg of shape (m, K+1).

    reg[j, k] accumulates <y, X^{(v,j)}(2^-k)> mod 2pi.  vs is uint64; ys is
    (V,) for d=1 or (V, d).  Every register is wrapped after each addition.
    """
    m = reg.shape[0]
    d = spec_dim(spec)
    vs = np.asarray(vs, dtype=np.uint64)
    ys = np.asarray(ys, dtype=float)
    if isinstance(spec, Palette):
        groups: dict[int, list[int]] = {}
        for i, v in enumerate(vs):
            groups.setdefault(int(v) % len(spec.specs), []).append(i)
        for gi, idx in groups.items():
            accumulate_tower(spec.specs[gi], reg, s1, vs[idx], ys[idx], K)
        return
    if isinstance(spec, Drift):
        if len(vs) == 0:
            return
        g = np.asarray(spec.gamma)
        total = float((ys.reshape(len(vs), d) @ g).sum() if d > 1 else ys.sum() * g[0])
        reg += total * 2.0 ** -np.arange(K + 1, dtype=float)
        np.mod(reg, 2.0 * np.pi, out=reg)
        return
    if isinstance(spec, PureKilled):
        raise ConfigError("pure-killed processes use the killed tower")

    if _is_cp_family(spec):
        if isinstance(spec, GnpStreaming):
            for i in range(len(vs)):
                sv = _k.index_state(U(s1), vs[i])
                _k.cp_accumulate(reg, U(sv), float(ys[i]), K, m, GNP_STREAM_RATE,
                                 np.zeros(1), np.ones(1), spec.depth_cap, 2.0 * np.pi)
            return
        values, rates, total, cum = jump_table(spec)
        if total == 0.0:
            return
        for i in range(len(vs)):
            sv = _k.index_state(U(s1), vs[i])
            y = ys[i] if d > 1 else np.array([float(ys[i])])
            proj = values @ np.asarray(y, dtype=float).reshape(d)
            _k.cp_accumulate(reg, U(sv), 1.0, K, m, total,
                             np.ascontiguousarray(proj), cum, 0, 0.0)
        return

    for i in range(len(vs)):
        sv = _k.index_state(U(s1), vs[i])
        if isinstance(spec, Stable1D):
            vals = _stable_vals(sv, m, K, spec.alpha, P_PATH, P_PATH_BASE, 0)
            _k.accum_suffix(reg, vals, float(ys[i]),
                            _chain_scales(K, 1.0 / spec.alpha, 1.0))
        elif isinstance(spec, Gaussian) and spec.sigma2 is not None:
            u = _grid_pair(sv, m, K, P_PATH, P_PATH_BASE, 0)
            vals = rng.gaussian_icdf(u, 1.0)
            _k.accum_suffix(reg, vals, float(ys[i]),
                            _chain_scales(K, 0.5, math.sqrt(spec.sigma2)))
        elif isinstance(spec, Gaussian):
            L = _chol(spec)
            c = L.T @ ys[i].reshape(d)
            scales = _chain_scales(K, 0.5, 1.0)
            for ci in range(d):
                if c[ci] == 0.0:
                    continue
                u = _grid_pair(sv, m, K, P_COORD, P_COORD_BASE, ci)
                vals = rng.gaussian_icdf(u, 1.0)
                _k.accum_suffix(reg, vals, float(c[ci]), scales)
        elif isinstance(spec, StableSpectral):
            y = ys[i].reshape(d)
            scales = _chain_scales(K, 1.0 / spec.alpha, 1.0)
            for a, (wgt, xi) in enumerate(spec.atoms):
                eff = wgt ** (1.0 / spec.alpha) * float(np.dot(y, xi))
                if eff == 0.0:
                    continue
                vals = _stable_vals(sv, m, K, spec.alpha, P_COORD, P_COORD_BASE, 2 * a)
                _k.accum_suffix(reg, vals, eff, scales)
        elif isinstance(spec, SubordinatedLpq):
            y = ys[i].reshape(d) if d > 1 else np.array([float(ys[i])])
            vals = _lpq_vals(sv, m, K, spec, y)
            _k.accum_suffix(reg, vals, 1.0, _ones(K))
        else:
            raise ConfigError(f"cannot sample paths for {type(spec).__name__}")


@lru_cache(maxsize=None)
def _chol(spec: Gaussian) -> np.ndarray:
    # lower-triangular, row-major factorization order is part of the format
    return np.linalg.cholesky(np.asarray(spec.cov))


# ---------------------------------------------------------------------------
# Contract-level sampling (single copies; same draws as the fused paths)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicPath:
    """X at times 2^-k for k = 0..K; dead marks killed (infinite) values."""
    K: int
    values: np.ndarray           # (K+1,) for d=1 else (K+1, d)
    dead: np.ndarray | None = None

    def value(self, k: int):
        return self.values[k]


def _key_states(key: rng.OracleKey):
    s1 = rng.seed_state(key.master_seed)
    sv = rng.index_state(s1, key.index)
    return s1, sv


def sample_unit_time(spec, key: rng.OracleKey):
    """One draw of X_1 under (master_seed, index, rep); stable families only."""
    path = _sample_path(spec, key, 0, unit=True)
    return path.values[0]


def sample_dyadic_path(spec, key: rng.OracleKey, K: int) -> DyadicPath:
    """The keyed path at times 2^-k, k = 0..K (consistent along one copy)."""
    if K < 0:
        raise ConfigError(f"K must be >= 0, got {K}")
    return _sample_path(spec, key, K, unit=False)


def _sample_path(spec, key: rng.OracleKey, K: int, unit: bool) -> DyadicPath:
    d = spec_dim(spec)
    _, sv = _key_states(key)
    svj = (sv + (key.rep & 0xFFFFFFFF) * int(_k.JC)) & ((1 << 64) - 1)
    # rep folds into the index state so the grid kernels can run with m=1, j=0
    sv0 = U(svj)
    if unit and not isinstance(spec, (Stable1D, StableSpectral, Gaussian, SubordinatedLpq)):
        raise ConfigError(
            f"{type(spec).__name__} has no unit-time sampler; use a dyadic path")

    if isinstance(spec, Drift):
        t = 2.0 ** -np.arange(K + 1)
        vals = np.outer(t, np.asarray(spec.gamma))
        return DyadicPath(K, vals[:, 0] if d == 1 else vals)
    if isinstance(spec, PureKilled):
        u = _grid(sv0, 1, [0], P_KILL, 0)[0, 0]
        kt = rng.exponential_icdf(u, spec.rate)
        dead = 2.0 ** -np.arange(K + 1) >= kt
        return DyadicPath(K, np.zeros(K + 1), dead)
    if _is_cp_family(spec):
        if isinstance(spec, GnpStreaming):
            vals = _k.cp_path(sv0, 0, K, GNP_STREAM_RATE, np.zeros((1, 1)),
                              np.ones(1), spec.depth_cap, 2.0 * np.pi)
        else:
            values, rates, total, cum = jump_table(spec)
            if total == 0.0:
                vals = np.zeros((K + 1, max(d, 1)))
            else:
                vals = _k.cp_path(sv0, 0, K, total, np.ascontiguousarray(values),
                                  cum, 0, 0.0)
        return DyadicPath(K, vals[:, 0] if d == 1 else vals)

    if isinstance(spec, Stable1D):
        vals = _stable_vals(sv0, 1, K, spec.alpha, P_PATH, P_PATH_BASE, 0)
        path = _k.suffix_path(vals, _chain_scales(K, 1.0 / spec.alpha, 1.0))
        return DyadicPath(K, path[0])
    if isinstance(spec, Gaussian) and spec.sigma2 is not None:
        u = _grid_pair(sv0, 1, K, P_PATH, P_PATH_BASE, 0)
        path = _k.suffix_path(rng.gaussian_icdf(u, 1.0),
                              _chain_scales(K, 0.5, math.sqrt(spec.sigma2)))
        return DyadicPath(K, path[0])
    if isinstance(spec, Gaussian):
        L = _chol(spec)
        scales = _chain_scales(K, 0.5, 1.0)
        cols = np.empty((K + 1, d))
        for ci in range(d):
            u = _grid_pair(sv0, 1, K, P_COORD, P_COORD_BASE, ci)
            cols[:, ci] = _k.suffix_path(rng.gaussian_icdf(u, 1.0), scales)[0]
        return DyadicPath(K, cols @ L.T)
    if isinstance(spec, StableSpectral):
        scales = _chain_scales(K, 1.0 / spec.alpha, 1.0)
        out = np.zeros((K + 1, d))
        for a, (wgt, xi) in enumerate(spec.atoms):
            vals = _stable_vals(sv0, 1, K, spec.alpha, P_COORD, P_COORD_BASE, 2 * a)
            sa = _k.suffix_path(vals, scales)[0]
            out += wgt ** (1.0 / spec.alpha) * np.outer(sa, np.asarray(xi))
        return DyadicPath(K, out[:, 0] if d == 1 else out)
    if isinstance(spec, SubordinatedLpq):
        uz0 = _grid_pair(sv0, 1, K, P_SUB, P_SUB_BASE, 0)
        uz1 = _grid_pair(sv0, 1, K, P_SUB, P_SUB_BASE, 1)
        dz = np.asarray(rng.stable_onesided_from_uniforms(uz0, uz1, spec.q))
        dz *= _chain_scales(K, 1.0 / spec.q, 1.0)
        w = dz ** (1.0 / spec.p)
        out = np.empty((K + 1, d))
        for ci in range(d):
            s0 = _grid_pair(sv0, 1, K, P_COORD, P_COORD_BASE, 2 * ci)
            if spec.p in (1.0, 2.0):
                si = np.asarray(rng.stable_symmetric_from_uniforms(s0, 0.5, spec.p))
            else:
                s1u = _grid_pair(sv0, 1, K, P_COORD, P_COORD_BASE, 2 * ci + 1)
                si = np.asarray(rng.stable_symmetric_from_uniforms(s0, s1u, spec.p))
            out[:, ci] = _k.suffix_path(w * si, _ones(K))[0]
        return DyadicPath(K, out[:, 0] if d == 1 else out)
    raise ConfigError(f"cannot sample {type(spec).__name__}")


def unit_samples(spec, s1: int, v: int, m: int) -> np.ndarray:
    """m keyed unit-time draws for index v, repetitions j = 0..m-1.

    Returns (m,) for d=1 else (m, d).  Used by the real-register sketch; the
    draw at repetition j equals sample_unit_time with key rep=j.
    """
    d = spec_dim(spec)
    sv = U(_k.index_state(U(s1), U(int(v))))
    if isinstance(spec, Stable1D):
        return _stable_base_row(sv, m, spec.alpha, P_PATH_BASE, 0)
    if isinstance(spec, Gaussian) and spec.sigma2 is not None:
        u = _grid(sv, m, [0], P_PATH_BASE, 0)[:, 0]
        return np.asarray(rng.gaussian_icdf(u, math.sqrt(spec.sigma2)))
    if isinstance(spec, Gaussian):
        L = _chol(spec)
        g = np.empty((m, d))
        for ci in range(d):
            u = _grid(sv, m, [0], P_COORD_BASE, ci)[:, 0]
            g[:, ci] = rng.gaussian_icdf(u, 1.0)
        return g @ L.T
    if isinstance(spec, StableSpectral):
        out = np.zeros((m, d))
        for a, (wgt, xi) in enumerate(spec.atoms):
            sa = _stable_base_row(sv, m, spec.alpha, P_COORD_BASE, 2 * a)
            out += wgt ** (1.0 / spec.alpha) * np.outer(sa, np.asarray(xi))
        return out[:, 0] if d == 1 else out
    if isinstance(spec, SubordinatedLpq):
        uz0 = _grid(sv, m, [0], P_SUB_BASE, 0)[:, 0]
        uz1 = _grid(sv, m, [0], P_SUB_BASE, 1)[:, 0]
        zz = np.asarray(rng.stable_onesided_from_uniforms(uz0, uz1, spec.q))
        w = zz ** (1.0 / spec.p)
        out = np.empty((m, d))
        for ci in range(d):
            out[:, ci] = w * _stable_base_row(sv, m, spec.p, P_COORD_BASE, 2 * ci)
        return out[:, 0] if d == 1 else out
    raise ConfigError(f"{type(spec).__name__} has no unit-time sampler")


def _stable_base_row(sv, m, alpha, purpose, ctr0):
    u0 = _grid(sv, m, [0], purpose, ctr0)[:, 0]
    if alpha in (1.0, 2.0):
        return np.asarray(rng.stable_symmetric_from_uniforms(u0, 0.5, alpha))
    u1 = _grid(sv, m, [0], purpose, ctr0 + 1)[:, 0]
    return np.asarray(rng.stable_symmetric_from_uniforms(u0, u1, alpha))
