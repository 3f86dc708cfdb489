"""LDPC pseudorandom code: parameters, key generation, encoding, decoding."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .gf2 import (
    BitMatrix,
    BitVector,
    SparseRowMatrix,
    nullspace_basis,
    pack_bits,
    sparse_mat_mul,
    unpack_bits,
)
from .rng import make_rng

MESSAGE_BITS = 512
PARITY_BITS = 17  # ceil(-log2(1e-5))


class Scheme(str, enum.Enum):
    LLM = "llm"
    GIM = "gim"
    REVISED = "revised"


class Verdict(str, enum.Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"


class InvalidParams(ValueError):
    pass


class RankDeficientKey(RuntimeError):
    pass


def log2_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    k = min(k, n - k)
    if k <= 512:
        # lgamma differences lose ~1e-9 at n ~ 2^20; a short exact sum does not
        return math.fsum(math.log2(n - i) - math.log2(i + 1) for i in range(k))
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def security_lambda(n: int, t: int) -> int:
    """floor(log2 C(n, t)), exact for any size via integer bit lengths."""
    c = math.comb(n, t)
    return c.bit_length() - 1


def gim_extra_columns(lam: int) -> int:
    """Column count k of the multi-bit GIM generator: key bits + message + parity."""
    return lam + MESSAGE_BITS + PARITY_BITS


def gim_eta(lam: int, g: int) -> float:
    return -math.expm1(-math.log(2) * lam / g**2)


@dataclass(frozen=True)
class PrcParams:
    n: int
    r: int
    g: int
    t: int
    lam: int
    omega: float = 0.0
    scheme: Scheme = Scheme.LLM

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 0 < self.r < self.n:
            raise InvalidParams(f"need 0 < r < n, got r={self.r}, n={self.n}")
        if not 0 < self.g < self.n:
            raise InvalidParams(f"need 0 < g < n, got g={self.g}, n={self.n}")
        if not 3 <= self.t <= self.n:
            raise InvalidParams(f"need 3 <= t <= n, got t={self.t}")
        if not 0 <= self.omega < 0.5:
            raise InvalidParams(f"need 0 <= omega < 1/2, got {self.omega}")

    @classmethod
    def llm(cls, n: int, t: int, omega: float = 0.0, r: int | None = None, g: int | None = None) -> "PrcParams":
        lam = security_lambda(n, t)
        return cls(n, math.floor(0.99 * n) if r is None else r, lam if g is None else g, t, lam, omega, Scheme.LLM)

    @classmethod
    def gim(cls, n: int, t: int, omega: float | None = None, r: int | None = None, g: int | None = None) -> "PrcParams":
        lam = security_lambda(n, t)
        gg = lam if g is None else g
        if r is None:
            r = n - gim_extra_columns(lam) - lam
            if r <= 0:
                raise InvalidParams(f"n={n} too small for the GIM layout (r={r}); pass r explicitly")
        return cls(n, r, gg, t, lam, gim_eta(lam, gg) if omega is None else omega, Scheme.GIM)

    @classmethod
    def revised(cls, n: int, t: int, omega: float = 0.0, r: int | None = None, g: int | None = None) -> "PrcParams":
        p = cls.llm(n, t, omega, r, g)
        return replace(p, scheme=Scheme.REVISED)

    @classmethod
    def for_scheme(cls, scheme, n: int, t: int, **kw) -> "PrcParams":
        factory = {Scheme.LLM: cls.llm, Scheme.GIM: cls.gim, Scheme.REVISED: cls.revised}[Scheme(scheme)]
        return factory(n, t, **kw)

    @property
    def decode_threshold(self) -> int:
        return decode_threshold(self.r)

    def matches_configuration(self) -> bool:
        """True when r and g follow the default layout for this scheme."""
        if self.g != self.lam:
            return False
        if self.scheme is Scheme.GIM:
            return self.r == self.n - gim_extra_columns(self.lam) - self.lam
        return self.r == math.floor(0.99 * self.n)

    def with_omega(self, omega: float) -> "PrcParams":
        return replace(self, omega=omega)

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "n": self.n,
            "r": self.r,
            "g": self.g,
            "t": self.t,
            "lambda": self.lam,
            "omega": self.omega,
        }


def decode_threshold(r: int) -> int:
    """Largest integer k with k <= (1/2 - r^(-1/4)) * r, computed exactly.

    k satisfies the bound iff (r - 2k)^4 >= 16 r^3 with r - 2k >= 0, so the
    float estimate is nudged until that integer test is tight.
    """
    k = math.floor((0.5 - r ** -0.25) * r)

    def ok(k):
        d = r - 2 * k
        return d >= 0 and d**4 >= 16 * r**3

    while not ok(k) and k > -r:
        k -= 1
    while ok(k + 1):
        k += 1
    return k


@dataclass(frozen=True)
class PublicKey:
    G: BitMatrix
    z: BitVector

    @property
    def n(self) -> int:
        return self.G.rows


@dataclass(frozen=True)
class SecretKey:
    P: SparseRowMatrix
    z: BitVector

    @property
    def n(self) -> int:
        return self.P.cols


@dataclass(frozen=True)
class KeyPair:
    pk: PublicKey
    sk: SecretKey
    params: PrcParams
    info: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Codeword:
    x: BitVector
    provenance: str = "fresh"

    @property
    def n(self) -> int:
        return self.x.length


@dataclass(frozen=True)
class EncodeTrace:
    """Encoder internals kept for test oracles; never written to disk."""

    s: BitVector
    e: BitVector


def sample_sparse_rows(rng: np.random.Generator, rows: int, universe, weight: int) -> np.ndarray:
    """(rows, weight) sorted index array, distinct within each row.

    ``universe`` is an int or a per-row array of range sizes.
    """
    hi = np.broadcast_to(np.asarray(universe, dtype=np.int64), (rows,))
    if weight > 0 and (hi < weight).any():
        raise InvalidParams("row weight exceeds the index range")
    out = np.zeros((rows, weight), dtype=np.int64)
    todo = np.arange(rows)
    while todo.size:
        draw = np.floor(rng.random((todo.size, weight)) * hi[todo, None]).astype(np.int64)
        draw.sort(axis=1)
        ok = (np.diff(draw, axis=1) > 0).all(axis=1) if weight > 1 else np.ones(todo.size, bool)
        out[todo[ok]] = draw[ok]
        todo = todo[~ok]
    return out


def _permute(G_bits: np.ndarray, supports: np.ndarray, rng: np.random.Generator):
    """Row permutation: new row perm[j] is old row j; P indices follow."""
    n = G_bits.shape[0]
    perm = rng.permutation(n)
    G_new = np.empty_like(G_bits)
    G_new[perm] = G_bits
    return G_new, np.sort(perm[supports], axis=1)


def _random_pad(n: int, rng: np.random.Generator) -> BitVector:
    return BitVector.from_bits(rng.integers(0, 2, size=n, dtype=np.uint8))


def _chain_keygen(params: PrcParams, seed, growing: bool) -> KeyPair:
    n, r, g, t = params.n, params.r, params.g, params.t
    base = n - r
    if t - 1 > base:
        raise InvalidParams(f"t-1={t - 1} exceeds n-r={base}")
    rng = make_rng(seed)
    G0 = rng.integers(0, 2, size=(base, g), dtype=np.uint8)
    if growing:
        # row i combines t-1 of the base+i rows fixed before it
        words = np.zeros((n, (g + 63) // 64), dtype=np.uint64)
        words[:base] = pack_bits(G0)
        combos = sample_sparse_rows(rng, r, base + np.arange(r), t - 1)
        for i in range(r):
            words[base + i] = np.bitwise_xor.reduce(words[combos[i]], axis=0)
        G_bits = unpack_bits(words, g)
    else:
        combos = sample_sparse_rows(rng, r, base, t - 1)
        gen = np.bitwise_xor.reduce(G0[combos], axis=1) if t > 1 else np.zeros((r, g), np.uint8)
        G_bits = np.vstack([G0, gen])
    supports = np.hstack([combos, (base + np.arange(r))[:, None]])
    G_bits, supports = _permute(G_bits, supports, rng)
    z = _random_pad(n, rng)
    pk = PublicKey(BitMatrix.from_bits(G_bits), z)
    sk = SecretKey(SparseRowMatrix.from_array(n, supports), z)
    return KeyPair(pk, sk, params)


def keygen_llm(params: PrcParams, seed=None) -> KeyPair:
    """Base rows G0 are uniform; each other row is the sum of t-1 base rows."""
    return _chain_keygen(params, seed, growing=False)


def keygen_gim(params: PrcParams, seed=None) -> KeyPair:
    """Like :func:`keygen_llm`, but row i may also reuse earlier generated rows."""
    return _chain_keygen(params, seed, growing=True)


def keygen_revised(
    params: PrcParams,
    seed=None,
    *,
    g_columns: str = "combine",
    require_full_rank: bool = False,
    max_resamples: int = 16,
) -> KeyPair:
    """Sample P with i.i.d. weight-t rows, then derive G from its nullspace.

    ``g_columns="combine"`` takes g uniform combinations of the nullspace
    basis; ``"select"`` picks g basis columns directly.  P is often rank
    deficient when r is close to n at small t; by default this is accepted
    and recorded in ``info["rank"]``.  With ``require_full_rank`` the key is
    resampled up to ``max_resamples`` times before raising.
    """
    if g_columns not in ("combine", "select"):
        raise ValueError("g_columns must be 'combine' or 'select'")
    n, r, g, t = params.n, params.r, params.g, params.t
    rng = make_rng(seed)
    for attempt in range(max_resamples if require_full_rank else 1):
        supports = sample_sparse_rows(rng, r, n, t)
        P = SparseRowMatrix.from_array(n, supports)
        N = nullspace_basis(P.to_dense())
        rank = n - N.cols
        if rank == r or not require_full_rank:
            break
    else:
        raise RankDeficientKey(f"P reached rank {rank} < r={r} after {max_resamples} samples")
    d = N.cols
    if g_columns == "select":
        if d < g:
            raise RankDeficientKey(f"nullspace dimension {d} < g={g}")
        G_bits = N.to_bits()[:, np.sort(rng.choice(d, size=g, replace=False))]
    else:
        C = rng.integers(0, 2, size=(d, g), dtype=np.uint8)
        G_bits = ((N.to_bits().astype(np.float64) @ C).astype(np.int64) & 1).astype(np.uint8)
    G_bits, supports = _permute(G_bits, supports, rng)
    z = _random_pad(n, rng)
    pk = PublicKey(BitMatrix.from_bits(G_bits), z)
    sk = SecretKey(SparseRowMatrix.from_array(n, supports), z)
    return KeyPair(pk, sk, params, {"rank": int(rank), "nullity": int(d), "attempts": attempt + 1})


KEYGENS = {Scheme.LLM: keygen_llm, Scheme.GIM: keygen_gim, Scheme.REVISED: keygen_revised}


def keygen(params: PrcParams, seed=None) -> KeyPair:
    return KEYGENS[params.scheme](params, seed)


def check_keypair(kp: KeyPair) -> bool:
    """PG = 0 and every P row has weight t."""
    P, G = kp.sk.P, kp.pk.G
    return bool((P.row_weights() == kp.params.t).all()) and sparse_mat_mul(P, G).is_zero()


def encode(pk: PublicKey, params: PrcParams, seed=None, omega: float | None = None) -> tuple[Codeword, EncodeTrace]:
    """x = Gs + e + z with s uniform and e i.i.d. Bernoulli(omega)."""
    X, S, E = encode_batch(pk, params, 1, seed, omega)
    s, e = BitVector.from_bits(S[0]), BitVector.from_bits(E[0])
    return Codeword(BitVector.from_bits(X[0])), EncodeTrace(s, e)


def encode_batch(pk: PublicKey, params: PrcParams, count: int, seed=None, omega: float | None = None):
    """Vectorised encoder; returns unpacked (X, S, E) arrays of shape (count, .)."""
    rng = make_rng(seed)
    w = params.omega if omega is None else omega
    G = pk.G.to_bits()
    S = rng.integers(0, 2, size=(count, G.shape[1]), dtype=np.uint8)
    E = (rng.random((count, G.shape[0])) < w).astype(np.uint8)
    GS = ((S.astype(np.float64) @ G.T.astype(np.float64)).astype(np.int64) & 1).astype(np.uint8)
    X = GS ^ E ^ pk.z.to_bits()[None, :]
    return X, S, E


def syndrome_weight(sk: SecretKey, x: Codeword | BitVector) -> int:
    v = x.x if isinstance(x, Codeword) else x
    if v.length != sk.n:
        raise ValueError(f"codeword length {v.length} != n={sk.n}")
    return int(sk.P.parities((v + sk.z).to_bits()).sum())


def syndrome_weights(sk: SecretKey, X: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Syndrome weights for a (count, n) array of unpacked codewords."""
    X = np.atleast_2d(np.asarray(X, dtype=np.uint8)) ^ sk.z.to_bits()[None, :]
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(0, X.shape[0], chunk):
        out[i : i + chunk] = sk.P.parities(X[i : i + chunk]).sum(axis=1)
    return out


def decode(sk: SecretKey, params: PrcParams, x: Codeword | BitVector) -> Verdict:
    ok = syndrome_weight(sk, x) <= decode_threshold(sk.P.rows)
    return Verdict.ACCEPT if ok else Verdict.REJECT


def decode_batch(sk: SecretKey, X: np.ndarray) -> np.ndarray:
    """Boolean ACCEPT mask for a (count, n) array of codewords."""
    return syndrome_weights(sk, X) <= decode_threshold(sk.P.rows)


def bernoulli_channel(x: Codeword, rate: float, seed=None) -> Codeword:
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    rng = make_rng(seed)
    flips = (rng.random(x.n) < rate).astype(np.uint8)
    return Codeword(x.x + BitVector.from_bits(flips), "channel-noised")


def uniform_codewords(n: int, count: int, seed=None) -> np.ndarray:
    return make_rng(seed).integers(0, 2, size=(count, n), dtype=np.uint8)


def rows_to_codewords(X: np.ndarray, provenance: str = "fresh") -> list[Codeword]:
    return [Codeword(BitVector.from_bits(row), provenance) for row in np.atleast_2d(X)]


def codewords_to_rows(cws) -> np.ndarray:
    return np.stack([(c.x if isinstance(c, Codeword) else c).to_bits() for c in cws])

