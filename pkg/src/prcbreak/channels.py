"""Bit-channel simulations for the two watermark carriers.

Text: each codeword bit steers one sampled token bit whose model marginal is
p'.  The draw is Ber(2 p' x) when p' <= 1/2 and Ber(1 - 2 (1-p')(1-x))
otherwise, so a uniform x leaves the marginal at p' while a flat p' = 1/2
copies x through unchanged.  Per-bit marginals come from a Beta(k, k) model:
large k means high entropy.

Image: the codeword sets the signs of a Gaussian latent, inversion adds
Gaussian error, and erf maps the recovered latent to soft bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize, special

from .gf2 import BitVector
from .rng import make_rng


def _bits(x) -> np.ndarray:
    if isinstance(x, BitVector):
        return x.to_bits()
    return np.asarray(x, dtype=np.uint8)


# text channel

@dataclass
class SyntheticTokenModel:
    """Stand-in language model: i.i.d. per-bit marginals p' ~ Beta(kappa, kappa).

    ``kappa = inf`` gives p' = 1/2 everywhere (a noiseless channel).
    """

    vocab_bits: int = 16
    kappa: float = math.inf
    seed: object = None

    def __post_init__(self):
        if self.vocab_bits < 1:
            raise ValueError("vocab_bits must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        self._rng = make_rng(self.seed)

    def marginals(self, count: int) -> np.ndarray:
        if math.isinf(self.kappa):
            return np.full(count, 0.5)
        return self._rng.beta(self.kappa, self.kappa, size=count)

    @property
    def expected_flip_rate(self) -> float:
        return flip_rate_for_kappa(self.kappa)


def flip_rate_for_kappa(kappa: float) -> float:
    """E|p' - 1/2| for p' ~ Beta(kappa, kappa): the chance a uniform bit is overwritten."""
    if math.isinf(kappa):
        return 0.0
    dist = lambda p: abs(p - 0.5) * math.exp((kappa - 1) * math.log(p * (1 - p)) - special.betaln(kappa, kappa))
    lo, _ = integrate.quad(dist, 0, 0.5, limit=200)
    return 2 * lo


def kappa_for_flip_rate(q: float) -> float:
    """Invert :func:`flip_rate_for_kappa`; q must lie in (0, 1/4) (k = 1 gives 1/4)."""
    if not 0 < q < 0.25:
        raise ValueError("flip rate must lie in (0, 1/4) for kappa >= 1")
    return optimize.brentq(lambda k: flip_rate_for_kappa(k) - q, 1.0, 1e8, xtol=1e-10)


def sample_token_bits(p_prime, codeword_bits, seed=None) -> BitVector:
    """One sampled bit per codeword bit under the two-branch rule."""
    p = np.asarray(p_prime, dtype=np.float64)
    x = _bits(codeword_bits)
    if p.shape != x.shape:
        raise ValueError(f"{p.size} marginals for {x.size} codeword bits")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("marginals must lie in [0, 1]")
    prob = np.where(p <= 0.5, 2 * p * x, 1 - 2 * (1 - p) * (1 - x))
    u = make_rng(seed).random(x.size)
    return BitVector.from_bits((u < prob).astype(np.uint8))


def bits_to_tokens(bits, vocab_bits: int) -> np.ndarray:
    """Group a bit stream into token ids, most significant bit first."""
    b = _bits(bits)
    if b.size % vocab_bits:
        raise ValueError(f"{b.size} bits do not split into {vocab_bits}-bit tokens")
    weights = 1 << np.arange(vocab_bits - 1, -1, -1, dtype=np.int64)
    return b.reshape(-1, vocab_bits).astype(np.int64) @ weights


def tokens_to_bits(tokens, vocab_bits: int) -> np.ndarray:
    t = np.asarray(tokens, dtype=np.int64)
    if np.any((t < 0) | (t >= 1 << vocab_bits)):
        raise ValueError(f"token id outside a {vocab_bits}-bit vocabulary")
    shifts = np.arange(vocab_bits - 1, -1, -1, dtype=np.int64)
    return ((t[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def extract_bits(token_bits, vocab_bits: int = 1) -> BitVector:
    """Recovered codeword: the token bit stream itself, checked for whole tokens."""
    b = _bits(token_bits)
    if b.size % vocab_bits:
        raise ValueError(f"{b.size} bits do not split into {vocab_bits}-bit tokens")
    return BitVector.from_bits(b)


@dataclass
class LlmTranscript:
    p_prime: list
    embedded: list
    sampled: list
    vocab_bits: int

    @property
    def flip_rate(self) -> float:
        e, s = np.asarray(self.embedded), np.asarray(self.sampled)
        return float((e != s).mean()) if e.size else 0.0

    def tokens(self) -> list[int]:
        return bits_to_tokens(self.sampled, self.vocab_bits).tolist()

    def to_json(self) -> str:
        rows = [{"p_prime": p, "embedded": e, "sampled": s} for p, e, s in zip(self.p_prime, self.embedded, self.sampled)]
        return json.dumps({"vocab_bits": self.vocab_bits, "positions": rows})

    @classmethod
    def from_json(cls, text: str) -> "LlmTranscript":
        d = json.loads(text)
        pos = d["positions"]
        return cls([r["p_prime"] for r in pos], [r["embedded"] for r in pos], [r["sampled"] for r in pos], d["vocab_bits"])


def llm_channel(codeword_bits, model: SyntheticTokenModel, seed=None) -> LlmTranscript:
    """Embed a codeword token by token; the codeword is zero-padded to whole tokens."""
    x = _bits(codeword_bits)
    pad = -x.size % model.vocab_bits
    x = np.concatenate([x, np.zeros(pad, dtype=np.uint8)])
    p = model.marginals(x.size)
    y = sample_token_bits(p, x, seed).to_bits()
    return LlmTranscript(p.tolist(), x.tolist(), y.tolist(), model.vocab_bits)


# image channel

@dataclass(frozen=True)
class GimChannelParams:
    sigma: float = 1.0
    inversion_noise_std: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.inversion_noise_std >= 0:
            raise ValueError("inversion_noise_std must be non-negative")


@dataclass
class GimRecovery:
    soft: np.ndarray
    bits: BitVector
    flip_rate: float | None = None


def embed_gim_latent(codeword_bits, seed=None) -> np.ndarray:
    """(1 - 2 x_i) |y_i| with y ~ N(0, I): positive sign iff x_i = 0."""
    x = _bits(codeword_bits).astype(np.float64)
    y = make_rng(seed).standard_normal(x.size)
    return (1 - 2 * x) * np.abs(y)


def add_inversion_noise(latent: np.ndarray, std: float, seed=None) -> np.ndarray:
    if std < 0:
        raise ValueError("std must be non-negative")
    if std == 0:
        return np.array(latent, dtype=np.float64)
    return latent + std * make_rng(seed).standard_normal(np.shape(latent))


def recover_gim_codeword(latent, params: GimChannelParams, embedded=None) -> GimRecovery:
    """Soft bits erf(y / sqrt(2 s^2 (1 + s^2))) and hard bits (soft >= 0 means 0)."""
    y = np.asarray(latent, dtype=np.float64)
    s2 = params.sigma**2
    soft = special.erf(y / math.sqrt(2 * s2 * (1 + s2)))
    bits = BitVector.from_bits((soft < 0).astype(np.uint8))
    rate = None
    if embedded is not None:
        rate = float((_bits(embedded) != bits.to_bits()).mean())
    return GimRecovery(soft, bits, rate)


def gim_flip_probability(noise_std: float) -> float:
    """Sign-flip chance of a half-normal magnitude under N(0, s^2) error: arctan(s)/pi.

    The flip happens when s Z exceeds |Y|, and Z/|Y| is standard Cauchy.
    """
    return math.atan(noise_std) / math.pi


def noise_std_for_flip_rate(q: float) -> float:
    if not 0 <= q < 0.5:
        raise ValueError("flip rate must lie in [0, 1/2)")
    return math.tan(math.pi * q)


def gim_channel(codeword_bits, params: GimChannelParams, seed=None) -> GimRecovery:
    """Embed, perturb and recover; the flip rate is measured against the input."""
    embed_rng, noise_rng = make_rng(seed).spawn(2)
    latent = embed_gim_latent(codeword_bits, embed_rng)
    noisy = add_inversion_noise(latent, params.inversion_noise_std, noise_rng)
    return recover_gim_codeword(noisy, params, codeword_bits)


def simulate(channel: str, n: int, seed=None, *, kappa: float = math.inf, vocab_bits: int = 16,
             sigma: float = 1.0, noise_std: float = 0.0) -> dict:
    """Push a uniform codeword through one channel and summarise the damage."""
    rng = make_rng(seed)
    x = rng.integers(0, 2, size=n, dtype=np.uint8)
    if channel == "llm":
        tr = llm_channel(x, SyntheticTokenModel(vocab_bits, kappa, rng), rng)
        return {"channel": "llm", "n": n, "kappa": kappa, "vocab_bits": vocab_bits,
                "flip_rate": tr.flip_rate, "expected_flip_rate": flip_rate_for_kappa(kappa)}
    if channel == "gim":
        rec = gim_channel(x, GimChannelParams(sigma, noise_std), rng)
        return {"channel": "gim", "n": n, "sigma": sigma, "inversion_noise_std": noise_std,
                "flip_rate": rec.flip_rate, "expected_flip_rate": gim_flip_probability(noise_std)}
    raise ValueError("channel must be 'llm' or 'gim'")


def transcript_dict(rec: GimRecovery) -> dict:
    d = asdict(rec)
    d["soft"] = rec.soft.tolist()
    d["bits"] = rec.bits.to_bits().tolist()
    return d
