"""Closed-form parameter derivation and attack cost estimates.

All costs are returned as log2 values.  Constant factors hidden in the
asymptotic bounds are taken as 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .scheme import MESSAGE_BITS, PARITY_BITS, Scheme, gim_eta, log2_comb, security_lambda

LLM_T_RANGE = (3, 14)
GIM_T_RANGE = (3, 7)
LLM_N = 2**17
GIM_N = 2**14
# longest feasible codes: 2^15 tokens x 32 bits for text, a 4x128x128 latent for images
MAX_FEASIBLE_N = {Scheme.LLM: 2**20, Scheme.GIM: 2**16}


@dataclass(frozen=True)
class DerivedParams:
    scheme: Scheme
    n: int
    t: int
    r: int
    g: int
    lam: int
    k: int
    message_bit: int = 0
    parity_bit: int = 0
    eta: float | None = None


def derive_params(scheme, n: int, t: int) -> DerivedParams:
    scheme = Scheme(scheme)
    lam = security_lambda(n, t)
    if scheme is Scheme.GIM:
        k = lam + MESSAGE_BITS + PARITY_BITS
        return DerivedParams(scheme, n, t, n - k - lam, lam, lam, k, MESSAGE_BITS, PARITY_BITS, gim_eta(lam, lam))
    return DerivedParams(scheme, n, t, math.floor(0.99 * n), lam, lam, lam)


def decodable_weight_bound(r: int, epsilon: float) -> float:
    """Real upper bound on t for reliable decoding: (log2(r)/4 - 1) / log2(1/(2 eps))."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    return (0.25 * math.log2(r) - 1) / -math.log2(2 * epsilon)


def max_decodable_weight(r: int, epsilon: float, cap: int = 10**6) -> int:
    """Largest integer t strictly below :func:`decodable_weight_bound`, capped at ``cap``."""
    if epsilon >= 0.5:
        raise ValueError("epsilon must be below 1/2")
    b = decodable_weight_bound(r, epsilon)
    if not math.isfinite(b) or b > cap:
        return cap
    return max(math.ceil(b) - 1, 0)


def epsilon_for_t(r: int, t: int) -> float:
    return 0.5 * 2.0 ** (-(0.25 * math.log2(r) - 1) / t)


def _log2_q(n: int, t: int) -> float:
    t1 = (t + 1) // 2
    h1 = (n + 1) // 2
    return log2_comb(h1, t1) + log2_comb(n - h1, t - t1) - log2_comb(n, t)


def log2_alpha(n: int, r: int, t: int) -> float:
    """Subset fraction of the larger half-list that balances the collision search."""
    t1 = (t + 1) // 2
    lq = _log2_q(n, t)
    if t % 2 == 0:
        return -0.5 * (lq + math.log2(r))
    return 0.5 * (math.log2(t1) - lq - math.log2(r) - math.log2(n / 2 - t1))


def _factor(d: DerivedParams) -> int:
    # the GIM generator carries k columns, so row sums and key scans cost k per row
    return d.k if d.scheme is Scheme.GIM else d.g


def log2_t_partial(d: DerivedParams) -> float:
    t1 = (d.t + 1) // 2
    return math.log2(_factor(d)) + log2_alpha(d.n, d.r, d.t) + log2_comb((d.n + 1) // 2, t1)


def _log_prod_one_minus(x: np.ndarray) -> float:
    return math.fsum(np.log1p(-x).tolist()) if x.size else 0.0


def log_p_distinct_llm(N: float, r: int) -> float:
    """ln prod_{i<r} (1 - i/N)."""
    if r > N:
        return -math.inf
    if r <= 4_000_000:
        return _log_prod_one_minus(np.arange(r, dtype=np.float64) / N)
    if r / N < 0.01:
        # -(S1/N + S2/(2N^2) + S3/(3N^3)) with exact power sums of i < r
        m = r - 1
        s1 = m * (m + 1) / 2
        s2 = m * (m + 1) * (2 * m + 1) / 6
        return -(s1 / N + s2 / (2 * N**2) + s1**2 / (3 * N**3))
    return math.lgamma(N + 1) - math.lgamma(N - r + 1) - r * math.log(N)


def weak_key_prob_llm(n: int, r: int, t: int) -> float:
    if t - 1 > n - r:
        raise ValueError("t-1 exceeds n-r")
    lp = log_p_distinct_llm(float(math.comb(n - r, t - 1)), r)
    return -math.expm1(lp)


def log2_weak_key_prob_llm(n: int, r: int, t: int) -> float:
    lp = log_p_distinct_llm(float(math.comb(n - r, t - 1)), r)
    return _log2_one_minus_exp(lp)


def _log2_one_minus_exp(lp: float) -> float:
    if lp == -math.inf:
        return 0.0
    if lp == 0.0:
        return -math.inf
    return math.log2(-math.expm1(lp))


def _log_p_distinct_gim(n: int, r: int, t: int) -> float:
    i = np.arange(1, r + 1, dtype=np.float64)
    m = n - r + i - 1
    # C(m, t-1) as a falling factorial over (t-1)!
    denom = np.ones_like(m)
    for j in range(t - 1):
        denom *= (m - j) / (j + 1)
    x = (i - 1) / denom
    if (x >= 1).any():
        return -math.inf
    return _log_prod_one_minus(x)


def weak_key_prob_gim(n: int, r: int, t: int) -> float:
    if t - 1 > n - r:
        raise ValueError("t-1 exceeds n-r")
    return -math.expm1(_log_p_distinct_gim(n, r, t))


def log2_weak_key_prob_gim(n: int, r: int, t: int) -> float:
    return _log2_one_minus_exp(_log_p_distinct_gim(n, r, t))


def log2_p_weak(d: DerivedParams) -> float:
    if d.scheme is Scheme.GIM:
        return log2_weak_key_prob_gim(d.n, d.r, d.t)
    return log2_weak_key_prob_llm(d.n, d.r, d.t)


def log2_t_dis(d: DerivedParams) -> float:
    return math.log2(d.n) + math.log2(_factor(d)) - log2_p_weak(d)


def log2_t_overlay(d: DerivedParams) -> tuple[float, float | None]:
    """Noise-recovery cost at rate 1/2 - eps, plus the concrete-rate variant for GIM."""
    eps = epsilon_for_t(d.r, d.t)
    n3 = 3 * math.log2(d.n)
    theoretical = -_factor(d) * math.log2(0.5 + eps) + n3
    concrete = d.k / d.g + n3 if d.scheme is Scheme.GIM else None
    return theoretical, concrete


@dataclass(frozen=True)
class ComplexityRow:
    t: int
    epsilon: float
    rho: float
    eta: float | None
    log2_t_partial: float
    log2_p_weak: float
    log2_t_dis: float
    log2_t_overlay: float
    log2_t_overlay_concrete: float | None
    lam: int

    def as_dict(self) -> dict:
        return asdict(self)


def complexity_row(scheme, n: int, t: int) -> ComplexityRow:
    d = derive_params(scheme, n, t)
    if d.r <= 0:
        raise ValueError(f"n={n} leaves no room for r at t={t}")
    eps = epsilon_for_t(d.r, t)
    over, concrete = log2_t_overlay(d)
    return ComplexityRow(
        t=t,
        epsilon=eps,
        rho=0.5 - eps,
        eta=d.eta,
        log2_t_partial=log2_t_partial(d),
        log2_p_weak=log2_p_weak(d),
        log2_t_dis=log2_t_dis(d),
        log2_t_overlay=over,
        log2_t_overlay_concrete=concrete,
        lam=d.lam,
    )


def emit_table(scheme, t_range: tuple[int, int] | None = None, n: int | None = None) -> list[ComplexityRow]:
    """Rows for t in the inclusive range; defaults to the standard table layout."""
    scheme = Scheme(scheme)
    if scheme is Scheme.REVISED:
        raise ValueError("no table layout for the revised scheme")
    lo_ok, hi_ok = LLM_T_RANGE if scheme is Scheme.LLM else GIM_T_RANGE
    lo, hi = t_range or (lo_ok, hi_ok)
    if lo > hi or lo < lo_ok or hi > hi_ok:
        raise ValueError(f"t range {lo}..{hi} outside {lo_ok}..{hi_ok}")
    n = n or (LLM_N if scheme is Scheme.LLM else GIM_N)
    return [complexity_row(scheme, n, t) for t in range(lo, hi + 1)]


@dataclass
class Advisory:
    scheme: str
    target_bits: float
    exponent_range: tuple[int, int]
    per_t: list[dict] = field(default_factory=list)
    overlay_min_exponent: int | None = None
    overlay_max_at_previous: float | None = None
    max_feasible_exponent: int = 0
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def _first_exponent(metric, exps, target) -> int | None:
    for e in exps:
        v = metric(e)
        if v is not None and v >= target:
            return e
    return None


def advise_parameters(
    scheme,
    target_bits: float,
    t_values=(3, 7, 9, 11, 13, 15),
    exponent_range: tuple[int, int] = (10, 48),
    overlay_t_range: tuple[int, int] = (3, 64),
) -> Advisory:
    """Smallest power-of-two code length that lifts each attack above the target.

    For a metric first reaching the target at n = 2^e on the grid, the
    suggestion is reported as ``n > 2^(e-1)``.
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.REVISED:
        scheme = Scheme.LLM
    if target_bits > 256:
        raise ValueError("target above 256 bits")
    exps = range(exponent_range[0], exponent_range[1] + 1)
    adv = Advisory(scheme.value, target_bits, exponent_range)

    def derived(e, t):
        d = derive_params(scheme, 2**e, t)
        return d if d.r > t else None

    def partial(e, t):
        d = derived(e, t)
        return None if d is None else log2_t_partial(d)

    def overlay(e, t):
        d = derived(e, t)
        return None if d is None else log2_t_overlay(d)[0]

    def best_overlay(e):
        vals = [overlay(e, t) for t in range(overlay_t_range[0], overlay_t_range[1] + 1)]
        vals = [v for v in vals if v is not None]
        return max(vals) if vals else None

    for t in t_values:
        e_p = _first_exponent(lambda e: partial(e, t), exps, target_bits)
        e_o = _first_exponent(lambda e: overlay(e, t), exps, target_bits)
        both = None if e_p is None or e_o is None else max(e_p, e_o)
        adv.per_t.append(
            {
                "t": t,
                "partial_exponent": e_p,
                "overlay_exponent": e_o,
                "combined_exponent": both,
                "suggestion": None if both is None else f"n > 2^{both - 1}",
                "partial_suggestion": None if e_p is None else f"n > 2^{e_p - 1}",
            }
        )
    adv.overlay_min_exponent = _first_exponent(best_overlay, exps, target_bits)
    if adv.overlay_min_exponent is not None and adv.overlay_min_exponent > exps.start:
        adv.overlay_max_at_previous = best_overlay(adv.overlay_min_exponent - 1)
    adv.max_feasible_exponent = int(math.log2(MAX_FEASIBLE_N[scheme]))
    needed = [p["combined_exponent"] for p in adv.per_t if p["combined_exponent"] is not None]
    if adv.overlay_min_exponent is not None:
        needed.append(adv.overlay_min_exponent)
    if needed and min(needed) - 1 >= adv.max_feasible_exponent:
        adv.notes.append(
            f"target needs n > 2^{min(needed) - 1} but the largest feasible code length is "
            f"2^{adv.max_feasible_exponent}"
        )
    adv.notes.append("t=3 is the common default; t=log2(n)/2 is the suggested alternative")
    return adv


def minimal_configured_n(scheme) -> int:
    return 2 ** advise_parameters(scheme, 0, t_values=(3,)).per_t[0]["combined_exponent"]
