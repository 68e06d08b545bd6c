"""Mixed unconditional constants of the monomial basis, their region
predictions, the A*B bridge bound and a Monte Carlo check of Bayart's
L1 inequality on the torus.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    EPS,
    EXACT,
    UNKNOWN,
    A_upper_cert_crude,
    B_upper_cert,
    RegionVerdict,
    _le,
    inverse,
)
from .construct import best_of_unimodular, derived_seed, ones_poly
from .polycore import HomPoly, coeff_norm, eval_batch, parse_extended
from .supnorm import DEFAULT_OPTIONS, AscentOptions, estimate

EPSILON = "epsilon"
# the 2^m gap between the monomial basis and the best basis
BASIS_FACTOR_NOTE = "monomial-basis chi is within a factor 2^m of the optimal-basis chi"
FULL_FLIP_LIMIT = 6


@dataclass(frozen=True)
class ChiEstimate:
    m: int
    n: int
    p: float
    q: float
    certified_lower: float
    empirical: float
    predicted_exponent: float | None
    prediction_status: str
    bridge_upper: float | None = None

    def to_record(self) -> dict:
        def ext(x):
            return "inf" if math.isinf(x) else x
        return {"m": self.m, "n": self.n, "p": ext(self.p), "q": ext(self.q),
                "chi_lower": self.certified_lower, "chi_empirical": self.empirical,
                "bridge_upper": self.bridge_upper, "predicted_exp": self.predicted_exponent,
                "status": self.prediction_status}

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def flip(P: HomPoly, theta) -> HomPoly:
    """Multiply coefficient k of P (colex order) by theta[k]."""
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (P.nterms,):
        raise ValueError(f"need {P.nterms} flip factors, got shape {theta.shape}")
    return P.with_coeffs(P.coeffs * theta)


def aligning_flip(P: HomPoly) -> np.ndarray:
    """Unimodular factors turning every coefficient into its modulus."""
    c = P.coeffs
    absc = np.abs(c)
    return np.where(absc > 0, np.conj(c) / np.where(absc > 0, absc, 1.0), 1.0)


def sign_flips(k: int, trials: int, seed: int, full_limit: int = FULL_FLIP_LIMIT) -> np.ndarray:
    """Identity plus either all 2^k sign vectors (k <= full_limit) or ``trials`` random ones."""
    if k <= full_limit:
        return np.array(list(itertools.product((1.0, -1.0), repeat=k))).reshape(-1, k)
    rng = np.random.default_rng(seed)
    rand = rng.choice(np.array([-1.0, 1.0]), size=(trials, k))
    return np.vstack([np.ones((1, k)), rand])


def numerator_max(P: HomPoly, q, flips, opts: AscentOptions = DEFAULT_OPTIONS) -> float:
    """max over the flip set of the attained l_q sup-norm value of theta*P."""
    best = 0.0
    for theta in flips:
        best = max(best, estimate(flip(P, theta), q, opts).lower)
    return best


def _chi_regions(m: int, x: float, y: float) -> dict[str, tuple[float, str]]:
    out: dict[str, tuple[float, str]] = {}
    line = 1 - 1 / m + x / m
    if (_le(x + (m - 1) / (2 * m), y) and _le(x, 0.5)) or (_le(line, y) and _le(0.5, x)):
        out["I"] = (0.0, EXACT)
    if _le(y, x + (m - 1) / (2 * m)) and _le(x, 0.5):
        out["II"] = (m * (x - y + 0.5) - 0.5, EXACT)
    third = (m - 1) * (1 - y) + x - y
    if _le(y, x) and _le(0.5, x):
        out["III"] = (third, EXACT)
    if _le(y, line) and _le(x, y) and 0.5 < x < 1:
        out["III'"] = (third, EPSILON)
    return out


def classify_region_chi(m: int, inv_p: float, inv_q: float) -> RegionVerdict:
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (-EPS <= inv_p <= 1 + EPS and -EPS <= inv_q <= 1 + EPS):
        raise ValueError("coordinates must lie in [0, 1]")
    regions = _chi_regions(m, inv_p, inv_q)
    if not regions:
        return RegionVerdict(("UNKNOWN",), None, UNKNOWN, {})
    rank = {EXACT: 0, EPSILON: 1}
    best = min(regions, key=lambda k: rank[regions[k][1]])
    return RegionVerdict(tuple(regions), regions[best][0], regions[best][1], regions)


def predicted_chi_exponent(m: int, inv_p: float, inv_q: float) -> tuple[float | None, str]:
    v = classify_region_chi(m, inv_p, inv_q)
    return v.exponent, v.status


def bridge_grid(p, q, points: int = 21) -> list[float]:
    """Values of r for the bridge: 1/r on a uniform grid plus 1/p' and 1/q'."""
    inv = set(np.linspace(0.0, 1.0, points).tolist())
    inv.add(1.0 - inverse(p))
    inv.add(1.0 - inverse(q))
    return [math.inf if t == 0 else 1.0 / t for t in sorted(inv)]


def chi_upper_bridge(m: int, n: int, p, q, points: int = 21) -> float:
    """min over r of B_upper_cert(r, q) * A_upper_cert_crude(p, r)."""
    p, q = parse_extended(p), parse_extended(q)
    return min(B_upper_cert(m, n, q, r) * A_upper_cert_crude(m, n, p, r) for r in bridge_grid(p, q, points))


def chi_witnesses(m: int, n: int, p, seed: int, rounds: int,
                  opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> list[HomPoly]:
    """A low-norm unimodular polynomial (whose aligned flip is the all-ones one) and the ones polynomial."""
    return [best_of_unimodular(m, n, p, seed, rounds, opts, cap), ones_poly(m, n, cap)]


def chi_lower(m: int, n: int, p, q, seed: int = 0, trials: int = 8, rounds: int = 16,
              opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None,
              full_limit: int = FULL_FLIP_LIMIT) -> ChiEstimate:
    """Lower estimates of chi_{p,q} from sign flips of witness polynomials.

    certified = max ||theta P||_q (attained) / upper bound of ||P||_p;
    empirical uses the attained value in the denominator as well.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p, q = parse_extended(p), parse_extended(q)
    cert = emp = 0.0
    for w, P in enumerate(chi_witnesses(m, n, p, seed, rounds, opts, cap)):
        den = estimate(P, p, opts)
        if den.upper == 0 or den.lower == 0:
            continue
        flips = sign_flips(P.nterms, trials, derived_seed(seed, w + 1), full_limit)
        flips = np.vstack([flips, aligning_flip(P)[None, :]])
        # theta = 1 must be a candidate so the ratio never drops below ||P||_q / ||P||_p
        assert np.all(flips[0] == 1)
        num = numerator_max(P, q, flips, opts)
        cert = max(cert, num / den.upper)
        emp = max(emp, num / den.lower)
    if emp == 0:
        raise ZeroDivisionError("every witness polynomial has zero sup-norm")
    exp, status = predicted_chi_exponent(m, inverse(p), inverse(q))
    return ChiEstimate(m, n, p, q, cert, emp, exp, status, chi_upper_bridge(m, n, p, q))


@dataclass(frozen=True)
class TorusSample:
    samples: int
    mean: float
    stderr: float


def torus_mean_abs(P: HomPoly, samples: int, seed: int, chunk: int = 8192) -> TorusSample:
    """Monte Carlo mean of |P(w)| for i.i.d. uniform w on the torus, with standard error.

    Chunks have fixed size and their own seeds; partial moments merge in chunk order.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    children = np.random.SeedSequence(seed).spawn(-(-samples // chunk))
    count, mean, m2 = 0, 0.0, 0.0
    for i, child in enumerate(children):
        size = min(chunk, samples - i * chunk)
        rng = np.random.default_rng(child)
        W = np.exp(2j * np.pi * rng.random((size, P.n)))
        v = np.abs(eval_batch(P, W))
        cm = float(v.mean())
        cm2 = float(np.sum((v - cm) ** 2))
        delta = cm - mean
        tot = count + size
        mean += delta * size / tot
        m2 += cm2 + delta * delta * count * size / tot
        count = tot
    std = math.sqrt(m2 / (count - 1))
    return TorusSample(count, mean, std / math.sqrt(count))


def bayart_check(P: HomPoly, samples: int = 100_000, seed: int = 0) -> tuple[TorusSample, bool]:
    """Check (sum_j |c_j|^2)^(1/2) <= 2^(m/2) * (mean |P| + 3 stderr) on the torus."""
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    ts = torus_mean_abs(P, samples, seed)
    # each index tuple j carries the coefficient of its multi-index, once
    left = coeff_norm(P, 2.0)
    return ts, bool(left <= 2 ** (P.m / 2) * (ts.mean + 3 * ts.stderr))


__all__ = [
    "ChiEstimate", "TorusSample", "flip", "aligning_flip", "sign_flips", "numerator_max",
    "classify_region_chi", "predicted_chi_exponent", "bridge_grid", "chi_upper_bridge",
    "chi_witnesses", "chi_lower", "torus_mean_abs", "bayart_check", "BASIS_FACTOR_NOTE",
]
