"""Two-sided estimates of the sup-norm of a homogeneous polynomial on the l_p ball.

Lower bounds come from a multi-start ascent whose iterates always lie on the
unit sphere of l_p (on the torus for p = inf), so the value at the returned
witness is attained.  Upper bounds come from closed-form certificates that
hold for every polynomial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .polycore import (
    HomPoly,
    coeff_norm,
    conjugate_exponent,
    evaluate,
    format_extended,
    parse_extended,
)


@dataclass(frozen=True)
class AscentOptions:
    starts: int = 64
    max_iters: int = 500
    step_tol: float = 1e-12
    value_tol: float = 1e-10
    seed: int = 0
    # line-search candidates are 1, 1/2, ..., 2**-line_search
    line_search: int = 10

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (self.step_tol > 0 and self.value_tol > 0):
            raise ValueError("tolerances must be positive")


DEFAULT_OPTIONS = AscentOptions()


@dataclass(frozen=True)
class NormEstimate:
    lower: float
    upper: float
    p: float
    witness: np.ndarray | None
    methods: tuple[str, ...] = field(default_factory=tuple)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def to_record(self) -> dict:
        wit = None
        if self.witness is not None:
            wit = [x for c in self.witness for x in (float(c.real), float(c.imag))]
        p = "inf" if math.isinf(self.p) else self.p
        return {"lower": self.lower, "upper": self.upper, "p": p,
                "method": list(self.methods), "witness": wit}

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def _check_p(p) -> float:
    p = parse_extended(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"sup-norm exponent p must lie in [1, inf], got {p}")
    return p


def lp_norm_rows(Z: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(Z)
    if math.isinf(p):
        return a.max(axis=1)
    top = a.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    return top * np.sum((a / safe[:, None]) ** p, axis=1) ** (1.0 / p)


def monomial_sup(alpha, p) -> float:
    """sup of |z^alpha| over the unit ball of l_p^n."""
    p = _check_p(p)
    m = sum(alpha)
    if m < 1:
        raise ValueError("monomial degree must be >= 1")
    if math.isinf(p):
        return 1.0
    out = 1.0
    for a in alpha:
        if a:
            out *= (a / m) ** (a / p)
    return out


def _monomial_maximizer(alpha, p: float) -> np.ndarray:
    m = sum(alpha)
    if math.isinf(p):
        return np.ones(len(alpha), dtype=complex)
    return np.array([(a / m) ** (1.0 / p) for a in alpha], dtype=complex)


def supnorm_exact_spread(m: int, n: int, p) -> float:
    """Exact sup-norm on l_p^n of the spread polynomial with k = n // m blocks."""
    p = _check_p(p)
    k = n // m
    if m < 1 or k < 1:
        raise ValueError(f"need n >= m >= 1, got m={m}, n={n}")
    if p < m:
        raise ValueError(f"closed form needs p >= m, got p={p}, m={m}")
    if math.isinf(p):
        return float(k)
    return k * (1.0 / (m * k)) ** (m / p)


def supnorm_upper_cert(P: HomPoly, p) -> tuple[float, str]:
    """Smallest of the Hoelder bound |P|_{p'} and the per-monomial bound."""
    p = _check_p(p)
    if P.is_zero():
        return 0.0, "zero"
    holder = coeff_norm(P, conjugate_exponent(p))
    absc = np.abs(P.coeffs)
    if math.isinf(p):
        mono = float(absc.sum())
    else:
        sups = np.array([monomial_sup(a, p) for a in P.alphas])
        mono = float(np.sum(absc * sups))
    if mono < holder:
        return mono, "monomial-sum"
    return holder, "holder"


class _Evaluator:
    """Batched evaluation of P and its holomorphic gradient."""

    def __init__(self, P: HomPoly):
        self.m, self.n, self.K = P.m, P.n, P.nterms
        self.J = P.index_tuples
        self.a = P.coeffs
        rows = np.arange(self.m * self.K)
        cols = self.J.T.reshape(-1)
        scatter = sp.csr_matrix(
            (np.ones(self.m * self.K), (rows, cols)), shape=(self.m * self.K, self.n)
        )
        self.scatterT = scatter.T.tocsr()

    def value(self, Z: np.ndarray) -> np.ndarray:
        mon = np.ones((Z.shape[0], self.K), dtype=complex)
        for slot in range(self.m):
            mon *= Z[:, self.J[:, slot]]
        return (mon * self.a).sum(axis=1)

    def value_grad(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        S = Z.shape[0]
        gathered = [Z[:, self.J[:, s]] for s in range(self.m)]
        prefix = [np.ones((S, self.K), dtype=complex)]
        for g in gathered:
            prefix.append(prefix[-1] * g)
        suffix = np.ones((S, self.K), dtype=complex)
        parts = [None] * self.m
        for s in range(self.m - 1, -1, -1):
            parts[s] = prefix[s] * suffix * self.a
            suffix = suffix * gathered[s]
        val = (prefix[-1] * self.a).sum(axis=1)
        X = np.concatenate(parts, axis=1)
        grad = np.asarray(self.scatterT @ X.T).T
        return val, grad


def _dual_point(w: np.ndarray, p: float) -> np.ndarray:
    """Rowwise maximiser of Re <w, s> over the unit l_p ball."""
    S, n = w.shape
    a = np.abs(w)
    phase = np.where(a > 0, np.conj(w) / np.where(a > 0, a, 1.0), 1.0)
    if p == 1:
        out = np.zeros_like(w)
        j = np.argmax(a, axis=1)
        out[np.arange(S), j] = phase[np.arange(S), j]
        return out
    q = conjugate_exponent(p)
    top = a.max(axis=1, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    mod = (a / safe) ** (q - 1.0)
    dead = (top[:, 0] == 0)
    mod[dead] = 1.0
    s = phase * mod
    return s / lp_norm_rows(s, p)[:, None]


def _initial_points(P: HomPoly, p: float, opts: AscentOptions, nonneg_real: bool) -> np.ndarray:
    n = P.n
    Z = np.zeros((opts.starts, n), dtype=complex)
    for i in range(opts.starts):
        if i == 0:
            z = np.ones(n, dtype=complex)
        elif i == 1 and P.nterms:
            # maximiser of the heaviest single-term bound, phase-aligned
            absc = np.abs(P.coeffs)
            weights = absc * np.array([monomial_sup(a, p) for a in P.alphas])
            k = int(np.argmax(weights))
            alpha = P.alphas[k]
            z = _monomial_maximizer(alpha, p)
            if not nonneg_real:
                first = next(j for j, e in enumerate(alpha) if e)
                z[first] *= np.exp(-1j * np.angle(P.coeffs[k]) / alpha[first])
            if math.isinf(p):
                z = np.where(np.abs(z) > 0, z, 1.0)
        else:
            rng = np.random.default_rng(opts.seed ^ i)
            t = rng.exponential(size=n)
            t /= t.sum()
            theta = np.zeros(n) if nonneg_real else rng.uniform(-np.pi, np.pi, size=n)
            mod = np.ones(n) if math.isinf(p) else t ** (1.0 / p)
            z = mod * np.exp(1j * theta)
        Z[i] = z
    if math.isinf(p):
        return Z / np.abs(Z)
    return Z / lp_norm_rows(Z, p)[:, None]


def _ascent(P: HomPoly, p: float, Z: np.ndarray, opts: AscentOptions, nonneg_real: bool):
    """Monotone ascent of |P|^2 from each row of Z; rows evolve independently."""
    ev = _Evaluator(P)
    S = Z.shape[0]
    Z = Z.copy()
    taus = 2.0 ** -np.arange(opts.line_search + 1)
    f = np.abs(ev.value(Z)) ** 2
    active = np.ones(S, dtype=bool)
    converged = np.zeros(S, dtype=bool)
    for _ in range(opts.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Za = Z[idx]
        val, grad = ev.value_grad(Za)
        absv = np.abs(val)
        sgn = np.where(absv > 0, val / np.where(absv > 0, absv, 1.0), 1.0)
        w = np.conj(sgn)[:, None] * grad
        if nonneg_real:
            w = w.real.astype(complex)
        if math.isinf(p):
            theta = np.angle(Za)
            delta = -np.angle(w * Za)
            delta[np.abs(w) == 0] = 0.0
            cand = np.exp(1j * (theta[None, :, :] + taus[:, None, None] * delta[None, :, :]))
            step = np.abs(delta).max(axis=1)
        else:
            s = _dual_point(w, p)
            d = s - Za
            raw = Za[None, :, :] + taus[:, None, None] * d[None, :, :]
            flat = raw.reshape(-1, P.n)
            norms = lp_norm_rows(flat, p)
            ok = norms > 0
            flat[ok] /= norms[ok][:, None]
            cand = flat.reshape(raw.shape)
            step = np.abs(d).max(axis=1)
        fc = np.abs(ev.value(cand.reshape(-1, P.n))) ** 2
        fc = fc.reshape(len(taus), idx.size)
        if not math.isinf(p):
            fc[~ok.reshape(len(taus), idx.size)] = -1.0
        best = np.argmax(fc, axis=0)
        fbest = fc[best, np.arange(idx.size)]
        gain = fbest - f[idx]
        move = gain > 0
        Z[idx[move]] = cand[best[move], np.flatnonzero(move)]
        f[idx[move]] = fbest[move]
        small = (gain <= opts.value_tol * np.maximum(f[idx], np.finfo(float).tiny)) | (
            step <= opts.step_tol
        )
        converged[idx[small]] = True
        active[idx[small]] = False
    return Z, f, converged


def supnorm_lower(P: HomPoly, p, opts: AscentOptions = DEFAULT_OPTIONS, nonneg_real: bool = False):
    """Attained lower bound for the sup-norm: returns ``(value, witness, converged)``.

    For p = inf the search runs over the torus.  With ``nonneg_real`` all
    iterates stay in the non-negative orthant (meaningful when the
    coefficients are non-negative).  A zero polynomial gives ``(0.0, None, True)``.
    """
    p = _check_p(p)
    if P.is_zero():
        return 0.0, None, True
    if P.m == 0:
        z = np.zeros(P.n, dtype=complex)
        z[0] = 1.0
        return float(abs(P.coeffs[0])), z, True
    Z0 = _initial_points(P, p, opts, nonneg_real)
    Z, f, conv = _ascent(P, p, Z0, opts, nonneg_real)
    k = int(np.argmax(f))
    z = Z[k]
    if math.isinf(p):
        z = z / np.abs(z)
    else:
        z = z / lp_norm_rows(z[None, :], p)[0]
    return abs(evaluate(P, z)), z, bool(conv[k])


def _spread_like(P: HomPoly):
    """Return (k, |c|) if P is a sum of k disjoint square-free monomials of equal modulus."""
    E = P.exponents
    if E.size == 0 or E.max() > 1:
        return None
    if np.any(E.sum(axis=0) > 1):
        return None
    absc = np.abs(P.coeffs)
    if not np.all(absc == absc[0]):
        return None
    return P.nterms, float(absc[0])


def _exact(P: HomPoly, p: float):
    """Closed-form sup-norm for special families, or None."""
    if P.m == 1:
        vec = np.zeros(P.n, dtype=complex)
        for alpha, c in zip(P.alphas, P.coeffs):
            vec[alpha.index(1)] = c
        q = conjugate_exponent(p)
        value = coeff_norm(P, q)
        absv = np.abs(vec)
        phase = np.where(absv > 0, np.conj(vec) / np.where(absv > 0, absv, 1.0), 1.0)
        if p == 1:
            z = np.zeros(P.n, dtype=complex)
            j = int(np.argmax(absv))
            z[j] = phase[j]
        elif math.isinf(p):
            z = phase
        else:
            z = phase * (absv / absv.max()) ** (q - 1.0)
            z = z / lp_norm_rows(z[None, :], p)[0]
        return value, z, "exact-linear"
    if P.nterms == 1:
        alpha = P.alphas[0]
        c = P.coeffs[0]
        z = _monomial_maximizer(alpha, p)
        first = next(j for j, e in enumerate(alpha) if e)
        z[first] *= np.exp(-1j * np.angle(c) / alpha[first])
        if math.isinf(p):
            z = np.where(np.abs(z) > 0, z, 1.0)
        return abs(c) * monomial_sup(alpha, p), z, "exact-monomial"
    spread = _spread_like(P)
    if spread is not None and p >= P.m:
        k, c = spread
        mod = 1.0 if math.isinf(p) else (1.0 / (P.m * k)) ** (1.0 / p)
        z = np.full(P.n, mod, dtype=complex)
        if math.isinf(p):
            z[:] = 1.0
        elif P.n > P.m * k:
            used = P.exponents.sum(axis=0) > 0
            z[~used] = 0.0
        for alpha, coef in zip(P.alphas, P.coeffs):
            z[alpha.index(1)] *= np.exp(-1j * np.angle(coef))
        value = c * k if math.isinf(p) else c * k * (1.0 / (P.m * k)) ** (P.m / p)
        return value, z, "exact-spread"
    return None


def estimate(P: HomPoly, p, opts: AscentOptions = DEFAULT_OPTIONS) -> NormEstimate:
    """Certified interval [lower, upper] for the sup-norm of P on the l_p ball."""
    p = _check_p(p)
    if P.is_zero():
        return NormEstimate(0.0, 0.0, p, None, ("zero",))
    exact = _exact(P, p)
    if exact is not None:
        value, z, tag = exact
        value = float(value)
        return NormEstimate(value, value, p, z, (tag,))
    lower, z, conv = supnorm_lower(P, p, opts)
    upper, cert = supnorm_upper_cert(P, p)
    methods = ["ascent" if conv else "ascent:not-converged", cert]
    if lower > upper:
        # attained value and certificate agree up to summation round-off
        if lower > upper * (1 + 1e-12):
            raise ArithmeticError(f"lower bound {lower} exceeds certificate {upper}")
        upper = lower
    return NormEstimate(float(lower), float(upper), p, z, tuple(methods))


def format_estimate(est: NormEstimate) -> str:
    return f"[{est.lower!r}, {est.upper!r}] on l_{format_extended(est.p)} via {', '.join(est.methods)}"
