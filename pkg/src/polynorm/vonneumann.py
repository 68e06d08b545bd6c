"""Homogeneous polynomials evaluated on commuting operator tuples, the
(Ip)/(IIp) normalization checks and von Neumann ratio experiments.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .polycore import HomPoly, conjugate_exponent, format_extended, parse_extended
from .supnorm import DEFAULT_OPTIONS, AscentOptions, _dual_point, estimate

COMMUTE_TOL = 1e-10


class CommutatorError(ValueError):
    pass


class ConditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class OperatorTuple:
    ops: np.ndarray  # shape (n, d, d)
    family: str = "custom"
    seed: int = 0

    def __post_init__(self):
        ops = np.array(self.ops, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValueError(f"need an (n, d, d) array, got shape {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise ValueError("operator entries must be finite")
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @property
    def n(self) -> int:
        return self.ops.shape[0]

    @property
    def d(self) -> int:
        return self.ops.shape[1]

    def commutator_residuals(self) -> np.ndarray:
        """Relative residuals ||T_i T_j - T_j T_i|| / max(1, ||T_i|| ||T_j||) for i < j."""
        norms = np.array([np.linalg.norm(T, 2) for T in self.ops])
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                A, B = self.ops[i], self.ops[j]
                res = np.linalg.norm(A @ B - B @ A, 2)
                out.append(res / max(1.0, norms[i] * norms[j]))
        return np.array(out)

    def commutes(self, tol: float = COMMUTE_TOL) -> bool:
        res = self.commutator_residuals()
        return bool(res.size == 0 or res.max() <= tol)


def shift_matrix(d: int) -> np.ndarray:
    return np.eye(d, k=1, dtype=complex)


def gen_nilpotent_tuple(m: int, n: int, c, d: int | None = None) -> OperatorTuple:
    """T_i = c_i N with N the d x d forward shift (d = m + 1 by default)."""
    d = m + 1 if d is None else d
    if d <= m:
        raise ValueError(f"need d >= m + 1 = {m + 1}, got d={d}; P(T) would vanish")
    c = np.asarray(c, dtype=complex)
    if c.shape != (n,):
        raise ValueError(f"need {n} scalars, got shape {c.shape}")
    N = shift_matrix(d)
    return OperatorTuple(c[:, None, None] * N[None], "nilpotent", 0)


def gen_diagonal_tuple(points) -> OperatorTuple:
    """T_i = diag(z^(1)_i, ..., z^(k)_i) for the given points z^(k)."""
    Z = np.atleast_2d(np.asarray(points, dtype=complex))
    k, n = Z.shape
    ops = np.zeros((n, k, k), dtype=complex)
    idx = np.arange(k)
    ops[:, idx, idx] = Z.T
    return OperatorTuple(ops, "diagonal", 0)


def condition_value_Ip(t: OperatorTuple, p) -> float:
    p = parse_extended(p)
    norms = np.array([opnorm(T)[0] for T in t.ops])
    if math.isinf(p):
        return float(norms.max(initial=0.0))
    return float(np.sum(norms ** p))


def gen_shiftpoly_tuple(m: int, n: int, d: int, seed: int, p=None, terms: int | None = None) -> OperatorTuple:
    """T_i = q_i(N) with random complex polynomials q_i without constant term.

    With ``p`` given the tuple is rescaled so that sum ||T_i||^p = 1 - 1e-9.
    """
    if d < m + 1:
        raise ValueError(f"need d >= m + 1 = {m + 1}, got d={d}")
    terms = d - 1 if terms is None else terms
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((n, terms)) + 1j * rng.standard_normal((n, terms))
    N = shift_matrix(d)
    powers = [np.linalg.matrix_power(N, k) for k in range(1, terms + 1)]
    ops = np.einsum("ik,kab->iab", coef, np.array(powers))
    t = OperatorTuple(ops, "shiftpoly", seed)
    if p is not None:
        p = parse_extended(p)
        target = 1 - 1e-9
        val = condition_value_Ip(t, p)
        scale = val / target if math.isinf(p) else (val / target) ** (1 / p)
        t = OperatorTuple(t.ops / scale, "shiftpoly", seed)
    return t


def opnorm(M: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> tuple[float, bool]:
    """Largest singular value by power iteration on M^* M; returns (value, converged)."""
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    if M.size == 0 or not np.any(M):
        return 0.0, True
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    H = M.conj().T @ M
    lam = 0.0
    for _ in range(max_iter):
        w = H @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            # the start fell into the kernel; restart on a fresh direction
            v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        # Rayleigh quotient: error is quadratic in the eigenvector error
        new = math.sqrt(max(float(np.vdot(v, H @ v).real), 0.0))
        if abs(new - lam) <= tol * new:
            return new, True
        lam = new
    return lam, False


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    p: float
    value: float
    satisfied: bool
    details: dict = field(default_factory=dict)


def _holder_beta(v: np.ndarray, p: float) -> np.ndarray:
    """Maximizer of |<beta, v>| over the unit ball of l_{p'}."""
    return _dual_point(v[None, :], conjugate_exponent(p))[0]


def condition_value_IIp(t: OperatorTuple, p, starts: int = 16, iters: int = 200, seed: int = 0) -> float:
    """Lower estimate of sup ||sum beta_i T_i|| over the l_{p'} unit ball, by alternating
    maximization over beta and the top singular pair.
    """
    p = parse_extended(p)
    pc = conjugate_exponent(p)
    if not np.any(t.ops):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for s in range(starts):
        if s < t.n:
            beta = np.zeros(t.n, dtype=complex)
            beta[s] = 1.0
        else:
            beta = rng.standard_normal(t.n) + 1j * rng.standard_normal(t.n)
            beta /= np.sum(np.abs(beta)) if pc == 1 else (
                np.abs(beta).max() if math.isinf(pc) else np.sum(np.abs(beta) ** pc) ** (1 / pc))
        val = 0.0
        for _ in range(iters):
            M = np.tensordot(beta, t.ops, axes=1)
            U, S, Vh = np.linalg.svd(M)
            x, y = Vh[0].conj(), U[:, 0]
            v = np.einsum("a,iab,b->i", y.conj(), t.ops, x)
            beta = _holder_beta(v, p)
            new = float(np.linalg.norm(np.tensordot(beta, t.ops, axes=1), 2))
            if new <= val * (1 + 1e-13):
                val = max(val, new)
                break
            val = new
        best = max(best, val)
    return best


def check_condition(t: OperatorTuple, which: str, p, tol: float = 1e-8, **kw) -> ConditionReport:
    p = parse_extended(p)
    if which == "Ip":
        value = condition_value_Ip(t, p)
    elif which == "IIp":
        value = condition_value_IIp(t, p, **kw)
    else:
        raise ValueError(f"condition must be 'Ip' or 'IIp', got {which!r}")
    return ConditionReport(which, p, value, value <= 1 + tol)


def eval_poly_on_tuple(P: HomPoly, t: OperatorTuple, order=None, check: bool = True) -> np.ndarray:
    """sum_alpha a_alpha prod_i T_i^alpha_i; ``order`` permutes the factor order."""
    if P.n != t.n:
        raise ValueError(f"polynomial has {P.n} variables, tuple has {t.n} operators")
    if check and not t.commutes():
        res = t.commutator_residuals().max()
        raise CommutatorError(f"operators do not commute (max relative residual {res:.3e})")
    order = list(range(t.n)) if order is None else list(order)
    if sorted(order) != list(range(t.n)):
        raise ValueError("order must be a permutation of the operator indices")
    cache: dict[tuple[int, int], np.ndarray] = {}

    def power(i: int, k: int) -> np.ndarray:
        if (i, k) not in cache:
            cache[(i, k)] = np.linalg.matrix_power(t.ops[i], k)
        return cache[(i, k)]

    out = np.zeros((t.d, t.d), dtype=complex)
    eye = np.eye(t.d, dtype=complex)
    for alpha, a in zip(P.alphas, P.coeffs):
        M = eye
        for i in order:
            if alpha[i]:
                M = M @ power(i, alpha[i])
        out += a * M
    return out


@dataclass(frozen=True)
class VNRecord:
    family: str
    m: int
    n: int
    d: int
    p: float
    q: float
    ratio_certified: float
    ratio_empirical: float
    Ip_value: float
    converged: bool = True

    def row(self) -> list[str]:
        return [self.family, str(self.m), str(self.n), str(self.d), format_extended(self.p),
                format_extended(self.q), repr(self.ratio_certified), repr(self.ratio_empirical),
                repr(self.Ip_value)]


VN_FIELDS = ("family", "m", "n", "d", "p", "q", "ratio_certified", "ratio_empirical", "Ip_value")


def vn_ratio(P: HomPoly, t: OperatorTuple, q, p, condition: str = "Ip",
             opts: AscentOptions = DEFAULT_OPTIONS, tol: float = 1e-8) -> VNRecord:
    """||P(T)|| over the l_q sup-norm of P; refuses tuples violating the chosen condition."""
    p, q = parse_extended(p), parse_extended(q)
    rep = check_condition(t, condition, p, tol)
    if not rep.satisfied:
        raise ConditionViolated(f"tuple violates ({condition}) with p={format_extended(p)}: value {rep.value!r}")
    ip = rep.value if condition == "Ip" else condition_value_Ip(t, p)
    val, conv = opnorm(eval_poly_on_tuple(P, t))
    est = estimate(P, q, opts)
    if est.upper == 0:
        cert = emp = 0.0
    else:
        cert = float(val / est.upper)
        emp = float(val / est.lower)
    return VNRecord(t.family, P.m, P.n, t.d, p, q, cert, emp, ip, conv)


def vn_records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VN_FIELDS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def serialize_tuple(t: OperatorTuple) -> str:
    """Header 'n d family seed', then one block of d rows per operator (re im pairs)."""
    lines = [f"{t.n} {t.d} {t.family} {t.seed}"]
    for T in t.ops:
        lines.append("")
        for row in T:
            lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def parse_tuple(text: str) -> OperatorTuple:
    rows = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: header must be 'n d family seed'")
            try:
                header = (int(parts[0]), int(parts[1]), parts[2], int(parts[3]))
            except ValueError:
                raise ValueError(f"line {lineno}: malformed header") from None
            continue
        try:
            vals = [float(x) for x in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed number") from None
        if len(vals) != 2 * header[1]:
            raise ValueError(f"line {lineno}: expected {2 * header[1]} numbers, got {len(vals)}")
        rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if header is None:
        raise ValueError("line 1: missing header")
    n, d, family, seed = header
    if len(rows) != n * d:
        raise ValueError(f"expected {n * d} matrix rows, got {len(rows)}")
    ops = np.array(rows).reshape(n, d, d) if rows else np.zeros((n, d, d))
    return OperatorTuple(ops, family, seed)
