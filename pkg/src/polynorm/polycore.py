"""Homogeneous polynomials in sparse multi-index form and their coefficient norms.

A polynomial of degree ``m`` in ``n`` complex variables is stored as a map
from multi-indices ``alpha`` (length ``n``, entries summing to ``m``) to
complex coefficients.  Keys are kept in graded colexicographic order and
zero coefficients are never stored.
"""

from __future__ import annotations

import math
import os
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

DEFAULT_CAP = 10**7

MultiIndex = tuple[int, ...]


class CapacityError(ValueError):
    """Raised when a monomial/combinatorial count exceeds the configured cap."""


class PolyParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def get_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get("POLYNORM_CAP")
    return int(env) if env else DEFAULT_CAP


def parse_extended(value) -> float:
    """Parse an extended real such as ``3``, ``1.5``, ``inf`` or ``∞``."""
    if isinstance(value, (int, float, np.floating, np.integer)):
        return float(value)
    text = str(value).strip().lower()
    if text in ("inf", "infinity", "∞", "+inf", "oo"):
        return math.inf
    return float(text)


def conjugate_exponent(p: float) -> float:
    """Return p' with 1/p + 1/p' = 1 (1 <-> inf)."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def format_extended(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def lambda_size(m: int, n: int) -> int:
    """|Lambda(m, n)| = C(n + m - 1, m)."""
    return math.comb(n + m - 1, m)


def _check_cap(count: int, cap: int | None, what: str) -> None:
    limit = get_cap(cap)
    if count > limit:
        raise CapacityError(f"{what}: {count} exceeds capacity cap {limit}")


def _colex(m: int, n: int) -> Iterator[MultiIndex]:
    if n == 1:
        yield (m,)
        return
    for last in range(m + 1):
        for head in _colex(m - last, n - 1):
            yield head + (last,)


def colex_key(alpha: Sequence[int]) -> tuple[int, ...]:
    return tuple(reversed(alpha))


def enumerate_lambda(m: int, n: int, cap: int | None = None) -> list[MultiIndex]:
    """All multi-indices of degree ``m`` in ``n`` variables, colex ordered."""
    if m < 0 or n < 1:
        raise ValueError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    _check_cap(lambda_size(m, n), cap, f"Lambda({m},{n})")
    return list(_colex(m, n))


def multiplicity(alpha: Sequence[int]) -> int:
    """m! / alpha!, the number of index tuples in M(m, n) of type alpha."""
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative entry in multi-index {tuple(alpha)}")
    out = math.factorial(sum(alpha))
    for a in alpha:
        out //= math.factorial(a)
    return out


def to_index_tuple(alpha: Sequence[int]) -> tuple[int, ...]:
    """Non-decreasing 1-based index tuple j with the occurrence counts alpha."""
    return tuple(i + 1 for i, a in enumerate(alpha) for _ in range(a))


def from_index_tuple(j: Sequence[int], n: int) -> MultiIndex:
    alpha = [0] * n
    prev = 0
    for idx in j:
        if not 1 <= idx <= n:
            raise ValueError(f"index {idx} outside [1, {n}]")
        if idx < prev:
            raise ValueError(f"index tuple {tuple(j)} is not non-decreasing")
        prev = idx
        alpha[idx - 1] += 1
    return tuple(alpha)


class HomPoly:
    """An m-homogeneous polynomial in n variables, immutable."""

    __slots__ = ("_m", "_n", "_alphas", "_coeffs", "_exps", "_tuples", "_index")

    def __init__(self, m: int, n: int, coeffs: Mapping[Sequence[int], complex] | Iterable = ()):
        if m < 0 or n < 1:
            raise ValueError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict[MultiIndex, complex] = {}
        for alpha, c in items:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected {n}")
            if any(a < 0 for a in alpha) or sum(alpha) != m:
                raise ValueError(f"multi-index {alpha} is not in Lambda({m},{n})")
            if alpha in acc:
                raise ValueError(f"duplicate multi-index {alpha}")
            acc[alpha] = complex(c)
        alphas = sorted((a for a, c in acc.items() if c != 0), key=colex_key)
        self._m = m
        self._n = n
        self._alphas: tuple[MultiIndex, ...] = tuple(alphas)
        arr = np.array([acc[a] for a in alphas], dtype=complex)
        arr.setflags(write=False)
        self._coeffs = arr
        self._exps = None
        self._tuples = None
        self._index = None

    @classmethod
    def from_index_tuples(cls, m: int, n: int, coeffs: Mapping[Sequence[int], complex]) -> "HomPoly":
        """Build from the J(m, n) form: keys are non-decreasing 1-based tuples."""
        return cls(m, n, ((from_index_tuple(j, n), c) for j, c in coeffs.items()))

    @classmethod
    def zero(cls, m: int, n: int) -> "HomPoly":
        return cls(m, n, {})

    @property
    def m(self) -> int:
        return self._m

    @property
    def n(self) -> int:
        return self._n

    @property
    def alphas(self) -> tuple[MultiIndex, ...]:
        return self._alphas

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def nterms(self) -> int:
        return len(self._alphas)

    @property
    def terms(self) -> dict[MultiIndex, complex]:
        return dict(zip(self._alphas, self._coeffs.tolist()))

    def is_zero(self) -> bool:
        return not self._alphas

    @property
    def exponents(self) -> np.ndarray:
        """(nterms, n) integer exponent matrix."""
        if self._exps is None:
            e = np.array(self._alphas, dtype=np.int64).reshape(len(self._alphas), self._n)
            e.setflags(write=False)
            self._exps = e
        return self._exps

    @property
    def index_tuples(self) -> np.ndarray:
        """(nterms, m) array of 0-based variable indices of each monomial."""
        if self._tuples is None:
            t = np.array(
                [[i - 1 for i in to_index_tuple(a)] for a in self._alphas], dtype=np.int64
            ).reshape(len(self._alphas), self._m)
            t.setflags(write=False)
            self._tuples = t
        return self._tuples

    def coeff(self, alpha: Sequence[int]) -> complex:
        if self._index is None:
            self._index = {a: k for k, a in enumerate(self._alphas)}
        k = self._index.get(tuple(alpha))
        return 0j if k is None else complex(self._coeffs[k])

    def with_coeffs(self, coeffs: Sequence[complex]) -> "HomPoly":
        """Same support, new coefficients (aligned with ``alphas``)."""
        if len(coeffs) != self.nterms:
            raise ValueError("coefficient vector length does not match support")
        return HomPoly(self._m, self._n, zip(self._alphas, coeffs))

    def scale(self, c: complex) -> "HomPoly":
        return self.with_coeffs(self._coeffs * c)

    def __call__(self, z) -> complex:
        return evaluate(self, z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomPoly):
            return NotImplemented
        return (
            self._m == other._m
            and self._n == other._n
            and self._alphas == other._alphas
            and np.array_equal(self._coeffs, other._coeffs)
        )

    def __hash__(self) -> int:
        return hash((self._m, self._n, self._alphas, self._coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"HomPoly(m={self._m}, n={self._n}, nterms={self.nterms})"


def eval_batch(P: HomPoly, Z: np.ndarray) -> np.ndarray:
    """Evaluate P at each row of Z (shape (S, n)); returns shape (S,)."""
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim != 2 or Z.shape[1] != P.n:
        raise ValueError(f"expected points of dimension {P.n}, got shape {Z.shape}")
    if P.is_zero():
        return np.zeros(Z.shape[0], dtype=complex)
    J = P.index_tuples
    mon = np.ones((Z.shape[0], P.nterms), dtype=complex)
    for slot in range(P.m):
        mon *= Z[:, J[:, slot]]
    return (mon * P.coeffs).sum(axis=1)


def evaluate(P: HomPoly, z: Sequence[complex]) -> complex:
    """P(z) = sum_alpha a_alpha z^alpha."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (P.n,):
        raise ValueError(f"expected a vector of length {P.n}, got shape {z.shape}")
    return complex(eval_batch(P, z[None, :])[0])


def _check_r(r: float, allow_inf: bool = True) -> float:
    r = parse_extended(r)
    if math.isnan(r) or r < 1:
        raise ValueError(f"coefficient norm exponent must be >= 1, got {r}")
    if math.isinf(r) and not allow_inf:
        raise ValueError("r = inf is not supported here")
    return r


def _lr_norm(values: np.ndarray, r: float) -> float:
    """l_r norm of a non-negative vector, scaled to avoid overflow."""
    if values.size == 0:
        return 0.0
    top = float(values.max())
    if top == 0.0:
        return 0.0
    if math.isinf(r):
        return top
    return top * float(np.sum((values / top) ** r)) ** (1.0 / r)


def coeff_norm(P: HomPoly, r: float) -> float:
    """|P|_r, the l_r norm of the coefficient vector."""
    r = _check_r(r)
    return _lr_norm(np.abs(P.coeffs), r)


def bombieri_norm(P: HomPoly, r: float) -> float:
    """[P]_r = (sum (alpha!/m!)^(r-1) |a_alpha|^r)^(1/r), r finite."""
    r = _check_r(r, allow_inf=False)
    if P.is_zero():
        return 0.0
    logfm = math.lgamma(P.m + 1)
    logw = np.array(
        [sum(math.lgamma(a + 1) for a in alpha) - logfm for alpha in P.alphas]
    )
    absc = np.abs(P.coeffs)
    # log of each summand, then a stable log-sum-exp
    logs = (r - 1.0) * logw + r * np.log(absc)
    top = logs.max()
    return float(math.exp((top + math.log(np.exp(logs - top).sum())) / r))


def symform_coeff_norm(P: HomPoly, r: float) -> float:
    """|T|_r for the symmetric m-linear form T of P.

    Each alpha contributes ``multiplicity(alpha)`` tensor entries, all equal
    to ``a_alpha / multiplicity(alpha)``.  T itself is never built.
    """
    r = _check_r(r)
    if P.is_zero():
        return 0.0
    mult = np.array([float(multiplicity(a)) for a in P.alphas])
    entries = np.abs(P.coeffs) / mult
    if math.isinf(r):
        return float(entries.max())
    top = float(entries.max())
    return top * float(np.sum(mult * (entries / top) ** r)) ** (1.0 / r)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def serialize_poly(P: HomPoly) -> str:
    lines = [f"{P.m} {P.n}"]
    for alpha, c in zip(P.alphas, P.coeffs):
        idx = " ".join(str(a) for a in alpha)
        lines.append(f"{idx} {_fmt_float(c.real)} {_fmt_float(c.imag)}")
    return "\n".join(lines) + "\n"


def parse_poly(text: str) -> HomPoly:
    """Parse the ``m n`` header + ``alpha_1 .. alpha_n re im`` line format."""
    header = None
    coeffs: dict[MultiIndex, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 2:
                raise PolyParseError("header must be 'm n'", lineno)
            try:
                m, n = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise PolyParseError("header must contain two integers", lineno) from None
            if m < 0 or n < 1:
                raise PolyParseError(f"invalid header m={m}, n={n}", lineno)
            header = (m, n)
            continue
        m, n = header
        if len(tokens) != n + 2:
            raise PolyParseError(f"expected {n + 2} fields, got {len(tokens)}", lineno)
        try:
            alpha = tuple(int(t) for t in tokens[:n])
            c = complex(float(tokens[n]), float(tokens[n + 1]))
        except ValueError:
            raise PolyParseError("malformed number", lineno) from None
        if any(a < 0 for a in alpha):
            raise PolyParseError(f"negative exponent in {alpha}", lineno)
        if sum(alpha) != m:
            raise PolyParseError(f"degree {sum(alpha)} of {alpha} does not match m={m}", lineno)
        if alpha in coeffs:
            raise PolyParseError(f"duplicate multi-index {alpha}", lineno)
        coeffs[alpha] = c
    if header is None:
        raise PolyParseError("missing 'm n' header", 1)
    return HomPoly(header[0], header[1], coeffs)


def read_poly(path) -> HomPoly:
    with open(path) as fh:
        return parse_poly(fh.read())


def write_poly(P: HomPoly, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_poly(P))
