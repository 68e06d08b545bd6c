"""Witness polynomial families and partial Steiner systems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .polycore import HomPoly, _check_cap, enumerate_lambda, get_cap
from .supnorm import DEFAULT_OPTIONS, AscentOptions, estimate


def derived_seed(seed: int, index: int) -> int:
    """Seed for round ``index`` of a best-of search; round 0 keeps ``seed``."""
    if index == 0:
        return int(seed)
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, index]).generate_state(1, np.uint64)[0])


def spread_poly(m: int, n: int) -> HomPoly:
    """z_1...z_m + z_{m+1}...z_{2m} + ..., with k = n // m disjoint blocks."""
    if m < 1 or n < m:
        raise ValueError(f"need n >= m >= 1, got m={m}, n={n}")
    coeffs = {}
    for b in range(n // m):
        alpha = [0] * n
        alpha[b * m:(b + 1) * m] = [1] * m
        coeffs[tuple(alpha)] = 1.0
    return HomPoly(m, n, coeffs)


def ones_poly(m: int, n: int, cap: int | None = None) -> HomPoly:
    """Coefficient 1 on every monomial of degree m."""
    if m < 1 or n < 1:
        raise ValueError(f"need m, n >= 1, got m={m}, n={n}")
    return HomPoly(m, n, {a: 1.0 for a in enumerate_lambda(m, n, cap)})


def random_unimodular(m: int, n: int, seed: int, cap: int | None = None) -> HomPoly:
    """Independent uniform +-1 coefficients on all of Lambda(m, n)."""
    alphas = enumerate_lambda(m, n, cap)
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=len(alphas))
    return HomPoly(m, n, zip(alphas, signs))


def random_gaussian(m: int, n: int, seed: int, cap: int | None = None) -> HomPoly:
    """Standard complex Gaussian coefficients on all of Lambda(m, n)."""
    alphas = enumerate_lambda(m, n, cap)
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(len(alphas)) + 1j * rng.standard_normal(len(alphas))) / math.sqrt(2)
    return HomPoly(m, n, zip(alphas, c))


def best_of_unimodular(m: int, n: int, p, seed: int, rounds: int,
                       opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> HomPoly:
    """The draw with the smallest sup-norm midpoint among ``rounds`` random sign choices."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    best, best_score = None, math.inf
    for i in range(rounds):
        P = random_unimodular(m, n, derived_seed(seed, i), cap)
        if rounds == 1:
            return P
        score = estimate(P, p, opts).midpoint
        if score < best_score:
            best, best_score = P, score
    return best


@dataclass(frozen=True)
class PartialSteinerSystem:
    """m-subsets of {1..n} such that every (m-1)-subset lies in at most one block."""

    n: int
    m: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = []
        for b in self.blocks:
            b = tuple(sorted(int(x) for x in b))
            if len(b) != self.m or len(set(b)) != self.m:
                raise ValueError(f"block {b} is not an {self.m}-subset")
            if b[0] < 1 or b[-1] > self.n:
                raise ValueError(f"block {b} is not inside {{1..{self.n}}}")
            norm.append(b)
        object.__setattr__(self, "blocks", tuple(sorted(norm)))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def max_size(self) -> float:
        """Upper bound (1/m) C(n, m-1) on the size of any such system."""
        return math.comb(self.n, self.m - 1) / self.m

    def coverage(self) -> dict[tuple[int, ...], int]:
        counts: dict[tuple[int, ...], int] = {}
        for b in self.blocks:
            for sub in combinations(b, self.m - 1):
                counts[sub] = counts.get(sub, 0) + 1
        return counts

    def is_valid(self) -> bool:
        if len(set(self.blocks)) != len(self.blocks):
            return False
        if any(c > 1 for c in self.coverage().values()):
            return False
        return len(self.blocks) <= self.max_size

    def serialize(self) -> str:
        lines = [f"{self.m} {self.n}"]
        lines += [" ".join(str(i) for i in b) for b in self.blocks]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "PartialSteinerSystem":
        header, blocks = None, []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                nums = [int(t) for t in line.split()]
            except ValueError:
                raise ValueError(f"line {lineno}: malformed integer") from None
            if header is None:
                if len(nums) != 2:
                    raise ValueError(f"line {lineno}: header must be 'm n'")
                header = nums
            else:
                blocks.append(tuple(nums))
        if header is None:
            raise ValueError("line 1: missing 'm n' header")
        system = cls(n=header[1], m=header[0], blocks=tuple(blocks))
        if not system.is_valid():
            raise ValueError("blocks do not form a partial Steiner system")
        return system


def greedy_partial_steiner(m: int, n: int, seed: int, cap: int | None = None) -> PartialSteinerSystem:
    """Random-order greedy S_p(m-1, m, n): keep a block when all its (m-1)-subsets are free."""
    if m < 2 or n < m:
        raise ValueError(f"need n >= m >= 2, got m={m}, n={n}")
    _check_cap(math.comb(n, m), cap, f"C({n},{m})")
    candidates = list(combinations(range(1, n + 1), m))
    order = np.random.default_rng(seed).permutation(len(candidates))
    covered: set[tuple[int, ...]] = set()
    blocks = []
    for k in order:
        b = candidates[k]
        subs = list(combinations(b, m - 1))
        if any(s in covered for s in subs):
            continue
        covered.update(subs)
        blocks.append(b)
    return PartialSteinerSystem(n=n, m=m, blocks=tuple(blocks))


@dataclass(frozen=True)
class SignAssignment:
    signs: dict[tuple[int, ...], int]
    seed: int

    def serialize(self) -> str:
        return "".join(
            f"{' '.join(map(str, b))} : {'+1' if s > 0 else '-1'}\n" for b, s in sorted(self.signs.items())
        )

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SignAssignment":
        signs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            left, sep, right = line.partition(":")
            if not sep or right.strip() not in ("+1", "-1", "1"):
                raise ValueError(f"line {lineno}: expected 'indices : +-1'")
            signs[tuple(int(t) for t in left.split())] = int(right.strip())
        return cls(signs, seed)


def _block_alpha(block, n: int) -> tuple[int, ...]:
    alpha = [0] * n
    for i in block:
        alpha[i - 1] = 1
    return tuple(alpha)


def steiner_signs(system: PartialSteinerSystem, p, seed: int, rounds: int = 32,
                  opts: AscentOptions = DEFAULT_OPTIONS) -> SignAssignment:
    """Best of ``rounds`` random sign vectors, scored by the sup-norm midpoint on l_p."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    best, best_score = None, math.inf
    for i in range(rounds):
        rng = np.random.default_rng(derived_seed(seed, i))
        signs = rng.choice(np.array([-1, 1]), size=len(system.blocks))
        if rounds == 1:
            best = signs
            break
        P = _steiner_from_signs(system, signs)
        score = estimate(P, p, opts).midpoint
        if score < best_score:
            best, best_score = signs, score
    return SignAssignment({b: int(s) for b, s in zip(system.blocks, best)}, seed)


def _steiner_from_signs(system: PartialSteinerSystem, signs) -> HomPoly:
    return HomPoly(system.m, system.n,
                   ((_block_alpha(b, system.n), float(s)) for b, s in zip(system.blocks, signs)))


def steiner_poly(system: PartialSteinerSystem, p, seed: int, rounds: int = 32,
                 opts: AscentOptions = DEFAULT_OPTIONS) -> HomPoly:
    """Square-free +-1 polynomial supported on the blocks of ``system``."""
    assignment = steiner_signs(system, p, seed, rounds, opts)
    return _steiner_from_signs(system, [assignment.signs[b] for b in system.blocks])


def steiner_family(m: int, n: int, p, seed: int, rounds: int = 32,
                   opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> HomPoly:
    return steiner_poly(greedy_partial_steiner(m, n, seed, get_cap(cap)), p, seed, rounds, opts)
