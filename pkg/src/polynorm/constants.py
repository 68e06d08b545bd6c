"""Growth regions, certified bounds and empirical estimates for the constants
A (coefficient norm <= A * sup-norm) and B (sup-norm <= B * coefficient norm),
plus n-sweeps and log-log exponent fits.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .construct import best_of_unimodular, ones_poly, spread_poly, steiner_family
from .polycore import (
    CapacityError,
    HomPoly,
    coeff_norm,
    conjugate_exponent,
    format_extended,
    lambda_size,
    parse_extended,
)
from .supnorm import DEFAULT_OPTIONS, AscentOptions, estimate

EPS = 1e-12

EXACT, UPPER_ONLY, CONDITIONAL, UNKNOWN = "exact", "upper-only", "conditional", "unknown"
_STATUS_RANK = {EXACT: 0, UPPER_ONLY: 1, CONDITIONAL: 2, UNKNOWN: 3}


def inverse(x: float) -> float:
    x = parse_extended(x)
    return 0.0 if math.isinf(x) else 1.0 / x


@dataclass(frozen=True)
class RegionPoint:
    inv_p: float
    inv_r: float
    m: int

    def __post_init__(self):
        if not (-EPS <= self.inv_p <= 1 + EPS and -EPS <= self.inv_r <= 1 + EPS):
            raise ValueError(f"coordinates must lie in [0, 1], got {self.inv_p}, {self.inv_r}")

    @classmethod
    def from_exponents(cls, p, r, m: int) -> "RegionPoint":
        return cls(inverse(p), inverse(r), m)


@dataclass(frozen=True)
class RegionVerdict:
    labels: tuple[str, ...]
    exponent: float | None
    status: str
    per_label: dict[str, tuple[float, str]] = field(default_factory=dict)


def _le(a: float, b: float) -> bool:
    return a <= b + EPS


def _a_regions(x: float, y: float, m: int) -> dict[str, tuple[float, str]]:
    """Closed regions for A with their exponents; x = 1/p, y = 1/r."""
    out: dict[str, tuple[float, str]] = {}
    if (_le(0.5, y) and _le(y, (m + 1) / (2 * m) - x)) or (_le(y, 0.5) and _le(m * x, 1 - y)):
        out["A"] = (0.0, EXACT)
    # the figure and the proof (q = mr/(r-1) <= 2m) bound this region by 1/r <= 1/2
    if _le(1 / (2 * m), x) and _le(x, 1 / m) and _le(1 - m * x, y) and _le(y, 0.5):
        out["B"] = (m * x + y - 1, EXACT)
    if (_le((m + 1) / (2 * m), y) and _le(x, 0.5)) or (
        _le(0.5, y) and _le(y, (m + 1) / (2 * m)) and _le((m + 1) / (2 * m), x + y) and _le(x, 0.5)
    ):
        out["C"] = (m * (x + y - 0.5) - 0.5, EXACT)
    if _le(0.5, x) and _le(1 - x, y):
        out["D"] = (m * y + x - 1, EXACT)
    if _le(0.5, x) and _le(x, 1 - y):
        out["E"] = ((m - 1) * y, UPPER_ONLY)
    if m >= 2 and _le((m - 1) * x, 1 - y) and _le(1 / m, x) and _le(x, 1 / (m - 1)):
        out["F"] = (y, EXACT)
    if m >= 3:
        seam = m / (2 - m) * x + m / (2 * m - 4)
        if _le(1 / m, x) and _le(x, 0.5):
            if _le(y, seam):
                out["Fbar"] = (y, CONDITIONAL)
            if _le(seam, y) and _le(y, 0.5):
                out["Gbar"] = (m * (x + y - 0.5) - y, CONDITIONAL)
    return out


def _verdict(regions: dict[str, tuple[float, str]]) -> RegionVerdict:
    if not regions:
        return RegionVerdict(("UNKNOWN",), None, UNKNOWN, {})
    labels = tuple(regions)
    best = min(labels, key=lambda k: _STATUS_RANK[regions[k][1]])
    regions = {k: (float(e), st) for k, (e, st) in regions.items()}
    return RegionVerdict(labels, regions[best][0], regions[best][1], regions)


def classify_region_A(pt: RegionPoint) -> RegionVerdict:
    """All regions containing (1/p, 1/r), with the predicted growth exponent of A."""
    if pt.m < 2:
        raise ValueError("region classification needs m >= 2")
    return _verdict(_a_regions(pt.inv_p, pt.inv_r, pt.m))


def predicted_B_exponent(m: int, p, r) -> tuple[float, str]:
    x, y = inverse(p), inverse(r)
    if _le(1 - x, y):
        return 0.0, EXACT
    return m * (1 - x - y), EXACT


def B_upper_cert(m: int, n: int, p, r) -> float:
    """Bound on B valid for every P: 1 if r <= p', else |Lambda|^(1/p' - 1/r)."""
    x, y = inverse(p), inverse(r)
    if 1 - x <= y:
        return 1.0
    return float(lambda_size(m, n)) ** ((1 - x) - y)


def A_upper_cert_crude(m: int, n: int, p, r) -> float:
    """|Lambda|^(1/r) * n^(m/p), from |a_alpha| <= sup on the torus <= n^(m/p) sup on l_p."""
    x, y = inverse(p), inverse(r)
    return float(lambda_size(m, n)) ** y * float(n) ** (m * x)


FAMILIES = ("spread", "ones", "unimodular", "steiner")


def default_families(kind: str, m: int, p, r) -> tuple[str, ...]:
    if kind == "B":
        return ("ones",)
    if m < 2:
        return ("ones", "unimodular")
    labels = set(classify_region_A(RegionPoint.from_exponents(p, r, m)).labels)
    if labels & {"B", "F", "Fbar", "A"}:
        return ("spread",)
    if labels & {"C", "D"}:
        return ("unimodular",)
    if labels & {"E", "Gbar"}:
        return ("steiner",)
    return FAMILIES


def resolve_families(kind: str, m: int, p, r, family: str | None) -> tuple[str, ...]:
    if family is None or family == "default":
        fams = default_families(kind, m, p, r)
    elif family == "all":
        fams = FAMILIES
    elif family in FAMILIES:
        fams = (family,)
    else:
        raise ValueError(f"unknown family {family!r}")
    if m < 2:
        fams = tuple(f for f in fams if f != "steiner") or ("ones",)
    return fams


def build_witness(family: str, m: int, n: int, p, seed: int, rounds: int = 16,
                  opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> HomPoly:
    if family == "spread":
        return spread_poly(m, n)
    if family == "ones":
        return ones_poly(m, n, cap)
    if family == "unimodular":
        return best_of_unimodular(m, n, p, seed, rounds, opts, cap)
    if family == "steiner":
        return steiner_family(m, n, p, seed, rounds, opts, cap)
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class ConstantEstimate:
    kind: str
    m: int
    n: int
    p: float
    r: float
    certified_lower: float
    empirical: float
    family: str
    upper_cert: float


def estimate_A(m: int, n: int, p, r, family: str | None = None, seed: int = 0, rounds: int = 16,
               opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> ConstantEstimate:
    """Lower estimates of A from witnesses: |P|_r / upper and |P|_r / lower sup-norm bounds."""
    p, r = parse_extended(p), parse_extended(r)
    fams = resolve_families("A", m, p, r, family)
    cert, emp, tags = 0.0, 0.0, []
    for fam in fams:
        P = build_witness(fam, m, n, p, seed, rounds, opts, cap)
        est = estimate(P, p, opts)
        if est.upper == 0 or est.lower == 0:
            continue
        cr = coeff_norm(P, r)
        cert = max(cert, cr / est.upper)
        emp = max(emp, cr / est.lower)
        tags.append(fam)
    if not tags:
        raise ZeroDivisionError("every witness polynomial has zero sup-norm")
    return ConstantEstimate("A", m, n, p, r, cert, emp, "+".join(fams), A_upper_cert_crude(m, n, p, r))


def estimate_B(m: int, n: int, p, r, family: str | None = None, seed: int = 0, rounds: int = 16,
               opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None) -> ConstantEstimate:
    """Certified lower bound on B: attained sup-norm value over the exact coefficient norm."""
    p, r = parse_extended(p), parse_extended(r)
    fams = resolve_families("B", m, p, r, family)
    best, tags = 0.0, []
    for fam in fams:
        P = build_witness(fam, m, n, p, seed, rounds, opts, cap)
        cr = coeff_norm(P, r)
        if cr == 0:
            continue
        best = max(best, estimate(P, p, opts).lower / cr)
        tags.append(fam)
    if not tags:
        raise ZeroDivisionError("every witness polynomial is zero")
    # the attained value is the only estimate; empirical and certified coincide
    return ConstantEstimate("B", m, n, p, r, best, best, "+".join(fams), B_upper_cert(m, n, p, r))


CSV_FIELDS = ("kind", "m", "n", "p", "r", "family", "certified_lower", "empirical",
              "upper_cert", "seed", "status")


@dataclass(frozen=True)
class SweepRecord:
    kind: str
    m: int
    n: int
    p: float
    r: float
    family: str
    certified_lower: float | None
    empirical: float | None
    upper_cert: float | None
    seed: int
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def value(self) -> float | None:
        return self.empirical

    def row(self) -> list[str]:
        def num(v):
            return "" if v is None else format_extended(v)
        return [self.kind, str(self.m), str(self.n), format_extended(self.p), format_extended(self.r),
                self.family, num(self.certified_lower), num(self.empirical), num(self.upper_cert),
                str(self.seed), self.status]


def _sweep_one(args) -> SweepRecord:
    kind, m, n, p, r, family, seed, rounds, opts, cap = args
    fn = estimate_A if kind == "A" else estimate_B
    try:
        e = fn(m, n, p, r, family, seed, rounds, opts, cap)
    except CapacityError as exc:
        fams = family or "default"
        return SweepRecord(kind, m, n, p, r, fams, None, None, None, seed, f"failed: {exc}")
    return SweepRecord(kind, m, n, p, r, e.family, e.certified_lower, e.empirical,
                       e.upper_cert, seed, "ok")


def sweep(kind: str, m: int, p, r, n_list: Sequence[int], family: str | None = None, seed: int = 0,
          rounds: int = 16, opts: AscentOptions = DEFAULT_OPTIONS, cap: int | None = None,
          threads: int = 1) -> list[SweepRecord]:
    """One estimate per n; rows that exceed the capacity cap are marked failed."""
    if kind not in ("A", "B"):
        raise ValueError(f"kind must be 'A' or 'B', got {kind!r}")
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    p, r = parse_extended(p), parse_extended(r)
    jobs = [(kind, m, n, p, r, family, seed, rounds, opts, cap) for n in n_list]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        def num(key):
            v = row[key]
            return None if v == "" else parse_extended(v)
        out.append(SweepRecord(row["kind"], int(row["m"]), int(row["n"]), parse_extended(row["p"]),
                               parse_extended(row["r"]), row["family"], num("certified_lower"),
                               num("empirical"), num("upper_cert"), int(row["seed"]), row["status"]))
    return out


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    sample: tuple[tuple[float, float], ...]


def fit_exponent(records, column: str = "empirical") -> FitResult:
    """Least-squares slope of log(value) against log(n).

    ``records`` holds SweepRecords (failed rows are skipped) or (n, value) pairs.
    """
    pts = []
    for rec in records:
        if isinstance(rec, SweepRecord):
            if not rec.ok:
                continue
            pts.append((float(rec.n), getattr(rec, column)))
        else:
            n, v = rec
            pts.append((float(n), v))
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    n = np.array([a for a, _ in pts])
    v = np.array([b for _, b in pts], dtype=float)
    if np.any(v <= 0) or np.any(n <= 0):
        raise ValueError("fit needs positive n and values")
    x, y = np.log(n), np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise ValueError("fit needs at least two distinct n")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, tuple(pts))


def predicted_exponent(kind: str, m: int, p, r) -> tuple[float | None, str]:
    if kind == "B":
        return predicted_B_exponent(m, p, r)
    if m < 2:
        return None, UNKNOWN
    v = classify_region_A(RegionPoint.from_exponents(p, r, m))
    return v.exponent, v.status


def conj(p) -> float:
    return conjugate_exponent(parse_extended(p))


__all__ = [
    "RegionPoint", "RegionVerdict", "classify_region_A", "predicted_B_exponent", "B_upper_cert",
    "A_upper_cert_crude", "ConstantEstimate", "estimate_A", "estimate_B", "SweepRecord", "sweep",
    "FitResult", "fit_exponent", "records_to_csv", "records_from_csv", "predicted_exponent",
    "EXACT", "UPPER_ONLY", "CONDITIONAL", "UNKNOWN",
]
