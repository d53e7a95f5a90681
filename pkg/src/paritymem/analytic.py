"""Closed-form success probabilities of the parity-encoded memory cycle.

All efficiencies enter through two numbers: ``eta1`` for photons that sat
in memory (detector x source x memory) and ``eta2`` for freshly made ones
(detector x source). With ``a = eta1*eta2/2``:

* ``p_qs = sum_{i=1}^{n-1} a^i eta1^(n-i)`` (clean encode),
* ``p_ff = T1 + R*T2 + T3`` (unrecoverable encode),
* ``p_qf = 1 - p_qs - p_ff`` (recoverable failure),
* ``p_e = sum_{j=0}^{q-1} p_qf^j p_qs D^(q-1-j)`` with ``D = 1-(1-eta1)^n``.

The printed-order sums are used for moderate ``q``. A log-domain closed
form of the same geometric series handles ``q`` up to ~1e15, which the
threshold search needs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

# q beyond which the series switch to the closed form
_SERIES_Q_LIMIT = 1000
DEFAULT_Q_CAP = 10**15
SCAN_LIMIT = 100_000
TIE_TOL = 1e-15


@dataclass(frozen=True)
class EfficiencyParams:
    """Detector, source and memory efficiencies."""

    eta_d: float = 1.0
    eta_s: float = 1.0
    eta_m: float = 1.0

    def __post_init__(self):
        for name in ("eta_d", "eta_s", "eta_m"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def eta1(self) -> float:
        return self.eta_d * self.eta_s * self.eta_m

    @property
    def eta2(self) -> float:
        return self.eta_d * self.eta_s

    @classmethod
    def uniform(cls, eta: float) -> "EfficiencyParams":
        """All three efficiencies equal: eta1 = eta^3, eta2 = eta^2."""
        return cls(eta, eta, eta)

    @classmethod
    def lumped(cls, eta: float) -> "EfficiencyParams":
        """One loss figure for the whole chain: eta1 = eta2 = eta."""
        return cls(eta, 1.0, 1.0)

    @classmethod
    def from_etas(cls, eta1: float, eta2: float) -> "EfficiencyParams":
        """Any pair with eta1 <= eta2, realised with eta_s = 1."""
        if eta1 > eta2:
            raise ValueError("eta1 must not exceed eta2")
        eta_m = 1.0 if eta2 == 0 else eta1 / eta2
        return cls(eta2, 1.0, eta_m)


PROFILES: dict[str, Callable[[float], EfficiencyParams]] = {
    "uniform": EfficiencyParams.uniform,
    "lumped": EfficiencyParams.lumped,
}


@dataclass(frozen=True)
class CodeParams:
    """Parity length ``n`` and redundancy ``q``."""

    n: int
    q: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n={self.n}: need an integer n >= 2")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q={self.q}: need an integer q >= 1")


@dataclass(frozen=True)
class ProbabilityBreakdown:
    p_qs: float
    p_ff: float
    p_qf: float
    p_e: float
    r_term: float

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# component sums


def _check_n(n: int) -> None:
    if n < 2:
        raise ValueError(f"n={n}: need n >= 2")


def p_qs(code: CodeParams, eff: EfficiencyParams) -> float:
    """Probability of a clean encode with no photon lost."""
    _check_n(code.n)
    e1, e2 = eff.eta1, eff.eta2
    a = e1 * e2 / 2
    total = 0.0
    for i in range(1, code.n):
        total += a**i * e1 ** (code.n - i)
    return total


def r_term(code: CodeParams, eff: EfficiencyParams) -> float:
    """Probability that decoupling through the new blocks fails.

    Binomial sum over the number ``k >= 1`` of new blocks with every photon
    lost. Equal to ``1 - (1 - (1-eta2)^n)^q``.
    """
    u = (1.0 - eff.eta2) ** code.n
    if code.q > _SERIES_Q_LIMIT:
        return _r_closed(code.q, u)
    v = 1.0 - u
    return sum(math.comb(code.q, k) * u**k * v ** (code.q - k) for k in range(1, code.q + 1))


def _r_closed(q: float, u: float) -> float:
    if u >= 1.0:
        return 1.0
    return -math.expm1(q * math.log1p(-u))


def _ff_terms(n: int, e1: float, e2: float) -> tuple[float, float, float]:
    a = e1 * e2 / 2
    t1 = sum(a ** (j - 1) * (1 - e1 * e2) * (1 - e1) ** (n - j) for j in range(1, n))
    t2 = 0.0
    for j in range(0, n - 1):
        inner = sum(e1**k * (1 - e1) ** (n - 1 - j - k) for k in range(0, n - 1 - j))
        t2 += a ** (j + 1) * inner
    t3 = a ** (n - 1) * (1 - e1)
    return t1, t2, t3


def p_ff(code: CodeParams, eff: EfficiencyParams) -> float:
    """Probability that a block is lost beyond recovery during one encode."""
    _check_n(code.n)
    t1, t2, t3 = _ff_terms(code.n, eff.eta1, eff.eta2)
    return t1 + r_term(code, eff) * t2 + t3


def _series_p_e(qs: float, qf: float, d: float, q: int) -> float:
    return sum(qf**j * qs * d ** (q - 1 - j) for j in range(q))


def p_e(code: CodeParams, eff: EfficiencyParams) -> ProbabilityBreakdown:
    """All component probabilities for one memory cycle."""
    qs = p_qs(code, eff)
    r = r_term(code, eff)
    ff = p_ff(code, eff)
    qf = 1.0 - qs - ff
    if code.q > _SERIES_Q_LIMIT:
        pe = math.exp(log_p_e(code.n, code.q, eff))
    else:
        d = 1.0 - (1.0 - eff.eta1) ** code.n
        pe = _series_p_e(qs, qf, d, code.q)
    return ProbabilityBreakdown(p_qs=qs, p_ff=ff, p_qf=qf, p_e=pe, r_term=r)


# ---------------------------------------------------------------------------
# closed form over real q


@dataclass(frozen=True)
class _Parts:
    qs: float
    t13: float
    t2: float
    u1: float  # (1-eta1)^n
    u2: float  # (1-eta2)^n


def _parts(n: int, eff: EfficiencyParams) -> _Parts:
    code = CodeParams(n, 1)
    t1, t2, t3 = _ff_terms(n, eff.eta1, eff.eta2)
    return _Parts(p_qs(code, eff), t1 + t3, t2, (1 - eff.eta1) ** n, (1 - eff.eta2) ** n)


def _log_p_e_parts(parts: _Parts, q: float) -> float:
    """log P_E for real ``q >= 1`` via the geometric-series closed form.

    With ``x = log D`` and ``y = log p_qf`` the sum equals
    ``qs * e^{(q-1) hi} * expm1(q d) / expm1(d)`` where ``hi = max(x, y)``
    and ``d = min(x, y) - hi``.
    """
    if parts.qs <= 0.0:
        return -math.inf
    r = _r_closed(q, parts.u2)
    keep = parts.qs + parts.t13 + r * parts.t2
    y = math.log1p(-keep) if keep < 1.0 else -math.inf
    x = math.log1p(-parts.u1) if parts.u1 < 1.0 else -math.inf
    hi, lo = max(x, y), min(x, y)
    base = math.log(parts.qs)
    if hi == -math.inf:
        return base if q == 1 else -math.inf
    d = lo - hi
    if d == 0.0:
        return base + math.log(q) + (q - 1) * hi
    if d == -math.inf:
        return base + (q - 1) * hi
    return base + (q - 1) * hi + math.log(math.expm1(q * d) / math.expm1(d))


def _series_from_parts(parts: _Parts, n: int, eff: EfficiencyParams, q: int) -> float:
    """Printed-order P_E reusing the q-independent pieces of :func:`p_e`."""
    r = r_term(CodeParams(n, q), eff)
    qf = 1.0 - parts.qs - (parts.t13 + r * parts.t2)
    return _series_p_e(parts.qs, qf, 1.0 - parts.u1, q)


def log_p_e(n: int, q: float, eff: EfficiencyParams) -> float:
    """Natural log of P_E, valid for real ``q >= 1``."""
    return _log_p_e_parts(_parts(n, eff), q)


def continuous_optimum(n: int, eff: EfficiencyParams, q_cap: float = DEFAULT_Q_CAP) -> float:
    """Real-valued maximiser of P_E over ``q in [1, q_cap]``.

    A coarse log-spaced scan brackets the peak before the bounded search.
    """
    parts = _parts(n, eff)
    if parts.qs <= 0.0:
        return 1.0
    top = math.log(q_cap)
    grid = np.linspace(0.0, top, 257)
    vals = [_log_p_e_parts(parts, math.exp(x)) for x in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda lq: -_log_p_e_parts(parts, math.exp(lq)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    best = math.exp(res.x)
    # the bounded search never evaluates the endpoints exactly
    for cand in (1.0, float(q_cap), math.exp(grid[i])):
        if _log_p_e_parts(parts, cand) > _log_p_e_parts(parts, best):
            best = cand
    return best


def optimal_q(n: int, eff: EfficiencyParams, q_max: int | None = None) -> tuple[int, float]:
    """Integer ``q`` in ``[1, q_max]`` maximising P_E; ties go to smaller q.

    ``q_max`` up to :data:`SCAN_LIMIT` is scanned exhaustively. Larger caps
    (``None`` means :data:`DEFAULT_Q_CAP`) use the continuous maximiser, then
    bisect for the smallest q whose log P_E is within :data:`TIE_TOL` of the
    peak. Near unit P_E the peak is flat to double precision over a wide
    range of q, so this is what "ties go to smaller q" means there.
    """
    if q_max is not None and q_max < 1:
        raise ValueError("q_max must be >= 1")
    parts = _parts(n, eff)
    if parts.qs <= 0.0:
        return 1, 0.0
    if q_max is not None and q_max <= SCAN_LIMIT:
        if q_max <= _SERIES_Q_LIMIT:
            vals = [_series_from_parts(parts, n, eff, q) for q in range(1, q_max + 1)]
        else:
            vals = [math.exp(_log_p_e_parts(parts, q)) for q in range(1, q_max + 1)]
        best = int(np.argmax(vals))
        return best + 1, float(vals[best])
    cap = DEFAULT_Q_CAP if q_max is None else q_max
    qc = continuous_optimum(n, eff, cap)
    cands = sorted({1, max(1, math.floor(qc)), min(cap, math.ceil(qc)), cap})
    lp_best, neg_q = max((_log_p_e_parts(parts, q), -q) for q in cands)
    q = -neg_q
    thr = lp_best - TIE_TOL
    if _log_p_e_parts(parts, 1) >= thr:
        q = 1
    else:
        lo = 1
        while q - lo > 1:
            mid = (lo + q) // 2
            if _log_p_e_parts(parts, mid) >= thr:
                q = mid
            else:
                lo = mid
    pe = p_e(CodeParams(n, q), eff).p_e if q <= _SERIES_Q_LIMIT else math.exp(_log_p_e_parts(parts, q))
    return q, pe


# ---------------------------------------------------------------------------
# threshold


class ThresholdUnreachable(RuntimeError):
    """Target cannot be met even at unit efficiency under the given caps."""


@dataclass(frozen=True)
class ThresholdReport:
    eta_threshold: float
    target: float
    n_max: int
    q_max: int | None
    tol: float
    profile: str
    best_n: int
    best_q: int
    p_e_at_threshold: float
    scan_monotone: bool

    def as_dict(self) -> dict:
        return asdict(self)


def best_over_codes(eta: float, n_max: int, q_max: int | None, profile: str = "uniform") -> tuple[int, int, float]:
    """``(n, q, P_E)`` maximising P_E over ``2 <= n <= n_max``."""
    eff = PROFILES[profile](eta)
    best = (2, 1, -1.0)
    for n in range(2, n_max + 1):
        q, pe = optimal_q(n, eff, q_max)
        if pe > best[2]:
            best = (n, q, pe)
    return best


def threshold_search(
    n_max: int = 40,
    q_max: int | None = None,
    target: float = 0.99,
    tol: float = 1e-3,
    profile: str = "uniform",
    scan_step: float = 0.02,
) -> ThresholdReport:
    """Least efficiency at which some code with ``n <= n_max`` reaches ``target``.

    A coarse scan checks that the best achievable P_E is nondecreasing in
    efficiency and brackets the crossing, which bisection then refines to
    ``tol``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")

    def best(eta: float) -> float:
        return best_over_codes(eta, n_max, q_max, profile)[2]

    if best(1.0) < target:
        raise ThresholdUnreachable(f"max P_E at eta=1 is {best(1.0):.6g} < target {target}")
    grid = np.round(np.arange(0.0, 1.0 + 1e-12, scan_step), 12)
    vals = [best(float(e)) for e in grid]
    monotone = all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    hi_idx = next(i for i, v in enumerate(vals) if v >= target)
    if hi_idx == 0:
        lo, hi = 0.0, 0.0
    else:
        lo, hi = float(grid[hi_idx - 1]), float(grid[hi_idx])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if best(mid) >= target:
            hi = mid
        else:
            lo = mid
    n_b, q_b, pe_b = best_over_codes(hi, n_max, q_max, profile)
    return ThresholdReport(hi, target, n_max, q_max, tol, profile, n_b, q_b, pe_b, monotone)


# ---------------------------------------------------------------------------
# crossover with an unencoded memory


BASELINES: dict[str, Callable[[float], float]] = {
    "eta": lambda eta: eta,
    "eta2": lambda eta: eta**2,
    "eta3": lambda eta: eta**3,
}


@dataclass(frozen=True)
class CrossoverReport:
    eta_cross: float | None
    baseline: str
    profile: str
    n: int
    q: int
    reachable: bool

    def as_dict(self) -> dict:
        return asdict(self)


def passive_crossover(
    code: CodeParams = CodeParams(5, 2),
    baseline: str | Callable[[float], float] = "eta2",
    profile: str = "lumped",
    grid_step: float = 1e-3,
    tol: float = 1e-7,
) -> CrossoverReport:
    """Least efficiency where the encoded cycle beats storing a bare photon.

    ``baseline`` is a survival model of the unencoded photon: one of
    :data:`BASELINES` or any callable of the efficiency. ``profile`` maps the
    single efficiency onto (eta1, eta2); see :data:`PROFILES`.
    """
    fn = BASELINES[baseline] if isinstance(baseline, str) else baseline
    name = baseline if isinstance(baseline, str) else getattr(baseline, "__name__", "custom")
    make = PROFILES[profile]

    def gap(eta: float) -> float:
        return p_e(code, make(eta)).p_e - fn(eta)

    grid = np.round(np.arange(0.0, 1.0 + 1e-12, grid_step), 12)
    prev = 0.0
    for eta in grid:
        eta = float(eta)
        if gap(eta) > 0:
            lo, hi = prev, eta
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if gap(mid) > 0:
                    hi = mid
                else:
                    lo = mid
            return CrossoverReport(hi, name, profile, code.n, code.q, True)
        prev = eta
    return CrossoverReport(None, name, profile, code.n, code.q, False)


# ---------------------------------------------------------------------------
# optimal-q surface


@dataclass(frozen=True)
class SurfaceCell:
    n: int
    eta: float
    q_star: int
    p_qs: float
    p_ff: float
    p_qf: float
    p_e: float
    eta1: float
    eta2: float

    def as_dict(self) -> dict:
        return asdict(self)


class MonotonicityError(AssertionError):
    """Optimal P_E decreased along an increasing efficiency grid."""


def surface_cell(n: int, eta: float, q_max: int | None = None, profile: str = "uniform", q_fixed: int | None = None) -> SurfaceCell:
    eff = PROFILES[profile](eta)
    if q_fixed is None:
        q, pe = optimal_q(n, eff, q_max)
    else:
        q = q_fixed
    pb = p_e(CodeParams(n, q), eff)
    pe = pb.p_e
    return SurfaceCell(n, eta, q, pb.p_qs, pb.p_ff, pb.p_qf, pe, eff.eta1, eff.eta2)


def _cell_star(args):
    return surface_cell(*args)


def figure2_surface(
    n_range: Sequence[int],
    eta_range: Sequence[float],
    q_max: int | None = None,
    profile: str = "uniform",
    q_fixed: int | None = None,
    workers: int = 1,
    check_monotone: bool = True,
) -> list[SurfaceCell]:
    """Optimal-q P_E on an (n, eta) grid, ordered by n then eta.

    Cells may be evaluated in a process pool; the output order is fixed.
    Raises :class:`MonotonicityError` if P_E* ever decreases in eta at fixed n.
    """
    n_range, eta_range = list(n_range), [float(e) for e in eta_range]
    if not n_range or not eta_range:
        raise ValueError("ranges must be nonempty")
    jobs = [(n, e, q_max, profile, q_fixed) for n in n_range for e in eta_range]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        cells = [_cell_star(j) for j in jobs]
    if check_monotone and q_fixed is None:
        bad = monotonicity_violations(cells)
        if bad:
            raise MonotonicityError(f"P_E* decreases in eta at {bad[:3]}")
    return cells


def monotonicity_violations(cells: Iterable[SurfaceCell], tol: float = 1e-12) -> list[tuple[int, float]]:
    """``(n, eta)`` cells whose P_E* is below the previous eta at the same n."""
    by_n: dict[int, list[SurfaceCell]] = {}
    for c in cells:
        by_n.setdefault(c.n, []).append(c)
    bad = []
    for n, row in by_n.items():
        row = sorted(row, key=lambda c: c.eta)
        for a, b in zip(row, row[1:]):
            if b.p_e < a.p_e - tol:
                bad.append((n, b.eta))
    return bad
