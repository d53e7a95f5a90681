"""Event-level Monte Carlo of the parity-encoded memory cycle.

Quantum states are not tracked here; only detections and losses. The
event model per block encode is:

* Attempt ``i = 1 .. n-1`` fuses old photon ``i-1`` with the head of a fresh
  resource. Both photons must be detected (``eta1`` and ``eta2``); if so the
  fusion succeeds with ``fusion_prob`` and otherwise fails, consuming the old
  photon. A missing photon heralds a loss and aborts the encode.
* After a heralded loss at attempt ``j`` the block is recovered if any of the
  ``n - j`` remaining old photons is detected in the diagonal basis.
* After ``n - 1`` failed fusions the last old photon must be detected.
* After a success the ``n - i`` remaining old photons are measured in order.
  If all are seen the encode is clean. At the first missing one the rest are
  measured diagonally instead; if none of those is seen either, the block is
  decoupled through the ``q`` new blocks, each needing one detected photon.

A memory cycle pushes blocks through the encoder in index order. A clean
encode of block ``b`` is followed by disentangling the ``q - 1 - b`` blocks
still in memory; a recovered block moves the cycle on to block ``b + 1``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .analytic import CodeParams, EfficiencyParams, p_e

BATCH_SIZE = 1 << 16
DEFAULT_SEED = 20240611


class Outcome(str, enum.Enum):
    SUCCESS_CLEAN = "success-clean"
    SUCCESS_RECOVERED = "success-recovered"
    UNRECOVERABLE = "unrecoverable"


class EncoderOutcome(str, enum.Enum):
    CLEAN = "encoded-clean"
    RECOVERED = "recovered-needs-reencode"
    UNRECOVERABLE = "unrecoverable"


class Event(str, enum.Enum):
    FUSION_SUCCESS = "fusion-success"
    FUSION_FAILURE = "fusion-failure"
    LOSS_DETECTED = "loss-detected"
    DISENTANGLE_SUCCESS = "disentangle-success"
    DISENTANGLE_FAILURE = "disentangle-failure"


class PhotonClass(str, enum.Enum):
    OLD = "old"
    NEW = "new"


class DisentangleModel(str, enum.Enum):
    """How a block left in memory is released after a clean encode.

    ``AT_LEAST_ONE`` needs one detected photon per block, probability
    ``1 - (1-eta1)^n``. ``ALL_PHOTONS`` needs every photon, ``eta1^n``.
    """

    AT_LEAST_ONE = "at-least-one"
    ALL_PHOTONS = "all-photons"


# ---------------------------------------------------------------------------
# RNG


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: ``(seed, position)`` fixes every draw.

    ``lane`` separates independent uses of the same seed (scalar trials vs
    vectorised batches).
    """

    seed: int = DEFAULT_SEED
    position: int = 0
    lane: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        counter = np.array([0, 0, self.position, self.lane], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))

    def at(self, position: int) -> "RngStream":
        return RngStream(self.seed, position, self.lane)


# ---------------------------------------------------------------------------
# records


@dataclass
class ParityBlock:
    """One parity block; ``present[i]`` is False for a photon already gone."""

    n: int
    present: list[bool] = None
    role: str = "in-memory"

    def __post_init__(self):
        if self.present is None:
            self.present = [True] * self.n
        if len(self.present) != self.n:
            raise ValueError("presence flags must match n")

    @property
    def photon_count(self) -> int:
        return sum(self.present)


@dataclass
class ProtocolState:
    parity_blocks: list[ParityBlock]
    pending_corrections: list[str] = field(default_factory=list)
    cycle_index: int = 0

    def __post_init__(self):
        if sum(b.role == "being-encoded" for b in self.parity_blocks) > 1:
            raise ValueError("at most one block may be under encoding")


@dataclass(frozen=True)
class LossInjection:
    """Remove one photon before the cycle runs.

    ``kind`` is ``"memory"`` (photon ``index`` of memory block ``block``),
    ``"head"`` (resource head used at attempt ``index`` while encoding block
    ``block``) or ``"resource"`` (photon ``index`` of the new blocks attached
    to block ``block``, flattened over q blocks of n).
    """

    kind: str
    block: int
    index: int

    def __post_init__(self):
        if self.kind not in ("memory", "head", "resource"):
            raise ValueError(f"unknown injection kind {self.kind!r}")


@dataclass
class EncoderResult:
    outcome: EncoderOutcome
    fusion_attempts: int
    photons_consumed: int
    events: list[Event]
    success_attempt: int | None = None


@dataclass
class TrialRecord:
    outcome: Outcome
    fusion_attempts: int
    photons_consumed: int
    event_trace: list[Event]

    @property
    def success(self) -> bool:
        return self.outcome is not Outcome.UNRECOVERABLE


def terminal_consistent(rec: TrialRecord, q: int) -> bool:
    """Check that the trace's last event agrees with the outcome."""
    if not rec.event_trace:
        return False
    last = rec.event_trace[-1]
    if rec.success:
        return last is Event.DISENTANGLE_SUCCESS
    exhausted = rec.event_trace.count(Event.DISENTANGLE_SUCCESS) >= q
    return last is Event.DISENTANGLE_FAILURE or exhausted


# ---------------------------------------------------------------------------
# scalar engine


def sample_photon_survival(eff: EfficiencyParams, photon_class: PhotonClass | str, rng: np.random.Generator) -> bool:
    """Bernoulli draw with ``eta1`` for old photons and ``eta2`` for new ones."""
    eta = eff.eta1 if PhotonClass(photon_class) is PhotonClass.OLD else eff.eta2
    return bool(rng.random() < eta)


def _seen(present: bool, eff: EfficiencyParams, cls: PhotonClass, rng) -> bool:
    # draw regardless of presence so injection does not shift the stream
    hit = sample_photon_survival(eff, cls, rng)
    return present and hit


def simulate_encoder(
    code: CodeParams,
    eff: EfficiencyParams,
    block: ParityBlock,
    rng: np.random.Generator,
    *,
    fusion_prob: float = 0.5,
    heads_present: Sequence[bool] | None = None,
    resource_present: Sequence[bool] | None = None,
) -> EncoderResult:
    """Push one parity block through the encoder.

    ``heads_present[i-1]`` and ``resource_present`` let callers remove
    specific resource photons; by default all are present.
    """
    n, q = code.n, code.q
    if block.photon_count < 1:
        raise ValueError("block has no photons")
    if block.n != n:
        raise ValueError("block size differs from code.n")
    heads = list(heads_present) if heads_present is not None else [True] * (n - 1)
    res = list(resource_present) if resource_present is not None else [True] * (q * n)
    events: list[Event] = []
    consumed = 0
    old = block.present

    def recover_old(start: int) -> bool:
        nonlocal consumed
        ok = False
        for k in range(start, n):
            consumed += 1
            ok = _seen(old[k], eff, PhotonClass.OLD, rng) or ok
        return ok

    for i in range(1, n):
        consumed += 2
        o = _seen(old[i - 1], eff, PhotonClass.OLD, rng)
        h = _seen(heads[i - 1], eff, PhotonClass.NEW, rng)
        fuse = rng.random() < fusion_prob
        if not (o and h):
            events.append(Event.LOSS_DETECTED)
            ok = recover_old(i)
            events.append(Event.DISENTANGLE_SUCCESS if ok else Event.DISENTANGLE_FAILURE)
            outcome = EncoderOutcome.RECOVERED if ok else EncoderOutcome.UNRECOVERABLE
            return EncoderResult(outcome, i, consumed, events)
        if not fuse:
            events.append(Event.FUSION_FAILURE)
            continue
        events.append(Event.FUSION_SUCCESS)
        for k in range(i, n):
            consumed += 1
            if not _seen(old[k], eff, PhotonClass.OLD, rng):
                events.append(Event.LOSS_DETECTED)
                ok = recover_old(k + 1)
                if not ok:
                    ok = True
                    for b in range(q):
                        seen = False
                        for j in range(n):
                            seen = _seen(res[b * n + j], eff, PhotonClass.NEW, rng) or seen
                        consumed += n
                        if not seen:
                            ok = False
                            break
                events.append(Event.DISENTANGLE_SUCCESS if ok else Event.DISENTANGLE_FAILURE)
                outcome = EncoderOutcome.RECOVERED if ok else EncoderOutcome.UNRECOVERABLE
                return EncoderResult(outcome, i, consumed, events, success_attempt=i)
        events.append(Event.DISENTANGLE_SUCCESS)
        return EncoderResult(EncoderOutcome.CLEAN, i, consumed, events, success_attempt=i)

    consumed += 1
    ok = _seen(old[n - 1], eff, PhotonClass.OLD, rng)
    events.append(Event.DISENTANGLE_SUCCESS if ok else Event.DISENTANGLE_FAILURE)
    outcome = EncoderOutcome.RECOVERED if ok else EncoderOutcome.UNRECOVERABLE
    return EncoderResult(outcome, n - 1, consumed, events)


def simulate_memory_cycle(
    code: CodeParams,
    eff: EfficiencyParams,
    rng: np.random.Generator,
    *,
    fusion_prob: float = 0.5,
    disentangle: DisentangleModel = DisentangleModel.AT_LEAST_ONE,
    injection: LossInjection | None = None,
) -> TrialRecord:
    """One full cycle over ``q`` memory blocks."""
    n, q = code.n, code.q
    state = ProtocolState([ParityBlock(n) for _ in range(q)])
    heads = [[True] * (n - 1) for _ in range(q)]
    resources = [[True] * (q * n) for _ in range(q)]
    if injection is not None:
        target = {"memory": lambda: state.parity_blocks[injection.block].present,
                  "head": lambda: heads[injection.block],
                  "resource": lambda: resources[injection.block]}[injection.kind]()
        target[injection.index] = False

    trace: list[Event] = []
    attempts = consumed = 0
    for b in range(q):
        blk = state.parity_blocks[b]
        blk.role = "being-encoded"
        enc = simulate_encoder(
            code, eff, blk, rng, fusion_prob=fusion_prob,
            heads_present=heads[b], resource_present=resources[b],
        )
        blk.role = "in-memory"
        trace += enc.events
        attempts += enc.fusion_attempts
        consumed += enc.photons_consumed
        if enc.outcome is EncoderOutcome.UNRECOVERABLE:
            return TrialRecord(Outcome.UNRECOVERABLE, attempts, consumed, trace)
        if enc.outcome is EncoderOutcome.RECOVERED:
            state.pending_corrections.append(f"z-block-{b}")
            continue
        for other in state.parity_blocks[b + 1 :]:
            hits = [_seen(p, eff, PhotonClass.OLD, rng) for p in other.present]
            consumed += n
            ok = any(hits) if disentangle is DisentangleModel.AT_LEAST_ONE else all(hits)
            trace.append(Event.DISENTANGLE_SUCCESS if ok else Event.DISENTANGLE_FAILURE)
            if not ok:
                return TrialRecord(Outcome.UNRECOVERABLE, attempts, consumed, trace)
        outcome = Outcome.SUCCESS_CLEAN if b == 0 else Outcome.SUCCESS_RECOVERED
        return TrialRecord(outcome, attempts, consumed, trace)
    return TrialRecord(Outcome.UNRECOVERABLE, attempts, consumed, trace)


def run_trials(
    code: CodeParams,
    eff: EfficiencyParams,
    trials: int,
    seed: int = DEFAULT_SEED,
    **kwargs,
) -> list[TrialRecord]:
    """Scalar trials, trial ``t`` drawing from its own substream."""
    base = RngStream(seed)
    return [simulate_memory_cycle(code, eff, base.at(t).generator(), **kwargs) for t in range(trials)]


# ---------------------------------------------------------------------------
# vectorised engine

_CLEAN, _RECOV, _UNREC = 0, 1, 2


def _any_seen(rng, m: int, k: int, eta: float) -> np.ndarray:
    if k <= 0:
        return np.zeros(m, bool)
    return (rng.random((m, k)) < eta).any(axis=1)


def _encode_batch(n: int, q: int, e1: float, e2: float, pf: float, rng, m: int) -> np.ndarray:
    out = np.full(m, _UNREC, np.int8)
    alive = np.ones(m, bool)
    for i in range(1, n):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        k = idx.size
        got = (rng.random(k) < e1) & (rng.random(k) < e2)
        fuse = rng.random(k) < pf
        r = n - i

        lost = idx[~got]
        out[lost] = np.where(_any_seen(rng, lost.size, r, e1), _RECOV, _UNREC)

        won = idx[got & fuse]
        if won.size:
            seen = rng.random((won.size, r)) < e1
            clean = seen.all(axis=1)
            before = np.cumsum(~seen, axis=1) - (~seen)
            rescued = (seen & (before > 0)).any(axis=1)
            need_new = ~clean & ~rescued
            decoupled = np.zeros(won.size, bool)
            nn = int(need_new.sum())
            if nn:
                decoupled[need_new] = (rng.random((nn, q, n)) < e2).any(axis=2).all(axis=1)
            res = np.full(won.size, _UNREC, np.int8)
            res[clean] = _CLEAN
            res[~clean & (rescued | decoupled)] = _RECOV
            out[won] = res
        alive[lost] = False
        alive[won] = False
    rest = np.flatnonzero(alive)
    out[rest] = np.where(rng.random(rest.size) < e1, _RECOV, _UNREC)
    return out


def _cycle_batch(n, q, e1, e2, pf, model: DisentangleModel, rng, m: int) -> np.ndarray:
    out = np.full(m, 2, np.int8)  # 0 clean success, 1 recovered success, 2 fail
    idx = np.arange(m)
    for b in range(q):
        if idx.size == 0:
            break
        enc = _encode_batch(n, q, e1, e2, pf, rng, idx.size)
        clean = idx[enc == _CLEAN]
        rem = q - 1 - b
        if rem and clean.size:
            hits = rng.random((clean.size, rem, n)) < e1
            per_block = hits.any(axis=2) if model is DisentangleModel.AT_LEAST_ONE else hits.all(axis=2)
            ok = per_block.all(axis=1)
        else:
            ok = np.ones(clean.size, bool)
        out[clean[ok]] = 0 if b == 0 else 1
        idx = idx[enc == _RECOV]
    return out


def _batch_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


def _run_batch(args) -> np.ndarray:
    kind, n, q, e1, e2, pf, model, seed, b, size = args
    rng = RngStream(seed, b, lane=1 if kind == "cycle" else 2).generator()
    if kind == "cycle":
        vals = _cycle_batch(n, q, e1, e2, pf, DisentangleModel(model), rng, size)
    else:
        vals = _encode_batch(n, q, e1, e2, pf, rng, size)
    return np.bincount(vals, minlength=3)


def _tally(kind: str, code, eff, trials, seed, fusion_prob, model, workers) -> np.ndarray:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [
        (kind, code.n, code.q, eff.eta1, eff.eta2, fusion_prob, DisentangleModel(model).value, seed, b, s)
        for b, s in enumerate(_batch_sizes(trials))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, jobs))
    else:
        parts = [_run_batch(j) for j in jobs]
    return np.sum(parts, axis=0)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class PEEstimate:
    trials: int
    successes: int
    estimate: float
    ci_low: float
    ci_high: float
    success_clean: int
    success_recovered: int
    unrecoverable: int
    seed: int

    def as_dict(self) -> dict:
        return asdict(self)

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def estimate_p_e(
    code: CodeParams,
    eff: EfficiencyParams,
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    fusion_prob: float = 0.5,
    disentangle: DisentangleModel = DisentangleModel.AT_LEAST_ONE,
    workers: int = 1,
) -> PEEstimate:
    """Cycle success frequency with a Wilson 95% interval.

    Batches of :data:`BATCH_SIZE` trials use independent substreams and
    tallies are summed in batch order, so the result does not depend on
    ``workers``.
    """
    c = _tally("cycle", code, eff, trials, seed, fusion_prob, disentangle, workers)
    succ = int(c[0] + c[1])
    lo, hi = wilson_interval(succ, trials)
    return PEEstimate(trials, succ, succ / trials, lo, hi, int(c[0]), int(c[1]), int(c[2]), seed)


@dataclass(frozen=True)
class EncoderEstimate:
    trials: int
    clean: int
    recovered: int
    unrecoverable: int
    seed: int

    def frequencies(self) -> tuple[float, float, float]:
        t = self.trials
        return self.clean / t, self.recovered / t, self.unrecoverable / t


def estimate_encoder(
    code: CodeParams,
    eff: EfficiencyParams,
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    fusion_prob: float = 0.5,
    workers: int = 1,
) -> EncoderEstimate:
    c = _tally("encoder", code, eff, trials, seed, fusion_prob, DisentangleModel.AT_LEAST_ONE, workers)
    return EncoderEstimate(trials, int(c[_CLEAN]), int(c[_RECOV]), int(c[_UNREC]), seed)


# ---------------------------------------------------------------------------
# agreement with the closed forms


@dataclass(frozen=True)
class ModelCheck:
    """One analytic probability against its Monte Carlo frequency."""

    quantity: str
    analytic: float
    observed: float
    sigma: float
    z: float
    within_3sigma: bool


def _check(name: str, p: float, k: int, trials: int) -> ModelCheck:
    obs = k / trials
    sigma = math.sqrt(max(p * (1 - p), 0.0) / trials)
    if sigma == 0.0:
        z = 0.0 if abs(obs - p) < 1e-12 else math.inf
    else:
        z = (obs - p) / sigma
    return ModelCheck(name, p, obs, sigma, z, abs(z) <= 3.0)


@dataclass(frozen=True)
class ConsistencyReport:
    n: int
    q: int
    eta1: float
    eta2: float
    trials: int
    seed: int
    checks: tuple[ModelCheck, ...]
    variant_p_e: dict

    @property
    def mismatches(self) -> list[ModelCheck]:
        return [c for c in self.checks if not c.within_3sigma]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mismatches"] = [asdict(c) for c in self.mismatches]
        return d


def consistency_report(
    code: CodeParams,
    eff: EfficiencyParams,
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    include_variant: bool = False,
    workers: int = 1,
) -> ConsistencyReport:
    """Compare encoder and cycle frequencies to the closed forms.

    Deviations beyond 3 sigma show up in :attr:`ConsistencyReport.mismatches`.
    With ``include_variant`` the all-photons disentangle model is also run and
    its cycle success frequency recorded next to the default one.
    """
    pb = p_e(code, eff)
    enc = estimate_encoder(code, eff, trials, seed, workers=workers)
    cyc = estimate_p_e(code, eff, trials, seed, workers=workers)
    checks = (
        _check("p_qs", pb.p_qs, enc.clean, trials),
        _check("p_qf", pb.p_qf, enc.recovered, trials),
        _check("p_ff", pb.p_ff, enc.unrecoverable, trials),
        _check("p_e", pb.p_e, cyc.successes, trials),
    )
    variants = {DisentangleModel.AT_LEAST_ONE.value: cyc.estimate}
    if include_variant:
        alt = estimate_p_e(code, eff, trials, seed, disentangle=DisentangleModel.ALL_PHOTONS, workers=workers)
        variants[DisentangleModel.ALL_PHOTONS.value] = alt.estimate
    return ConsistencyReport(code.n, code.q, eff.eta1, eff.eta2, trials, seed, checks, variants)


# ---------------------------------------------------------------------------
# event model against the exact quantum enumeration


@dataclass(frozen=True)
class OracleValidation:
    n: int
    q: int
    trials: int
    seed: int
    checks: tuple[ModelCheck, ...]
    min_fidelity: float
    loss_detected_probability: float | None
    recovery_fidelity: float | None

    @property
    def passed(self) -> bool:
        ok = all(c.within_3sigma for c in self.checks) and self.min_fidelity > 1 - 1e-10
        if self.recovery_fidelity is not None:
            ok = ok and self.recovery_fidelity > 1 - 1e-10
            ok = ok and abs(self.loss_detected_probability - 1.0) < 1e-10
        return ok

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def validate_against_oracle(code: CodeParams, trials: int = 20_000, seed: int = DEFAULT_SEED) -> OracleValidation:
    """Event-level branch frequencies at unit efficiency vs exact enumeration.

    Compares the probability of encoding at each attempt and the cycle
    success probability. For ``q >= 2`` it also injects a loss on the first
    fused photon and checks that the recovery branch (heralded loss, then a
    successful diagonal release) is always taken, and
    that in the quantum picture the surviving block holds the logical state.
    """
    from .exact import exact_encoder, exact_loss_recovery, exact_memory_cycle

    n, q = code.n, code.q
    ideal = EfficiencyParams()
    enc = exact_encoder(n, q)
    cyc = exact_memory_cycle(n, q)

    base = RngStream(seed, lane=3)
    attempts = np.zeros(n, int)
    for t in range(trials):
        r = simulate_encoder(code, ideal, ParityBlock(n), base.at(t).generator())
        if r.outcome is EncoderOutcome.CLEAN:
            attempts[r.success_attempt] += 1
    checks = [
        _check(f"encode-at-attempt-{i}", enc.success_by_attempt.get(i, 0.0), int(attempts[i]), trials)
        for i in range(1, n)
    ]
    recs = run_trials(code, ideal, trials, seed)
    checks.append(_check("cycle-success", cyc.success_probability, sum(r.success for r in recs), trials))

    detected = recovery_f = None
    if q >= 2:
        inj = LossInjection("memory", 0, 0)
        recs = run_trials(code, ideal, trials, seed, injection=inj)
        took = sum(r.event_trace[:2] == [Event.LOSS_DETECTED, Event.DISENTANGLE_SUCCESS] for r in recs)
        checks.append(_check("injected-loss-recovered", 1.0, took, trials))
        lr = exact_loss_recovery(n)
        detected, recovery_f = lr.detected_probability, lr.min_fidelity
    return OracleValidation(
        n, q, trials, seed, tuple(checks), min(enc.min_fidelity, cyc.min_fidelity), detected, recovery_f
    )


# ---------------------------------------------------------------------------
# single-loss tolerance


def random_injection(code: CodeParams, rng: np.random.Generator) -> LossInjection:
    """One photon chosen uniformly among every photon a cycle could touch."""
    n, q = code.n, code.q
    sites = q * n + q * (n - 1) + q * q * n
    k = int(rng.integers(sites))
    if k < q * n:
        return LossInjection("memory", k // n, k % n)
    k -= q * n
    if k < q * (n - 1):
        return LossInjection("head", k // (n - 1), k % (n - 1))
    k -= q * (n - 1)
    return LossInjection("resource", k // (q * n), k % (q * n))


@dataclass(frozen=True)
class SingleLossReport:
    n: int
    q: int
    trials: int
    seed: int
    fusion_prob: float
    successes: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials


def single_loss_success(
    code: CodeParams,
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    fusion_prob: float = 1.0,
) -> SingleLossReport:
    """Cycle success with exactly one photon removed and ideal detection elsewhere."""
    ideal = EfficiencyParams()
    base = RngStream(seed, lane=5)
    ok = 0
    for t in range(trials):
        rng = base.at(t).generator()
        inj = random_injection(code, rng)
        ok += simulate_memory_cycle(code, ideal, rng, fusion_prob=fusion_prob, injection=inj).success
    return SingleLossReport(code.n, code.q, trials, seed, fusion_prob, ok)
