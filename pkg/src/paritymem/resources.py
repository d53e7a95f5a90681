"""Bell-pair cost accounting for parity-state factories.

A :class:`BuildStrategy` is a catalogue of products, each made by one
fusion of two earlier products (or by an encoder step), ending in a target.
Costs are expected numbers of Bell pairs.

Renewal rules, with success probability ``p`` per attempt:

* type-I join of sizes ``a, b`` -> ``a + b - 1``; failure destroys both, so
  ``C = (C_a + C_b) / p``.
* type-II join -> ``a + b - 2``; failure leaves remnants of sizes ``a - 1``
  and ``b - 1``. Under ``discard`` they are dropped. Under ``recycle`` each
  remnant is worth ``v = C_in - rho``, where ``rho`` is the cheaper of

  - topping it back up to the input size by a type-II join with an earlier
    catalogue piece (walking down a size on each failure), or
  - banking it in the pool at the catalogue cost of its size and building a
    fresh input,

  giving ``C = (C_a + C_b - (1 - p)(v_a + v_b)) / p``.
* encoder step: a base ``|0>^(q+1)`` grows ``q`` legs, one type-II join per
  leg with a block product. A failure collapses the base; grown legs and
  the failing block come back as remnants one photon short of a block. The
  round structure is an absorbing Markov chain over the number of legs grown
  and is solved with its fundamental matrix.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import oracle as po
from .analytic import EfficiencyParams
from .oracle import OutcomeKind

SCHEMA = "paritymem.strategy/1"
POOL_CAP = 32
CHUNK_RUNS = 4096


class StrategyError(ValueError):
    """Malformed strategy document."""


@dataclass(frozen=True)
class Primitive:
    name: str
    size: int
    cost: float = 1.0


@dataclass(frozen=True)
class FusionStep:
    name: str
    fusion: str  # "I" or "II"
    inputs: tuple[str, str]
    point: str = "regular"  # or "suspect"
    on_failure: str = "discard"  # or "recycle"


@dataclass(frozen=True)
class EncoderStep:
    name: str
    base: str
    block: str
    legs: int
    on_failure: str = "recycle"


@dataclass(frozen=True)
class BuildStrategy:
    name: str
    primitives: tuple[Primitive, ...]
    steps: tuple[FusionStep | EncoderStep, ...]
    target: str
    description: str = ""
    reference_cost: float | None = None

    def __post_init__(self):
        validate_strategy(self)

    # sizes and suspect flags follow from the step list
    def sizes(self) -> dict[str, int]:
        return _layout(self)[0]

    def suspects(self) -> dict[str, bool]:
        return _layout(self)[1]

    def target_photons(self) -> int:
        return self.sizes()[self.target]


def _layout(s: BuildStrategy) -> tuple[dict[str, int], dict[str, bool]]:
    sizes: dict[str, int] = {}
    suspect: dict[str, bool] = {}
    for prim in s.primitives:
        if prim.name in sizes:
            raise StrategyError(f"duplicate name {prim.name!r}")
        if prim.size < 1:
            raise StrategyError(f"primitive {prim.name!r} needs size >= 1")
        sizes[prim.name] = prim.size
        suspect[prim.name] = False
    for st in s.steps:
        if st.name in sizes:
            raise StrategyError(f"duplicate name {st.name!r}")
        if isinstance(st, EncoderStep):
            for ref in (st.base, st.block):
                if ref not in sizes:
                    raise StrategyError(f"{st.name}: unknown input {ref!r}")
            if st.legs < 1:
                raise StrategyError(f"{st.name}: legs must be >= 1")
            if sizes[st.base] != st.legs + 1:
                raise StrategyError(f"{st.name}: base must have legs + 1 = {st.legs + 1} photons")
            if sizes[st.block] < 2:
                raise StrategyError(f"{st.name}: block must have >= 2 photons")
            if st.on_failure not in ("discard", "recycle"):
                raise StrategyError(f"{st.name}: on_failure must be discard or recycle")
            sizes[st.name] = 1 + st.legs * (sizes[st.block] - 1)
            suspect[st.name] = False
            continue
        if st.fusion not in ("I", "II"):
            raise StrategyError(f"{st.name}: fusion must be 'I' or 'II'")
        if len(st.inputs) != 2:
            raise StrategyError(f"{st.name}: exactly two inputs required")
        for ref in st.inputs:
            if ref not in sizes:
                raise StrategyError(f"{st.name}: input {ref!r} is not defined earlier")
        a, b = (sizes[r] for r in st.inputs)
        if st.point not in ("regular", "suspect"):
            raise StrategyError(f"{st.name}: point must be regular or suspect")
        if st.point == "suspect" and not all(suspect[r] for r in st.inputs):
            raise StrategyError(f"{st.name}: suspect-point fusion needs inputs made by a type-I join")
        if st.on_failure not in ("discard", "recycle"):
            raise StrategyError(f"{st.name}: on_failure must be discard or recycle")
        if st.fusion == "I":
            if st.on_failure == "recycle":
                raise StrategyError(f"{st.name}: a failed type-I join leaves nothing to recycle")
            sizes[st.name] = a + b - 1
            suspect[st.name] = True
        else:
            if a + b - 2 < 1:
                raise StrategyError(f"{st.name}: type-II join of sizes {a}, {b} leaves nothing")
            sizes[st.name] = a + b - 2
            lingering = any(suspect[r] for r in st.inputs) and st.point == "regular"
            suspect[st.name] = lingering
    if s.target not in sizes:
        raise StrategyError(f"unknown target {s.target!r}")
    return sizes, suspect


def validate_strategy(s: BuildStrategy) -> None:
    if not s.primitives:
        raise StrategyError("at least one primitive is required")
    _layout(s)


# ---------------------------------------------------------------------------
# declarative documents


def strategy_from_dict(doc: dict[str, Any]) -> BuildStrategy:
    """Build a strategy from a parsed document (see ``strategies/*.json``)."""
    if not isinstance(doc, dict):
        raise StrategyError("strategy document must be a mapping")
    if doc.get("schema") != SCHEMA:
        raise StrategyError(f"schema must be {SCHEMA!r}, got {doc.get('schema')!r}")
    for key in ("name", "primitives", "steps", "target"):
        if key not in doc:
            raise StrategyError(f"missing field {key!r}")
    try:
        prims = tuple(Primitive(p["name"], int(p["size"]), float(p.get("cost", 1.0))) for p in doc["primitives"])
        steps = []
        for st in doc["steps"]:
            kind = st.get("kind", "fusion")
            if kind == "encoder":
                steps.append(EncoderStep(st["name"], st["base"], st["block"], int(st["legs"]), st.get("on_failure", "recycle")))
            elif kind == "fusion":
                steps.append(
                    FusionStep(
                        st["name"], str(st["fusion"]), tuple(st["inputs"]),
                        st.get("point", "regular"), st.get("on_failure", "discard"),
                    )
                )
            else:
                raise StrategyError(f"unknown step kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise StrategyError(f"bad step or primitive entry: {exc!r}") from None
    ref = doc.get("reference_cost")
    return BuildStrategy(
        doc["name"], prims, tuple(steps), doc["target"],
        doc.get("description", ""), None if ref is None else float(ref),
    )


def strategy_to_dict(s: BuildStrategy) -> dict[str, Any]:
    steps = []
    for st in s.steps:
        if isinstance(st, EncoderStep):
            d = {"kind": "encoder", **asdict(st)}
        else:
            d = {"kind": "fusion", **asdict(st)}
            d["inputs"] = list(st.inputs)
        steps.append(d)
    doc = {
        "schema": SCHEMA,
        "name": s.name,
        "description": s.description,
        "primitives": [asdict(p) for p in s.primitives],
        "steps": steps,
        "target": s.target,
    }
    if s.reference_cost is not None:
        doc["reference_cost"] = s.reference_cost
    return doc


def load_strategy(path: str | Path) -> BuildStrategy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StrategyError(f"{path}: not valid JSON ({exc})") from None
    return strategy_from_dict(doc)


# ---------------------------------------------------------------------------
# built-ins

_BELL = (Primitive("bell", 2),)
_SUSPECT_STEPS = (
    FusionStep("z3", "I", ("bell", "bell")),
    FusionStep("z4", "I", ("z3", "bell")),
    FusionStep("z5", "I", ("z3", "z3")),
    FusionStep("z8", "II", ("z5", "z5"), point="suspect", on_failure="recycle"),
)


def builtin_strategies() -> dict[str, BuildStrategy]:
    return {
        "bell3": BuildStrategy("bell3", _BELL, (FusionStep("z3", "I", ("bell", "bell")),), "z3",
                               "one type-I join of two Bell pairs", 4.0),
        "suspect-8": BuildStrategy("suspect-8", _BELL, _SUSPECT_STEPS, "z8",
                                   "3 -> 5 by type-I joins, 5 + 5 -> 8 by type-II at the suspect modes", 44.0),
        "encoder-q2": BuildStrategy("encoder-q2", _BELL, _SUSPECT_STEPS + (EncoderStep("enc", "z3", "z8", 2),), "enc",
                                    "base |0>^(3) with two 8-photon legs", 169.0),
        "encoder-q3": BuildStrategy("encoder-q3", _BELL, _SUSPECT_STEPS + (EncoderStep("enc", "z4", "z8", 3),), "enc",
                                    "base |0>^(4) with three 8-photon legs", 338.0),
    }


# ---------------------------------------------------------------------------
# analytic evaluation


@dataclass(frozen=True)
class CostReport:
    strategy: str
    expected_bell_pairs: float
    expected_fusion_attempts: float
    target_photons: int
    variance: float | None = None
    p95: float | None = None
    runs: int | None = None
    std_error: float | None = None
    reference_cost: float | None = None

    def __post_init__(self):
        if self.expected_bell_pairs < self.target_photons / 2 - 1e-9:
            raise AssertionError("cost below the photon-count floor")

    @property
    def relative_gap(self) -> float | None:
        if self.reference_cost is None:
            return None
        return self.expected_bell_pairs / self.reference_cost - 1.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["relative_gap"] = self.relative_gap
        return d


def fusion_success(fusion: str, eff: EfficiencyParams | None = None, override: float | None = None) -> float:
    """Success probability of a join: 1/2 times the chance both photons register."""
    if override is not None:
        return override
    eff = EfficiencyParams() if eff is None else eff
    return 0.5 * (eff.eta_d * eff.eta_s) ** 2


@dataclass
class _Catalogue:
    """Expected (bell pairs, attempts) per product name, built in order."""

    strategy: BuildStrategy
    p: float
    cost: dict[str, tuple[float, float]] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    # recycle decisions: (remnant size, input, step) -> "topup:<piece>" or "pool"
    policy: dict[tuple[int, str, str], str] = field(default_factory=dict)
    rho: dict[tuple[int, str, str], tuple[float, float]] = field(default_factory=dict)

    def sizes(self) -> dict[str, int]:
        return self.strategy.sizes()

    def credit(self, size: int, before: str | None = None) -> tuple[float, float, str | None]:
        """Cheapest earlier product of ``size``: (C, A, name)."""
        best = (0.0, 0.0, None)
        sizes = self.sizes()
        for name in self.order:
            if name == before:
                break
            if sizes[name] == size and (best[2] is None or self.cost[name][0] < best[0]):
                best = (*self.cost[name], name)
        return best

    def restore(self, k: int, target: str, upto: str) -> tuple[float, float]:
        """Cheapest way to replace an input ``target`` given a size-``k`` remnant.

        Only products listed before ``upto`` can serve as top-up pieces.
        """
        key = (k, target, upto)
        if key in self.rho:
            return self.rho[key]
        s = self.sizes()[target]
        c_in, a_in = self.cost[target]
        cc, ca, _ = self.credit(k, upto)
        best = (c_in - cc, a_in - ca)
        choice = "pool"
        if k >= 2:
            _, _, piece = self.credit(s - k + 2, upto)
            if piece is not None and piece != target:
                cp, ap = self.cost[piece]
                sub_c, sub_a = self.restore(k - 1, target, upto)
                rc, ra, _ = self.credit(self.sizes()[piece] - 1, upto)
                top = (
                    cp + (1 - self.p) * (sub_c - rc),
                    ap + 1 + (1 - self.p) * (sub_a - ra),
                )
                if top[0] < best[0]:
                    best, choice = top, f"topup:{piece}"
        self.rho[key] = best
        self.policy[key] = choice
        return best

    def remnant_value(self, k: int, target: str, upto: str) -> tuple[float, float]:
        c_in, a_in = self.cost[target]
        rc, ra = self.restore(k, target, upto)
        return c_in - rc, a_in - ra


def encoder_chain(legs: int, p: float) -> dict[str, float]:
    """Expected rounds, join attempts and remnants for growing ``legs`` legs.

    States ``k = 0 .. legs-1`` count legs already grown. From ``k`` a join
    succeeds with ``p`` (moving to ``k+1``, or absorbing at ``legs``) and
    otherwise returns to ``0`` with ``k + 1`` remnants.
    """
    Q = np.zeros((legs, legs))
    for k in range(legs):
        if k + 1 < legs:
            Q[k, k + 1] += p
        Q[k, 0] += 1 - p
    N = np.linalg.inv(np.eye(legs) - Q)
    visits = N[0]
    attempts = float(visits.sum())
    failures = float(((1 - p) * visits).sum())
    remnants = float(((1 - p) * visits * (np.arange(legs) + 1)).sum())
    return {"rounds": 1.0 + failures, "attempts": attempts, "remnants": remnants}


def _evaluate(strategy: BuildStrategy, p: float) -> _Catalogue:
    cat = _Catalogue(strategy, p)
    for prim in strategy.primitives:
        cat.cost[prim.name] = (prim.cost, 0.0)
        cat.order.append(prim.name)
    sizes = strategy.sizes()
    for st in strategy.steps:
        if isinstance(st, EncoderStep):
            ch = encoder_chain(st.legs, p)
            cb, ab = cat.cost[st.base]
            ck, ak = cat.cost[st.block]
            if st.on_failure == "recycle":
                vc, va = cat.remnant_value(sizes[st.block] - 1, st.block, st.name)
            else:
                vc = va = 0.0
            c = ch["rounds"] * cb + ch["attempts"] * ck - ch["remnants"] * vc
            a = ch["rounds"] * ab + ch["attempts"] * (ak + 1) - ch["remnants"] * va
        else:
            (ca, aa), (cb, ab) = (cat.cost[i] for i in st.inputs)
            vc = va = 0.0
            if st.fusion == "II" and st.on_failure == "recycle":
                for ref in st.inputs:
                    c_, a_ = cat.remnant_value(sizes[ref] - 1, ref, st.name)
                    vc += c_
                    va += a_
            c = (ca + cb - (1 - p) * vc) / p
            a = (aa + ab + 1 - (1 - p) * va) / p
        cat.cost[st.name] = (c, a)
        cat.order.append(st.name)
    return cat


def evaluate_strategy(
    strategy: BuildStrategy,
    eff: EfficiencyParams | None = None,
    success_prob: float | None = None,
) -> CostReport:
    """Expected Bell-pair and fusion-attempt cost of the strategy's target."""
    p = fusion_success("II", eff, success_prob)
    if not 0.0 < p <= 1.0:
        raise ValueError("fusion success probability must lie in (0, 1]")
    cat = _evaluate(strategy, p)
    c, a = cat.cost[strategy.target]
    return CostReport(strategy.name, c, a, strategy.target_photons(), reference_cost=strategy.reference_cost)


def catalogue_costs(strategy: BuildStrategy, success_prob: float = 0.5) -> dict[str, float]:
    """Expected Bell-pair cost of every product in the strategy."""
    cat = _evaluate(strategy, success_prob)
    return {k: v[0] for k, v in cat.cost.items()}


def expected_cost_bell3(success_prob: float = 0.5) -> CostReport:
    """Geometric cost of one ``|0>^(3)`` from Bell pairs: ``2 / p``."""
    return evaluate_strategy(builtin_strategies()["bell3"], success_prob=success_prob)


def encoder_resource_cost(
    legs: int,
    block_size: int = 8,
    strategy: BuildStrategy | None = None,
    success_prob: float | None = None,
) -> CostReport:
    """Cost of the encoder resource with ``legs`` blocks of ``block_size`` photons.

    The default catalogue is the suspect-mode factory for 8-photon blocks
    plus type-I ladders for the base. Other block sizes use
    :func:`cheapest_catalogue`.
    """
    if legs < 2:
        raise ValueError("the encoder resource needs at least two legs")
    if strategy is None:
        if block_size == 8:
            base = _ladder_steps(legs + 1, _SUSPECT_STEPS)
            steps = _SUSPECT_STEPS + base
            block = "z8"
        else:
            steps = cheapest_catalogue(max(block_size, legs + 1)).steps
            block = f"z{block_size}"
        base_name = f"z{legs + 1}" if legs + 1 > 2 else "bell"
        strategy = BuildStrategy(
            f"encoder-q{legs}", _BELL, steps + (EncoderStep("enc", base_name, block, legs),), "enc",
            f"base |0>^({legs + 1}) with {legs} legs of {block_size} photons",
        )
    return evaluate_strategy(strategy, success_prob=success_prob)


def _ladder_steps(size: int, existing: tuple) -> tuple[FusionStep, ...]:
    """Type-I steps adding Bell pairs until a product of ``size`` exists."""
    have = {"bell": 2}
    for st in existing:
        have[st.name] = int(st.name[1:]) if st.name[1:].isdigit() else -1
    extra = []
    k = max(s for s in have.values() if s <= size)
    while k < size:
        prev = next(n for n, s in have.items() if s == k)
        name = f"z{k + 1}"
        extra.append(FusionStep(name, "I", (prev, "bell")))
        have[name] = k + 1
        k += 1
    return tuple(extra)


def cheapest_catalogue(max_size: int, success_prob: float = 0.5) -> BuildStrategy:
    """Greedy catalogue ``z3 .. z{max_size}``: each size keeps its cheapest recipe.

    Candidates are every type-I join ``a + b - 1`` and recycled type-II join
    ``a + b - 2`` of smaller catalogue entries.
    """
    if max_size < 3:
        raise ValueError("max_size must be >= 3")
    prims = _BELL
    steps: list[FusionStep] = []
    names = {2: "bell"}
    for size in range(3, max_size + 1):
        best = None
        for a in range(2, size):
            for b in range(a, size):
                for fusion, total in (("I", a + b - 1), ("II", a + b - 2)):
                    if total != size or a not in names or b not in names:
                        continue
                    cand = FusionStep(
                        f"z{size}", fusion, (names[a], names[b]),
                        on_failure="recycle" if fusion == "II" else "discard",
                    )
                    trial = BuildStrategy("trial", prims, tuple(steps) + (cand,), cand.name)
                    c = evaluate_strategy(trial, success_prob=success_prob).expected_bell_pairs
                    if best is None or c < best[0] - 1e-12:
                        best = (c, cand)
        steps.append(best[1])
        names[size] = best[1].name
    return BuildStrategy(f"cheapest-{max_size}", prims, tuple(steps), f"z{max_size}")


# ---------------------------------------------------------------------------
# factory simulation


class _Uniforms:
    """Buffered uniform draws from one generator."""

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self.rng, self.block = rng, block
        self.buf = rng.random(block)
        self.i = 0

    def __call__(self) -> float:
        if self.i == self.block:
            self.buf = self.rng.random(self.block)
            self.i = 0
        u = self.buf[self.i]
        self.i += 1
        return u


class _Factory:
    """One factory run: fresh builds, a size-keyed pool and top-up restores."""

    def __init__(self, cat: _Catalogue, draw: _Uniforms):
        self.cat, self.draw = cat, draw
        self.sizes = cat.sizes()
        self.steps = {st.name: st for st in cat.strategy.steps}
        self.prims = {p.name: p for p in cat.strategy.primitives}
        self.pool: dict[int, int] = {}
        self.pool_names: dict[int, str] = {}
        self.spent = 0.0
        self.attempts = 0
        self.overflow_credit = 0.0

    def obtain(self, name: str) -> None:
        """Provide one ``name``: from the pool if possible, else build it."""
        k = self.sizes[name]
        if name not in self.prims and self.pool.get(k, 0):
            self.pool[k] -= 1
            return
        self.build(name)

    def bank(self, size: int, upto: str) -> None:
        """Put a remnant in the pool if the catalogue before ``upto`` can value it."""
        _, _, name = self.cat.credit(size, upto)
        if name is None:
            return
        if self.pool.get(size, 0) >= POOL_CAP:
            self.overflow_credit += self.value_of(name)
            return
        self.pool[size] = self.pool.get(size, 0) + 1
        self.pool_names[size] = name

    def value_of(self, name: str) -> float:
        """Net cost of an independent fresh build of ``name``."""
        sub = _Factory(self.cat, self.draw)
        sub.build(name)
        return sub.net()

    def net(self) -> float:
        leftover = sum(self.value_of(self.pool_names[k]) for k, m in self.pool.items() for _ in range(m))
        return self.spent - leftover - self.overflow_credit

    def restore(self, k: int, target: str, upto: str) -> bool:
        """Turn a size-``k`` remnant into a ready ``target``; False means banked."""
        while True:
            choice = self.cat.policy.get((k, target, upto), "pool")
            if choice == "pool":
                self.bank(k, upto)
                return False
            piece = choice.split(":", 1)[1]
            self.obtain(piece)
            self.attempts += 1
            if self.draw() < self.cat.p:
                return True
            self.bank(self.sizes[piece] - 1, upto)
            k -= 1

    def build(self, name: str) -> None:
        if name in self.prims:
            self.spent += self.prims[name].cost
            return
        st = self.steps[name]
        if isinstance(st, EncoderStep):
            self._encoder(st)
            return
        ready = [False, False]
        recycle = st.fusion == "II" and st.on_failure == "recycle"
        while True:
            for slot, ref in enumerate(st.inputs):
                if not ready[slot]:
                    self.obtain(ref)
                ready[slot] = False
            self.attempts += 1
            if self.draw() < self.cat.p:
                return
            if recycle:
                for slot, ref in enumerate(st.inputs):
                    ready[slot] = self.restore(self.sizes[ref] - 1, ref, st.name)

    def _encoder(self, st: EncoderStep) -> None:
        spare = 0  # restored blocks waiting to be used
        remnant = self.sizes[st.block] - 1
        while True:
            self.obtain(st.base)
            grown = 0
            while grown < st.legs:
                if spare:
                    spare -= 1
                else:
                    self.obtain(st.block)
                self.attempts += 1
                if self.draw() < self.cat.p:
                    grown += 1
                    continue
                if st.on_failure == "recycle":
                    for _ in range(grown + 1):
                        spare += self.restore(remnant, st.block, st.name)
                break
            if grown == st.legs:
                # unused restored blocks are worth a fresh block each
                for _ in range(spare):
                    sub = _Factory(self.cat, self.draw)
                    sub.build(st.block)
                    self.overflow_credit += sub.net()
                return


def _simulate_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    strategy, p, seed, chunk, runs = args
    from .protocol import RngStream

    cat = _evaluate(strategy, p)
    draw = _Uniforms(RngStream(seed, chunk, lane=4).generator())
    costs = np.empty(runs)
    attempts = np.empty(runs)
    for r in range(runs):
        f = _Factory(cat, draw)
        f.build(strategy.target)
        costs[r] = f.net()
        attempts[r] = f.attempts
    return costs, attempts


def simulate_factory(
    strategy: BuildStrategy,
    runs: int,
    seed: int = 0,
    success_prob: float = 0.5,
    workers: int = 1,
    return_samples: bool = False,
):
    """Monte Carlo factory runs; each run builds one target from an empty pool.

    Remnants left in the pool at the end of a run are credited with the net
    cost of an independent fresh build of the same size, which keeps the
    per-run mean equal to the renewal value. Runs are split into fixed chunks
    with their own substreams, so results do not depend on ``workers``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    chunks = [(strategy, success_prob, seed, c, min(CHUNK_RUNS, runs - c * CHUNK_RUNS))
              for c in range(math.ceil(runs / CHUNK_RUNS))]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, chunks))
    else:
        parts = [_simulate_chunk(c) for c in chunks]
    costs = np.concatenate([c for c, _ in parts])
    attempts = np.concatenate([a for _, a in parts])
    var = float(costs.var(ddof=1)) if runs > 1 else 0.0
    rep = CostReport(
        strategy.name,
        float(costs.mean()),
        float(attempts.mean()),
        strategy.target_photons(),
        variance=var,
        p95=float(np.percentile(costs, 95)),
        runs=runs,
        std_error=math.sqrt(var / runs),
        reference_cost=strategy.reference_cost,
    )
    return (rep, costs) if return_samples else rep


# ---------------------------------------------------------------------------
# suspect-mode soundness


@dataclass(frozen=True)
class SoundnessCase:
    pattern: str
    final_success_probability: float
    min_success_fidelity: float | None
    vacuum_success_probability: float


@dataclass(frozen=True)
class SoundnessReport:
    cases: tuple[SoundnessCase, ...]
    counterexample: SoundnessCase

    @property
    def sound(self) -> bool:
        for c in self.cases:
            if c.pattern == "clean":
                if c.min_success_fidelity is None or c.min_success_fidelity < 1 - 1e-10:
                    return False
            elif c.final_success_probability > 1e-12:
                return False
        # a vacuum away from the suspect point must slip through
        return self.counterexample.vacuum_success_probability > 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sound"] = self.sound
        return d


def _z3_branches(tag: str, vacuum: str | None) -> list[tuple[float, po.PhotonicState, str]]:
    """``|0>^(3)`` from two Bell pairs via the type-I join.

    ``vacuum`` names an input photon to drop before the join ("a0", "a1",
    "b0", "b1"). Returns success branches (p, state, suspect label).
    """
    a = po.make_parity_zero(2, labels=[f"{tag}a0", f"{tag}a1"])
    b = po.make_parity_zero(2, labels=[f"{tag}b0", f"{tag}b1"])
    st = po.tensor(a, b)
    branches = [(1.0, st)]
    if vacuum is not None:
        branches = [(lb.probability, lb.post_state) for lb in po.loss_branches(st, f"{tag}{vacuum}")]
    out = []
    for p, s in branches:
        for o in po.fuse_join_type_i(s, f"{tag}a1", f"{tag}b0", out_label=f"{tag}s"):
            if o.kind is OutcomeKind.FUSION_SUCCESS:
                out.append((p * o.probability, o.post_state, f"{tag}s"))
    return out


def _join_i(branches_a, branches_b, out: str):
    res = []
    for pa, sa, ua in branches_a:
        for pb, sb, ub in branches_b:
            st = po.tensor(sa, sb)
            for o in po.fuse_join_type_i(st, ua, ub, out_label=out):
                if o.kind is OutcomeKind.FUSION_SUCCESS:
                    res.append((pa * pb * o.probability, o.post_state, out))
    return res


def _final_ii(branches_a, branches_b, at: tuple[str, str] | None = None):
    """Type-II join of two z5 branches; ``at`` overrides the fusion photons."""
    success = []
    for pa, sa, ua in branches_a:
        for pb, sb, ub in branches_b:
            st = po.tensor(sa, sb)
            qa, qb = at if at is not None else (ua, ub)
            # a minus sign is a logical Z on either remnant block
            left = [l for l in sa.present if l != qa]
            for o in po.fuse_type_ii(st, qa, qb, phase_fix=left):
                if o.kind is OutcomeKind.FUSION_SUCCESS:
                    success.append((pa * pb * o.probability, o.post_state))
    return success


def _drop_suspect(branches, label: str):
    """Replace each z5 branch by its loss branches at ``label``."""
    out = []
    for p, st, u in branches:
        for lb in po.loss_branches(st, label):
            out.append((p * lb.probability, lb.post_state, u))
    return out


def _pipeline(vacuum: dict[str, str], final_at: tuple[str, str] | None = None):
    """Run 3 -> 5 -> 8.

    ``vacuum`` maps a z3 tag ("A".."D") to the Bell-pair photon dropped before
    its join, or a z5 tag ("L", "R") to ``"suspect"`` for a vacuum placed
    directly on that suspect output.
    """
    z3 = {t: _z3_branches(t, vacuum.get(t)) for t in ("A", "B", "C", "D")}
    z5l = _join_i(z3["A"], z3["B"], "L")
    z5r = _join_i(z3["C"], z3["D"], "R")
    if "L" in vacuum:
        z5l = _drop_suspect(z5l, "L")
    if "R" in vacuum:
        z5r = _drop_suspect(z5r, "R")
    return z5l, z5r, _final_ii(z5l, z5r, final_at)


def verify_suspect_mode_soundness() -> SoundnessReport:
    """Exact check that the final type-II join vetoes suspect vacua.

    Patterns drop one photon from a Bell pair feeding one of the four
    ``|0>^(3)`` joins (each drop that can fake a type-I success), and the
    combination of two drops on the two sides. A clean run must yield
    ``|0>^(8)``. The counterexample drops a photon that is not on the
    suspect path and fuses at a different photon, which lets a vacuum
    survive into an apparent success.
    """
    cases = []
    z5l, z5r, fin = _pipeline({})
    total = sum(p for p, _ in fin)
    attempts = sum(pa for pa, _, _ in z5l) * sum(pb for pb, _, _ in z5r)
    fids = [po.fidelity(s, po.make_parity_zero(8, labels=s.present)) for _, s in fin]
    cases.append(SoundnessCase("clean", total / attempts, min(fids), 0.0))

    patterns = [{t: v} for t in ("A", "B", "C", "D") for v in ("a1", "b0")]
    patterns += [{"A": "a1", "C": "b0"}, {"B": "b0", "D": "a1"}]
    patterns += [{"L": "suspect"}, {"R": "suspect"}, {"L": "suspect", "R": "suspect"}]
    for pat in patterns:
        z5l, z5r, fin = _pipeline(pat)
        reached = sum(pa for pa, _, _ in z5l) * sum(pb for pb, _, _ in z5r)
        if reached == 0:
            cases.append(SoundnessCase(_pat_name(pat), 0.0, None, 0.0))
            continue
        p_fin = sum(p for p, _ in fin) / reached
        cases.append(SoundnessCase(_pat_name(pat), p_fin, None, p_fin))

    return SoundnessReport(tuple(cases), _counterexample())


def _pat_name(pat: dict[str, str]) -> str:
    return ",".join(f"{k}:{v}" for k, v in sorted(pat.items()))


def _counterexample() -> SoundnessCase:
    """Final join away from the suspect modes with a vacuum suspect upstream.

    The left z5 carries a vacuum at its suspect output ``L``. Fusing the
    final type-II join at regular photons leaves ``L`` untouched, so the
    join can herald success while the product is missing a photon.
    """
    z5l, z5r, _ = _pipeline({"A": "a1"})
    vacuum_success = 0.0
    reached = sum(pa for pa, _, _ in z5l) * sum(pb for pb, _, _ in z5r)
    for pa, sa, ua in z5l:
        for pb, sb, ub in z5r:
            st = po.tensor(sa, sb)
            qa = next(l for l in sa.present if l != ua)
            qb = next(l for l in sb.present if l != ub)
            for o in po.fuse_type_ii(st, qa, qb):
                if o.kind is OutcomeKind.FUSION_SUCCESS and o.post_state.lost:
                    vacuum_success += pa * pb * o.probability
    p = vacuum_success / reached if reached else 0.0
    return SoundnessCase("A:a1@regular-point", p, None, p)
