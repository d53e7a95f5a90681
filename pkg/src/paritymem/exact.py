"""Exact quantum enumeration of the encoder and memory cycle at unit efficiency.

These routines drive :mod:`paritymem.oracle` through the same sequence of
fusions and measurements the event model assumes, merging branches whose
corrected post-states coincide. They give exact probabilities (and
fidelities with the intended logical states) for small ``n`` and ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle as po
from .oracle import OutcomeKind, PhotonicState

MAX_EXACT_N = 4
MAX_EXACT_Q = 2


def _check_sizes(n: int, q: int, cycle: bool) -> None:
    if n < 2 or q < 1:
        raise ValueError("need n >= 2 and q >= 1")
    qubits = (q + 1) * n + 1 if cycle else n + q * n + 1
    if n > MAX_EXACT_N or q > MAX_EXACT_Q or qubits > po.MAX_QUBITS:
        raise po.SizeLimitError(
            f"exact enumeration supports n <= {MAX_EXACT_N}, q <= {MAX_EXACT_Q} (requested n={n}, q={q})"
        )


def block_labels(tag: str, n: int) -> list[str]:
    return [f"{tag}{i}" for i in range(n)]


def encoder_resource(n: int, q: int, tag: str = "r") -> PhotonicState:
    """``(|0>|0>^(n)...|0>^(n) + |1>|1>^(n)...|1>^(n)) / sqrt 2`` with head ``{tag}h``."""
    labels = [f"{tag}h"] + [f"{tag}{b}_{i}" for b in range(q) for i in range(n)]
    zero = np.zeros(2 ** (1 + q * n), complex)
    one = np.zeros_like(zero)
    z = po.make_parity_zero(n).amplitudes
    o = po.make_parity_plus(0, 1, n).amplitudes
    v0, v1 = np.array([1.0 + 0j]), np.array([1.0 + 0j])
    for _ in range(q):
        v0, v1 = np.kron(v0, z), np.kron(v1, o)
    zero = np.kron([1, 0], v0)
    one = np.kron([0, 1], v1)
    return po.from_amplitudes((zero + one) / np.sqrt(2), labels)


def logical_target(alpha, beta, blocks: list[list[str]]) -> PhotonicState:
    """``alpha |0>^(n)...|0>^(n) + beta |1>^(n)...|1>^(n)`` over the given blocks."""
    v0, v1 = np.array([1.0 + 0j]), np.array([1.0 + 0j])
    for blk in blocks:
        n = len(blk)
        v0 = np.kron(v0, po.make_parity_zero(n).amplitudes)
        v1 = np.kron(v1, po.make_parity_plus(0, 1, n).amplitudes)
    return po.from_amplitudes(alpha * v0 + beta * v1, [l for b in blocks for l in b])


def _merge(items: list[tuple[float, PhotonicState]], tol: float = 1e-10) -> tuple[float, PhotonicState]:
    """Sum probabilities of branches that must share one corrected state."""
    p0, s0 = items[0]
    for _, s in items[1:]:
        if abs(po.fidelity(s, s0) - 1.0) > tol:
            raise AssertionError("branches expected to coincide after correction differ")
    return sum(p for p, _ in items), s0


@dataclass
class ExactEncoder:
    """Exact outcome distribution of one encode at unit efficiency."""

    n: int
    q: int
    success_by_attempt: dict[int, float] = field(default_factory=dict)
    failure_probability: float = 0.0
    min_fidelity: float = 1.0
    final_states: list[tuple[float, PhotonicState]] = field(default_factory=list)

    @property
    def success_probability(self) -> float:
        return sum(self.success_by_attempt.values())


def _encode(
    mem: PhotonicState,
    block: list[str],
    n: int,
    q: int,
    tag: str,
) -> tuple[list[tuple[int, float, PhotonicState, list[list[str]]]], list[tuple[float, PhotonicState, list[str]]]]:
    """Encode ``block`` of ``mem``; any other blocks in ``mem`` ride along.

    Returns (successes, failures). A success is (attempt, p, state, new
    blocks). A failure is (p, state, surviving photons of ``block``).
    """
    successes = []
    falling = [(1.0, mem)]
    remaining = list(block)
    new_blocks = [[f"{tag}{b}_{i}" for i in range(n)] for b in range(q)]
    for attempt in range(1, n):
        fused = remaining[0]
        rest = remaining[1:]
        nxt = []
        for p, st in falling:
            res = encoder_resource(n, q, tag)
            joint = po.tensor(st, res)
            outs = po.fuse_type_ii(
                joint, fused, f"{tag}h",
                phase_fix=new_blocks[0],
                flip_a=rest[0] if rest else None,
            )
            win = [(p * o.probability, o.post_state) for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS]
            lose = [(p * o.probability, o.post_state) for o in outs if o.kind is OutcomeKind.FUSION_FAILURE]
            ps, s = _merge(win)
            # read every remaining old photon; odd parity means a logical X
            # on the new blocks, applied as X on one photon of each
            branches = [(ps, s, 0)]
            for l in rest:
                branches = [
                    (pb * br.probability, br.post_state, par ^ br.bit)
                    for pb, sb, par in branches
                    for br in po.measure_computational(sb, l)
                ]
            fixed = []
            for pb, sb, par in branches:
                if par:
                    for blk in new_blocks:
                        sb = po.apply_x(sb, blk[0])
                fixed.append((pb, sb))
            ps, s = _merge(fixed)
            successes.append((attempt, ps, s, new_blocks))
            # failure: the resource collapsed to a product state and is dropped
            for pf, sf in lose:
                sf = po.discard(sf, [l for blk in new_blocks for l in blk])
                nxt.append((pf, sf))
        if nxt:
            falling = [_merge(nxt)]
        else:
            falling = []
        remaining = rest
    failures = [(p, s, remaining) for p, s in falling]
    return successes, failures


def exact_encoder(n: int, q: int, alpha: complex = 0.6, beta: complex = 0.8) -> ExactEncoder:
    """Encode ``alpha|0>^(n) + beta|1>^(n)`` with fresh resources per attempt."""
    _check_sizes(n, q, cycle=False)
    mem = po.make_parity_plus(alpha, beta, n, labels=block_labels("m", n))
    wins, fails = _encode(mem, block_labels("m", n), n, q, "r")
    rep = ExactEncoder(n, q)
    for attempt, p, st, blocks in wins:
        f = po.fidelity(st, logical_target(alpha, beta, blocks))
        rep.success_by_attempt[attempt] = rep.success_by_attempt.get(attempt, 0.0) + p
        rep.min_fidelity = min(rep.min_fidelity, f)
        rep.final_states.append((p, st))
    for p, st, left in fails:
        f = po.fidelity(st, po.make_parity_plus(alpha, beta, len(left), labels=left))
        rep.min_fidelity = min(rep.min_fidelity, f)
        rep.failure_probability += p
    return rep


def _release(state: PhotonicState, block: list[str], keep_blocks: list[list[str]]) -> list[tuple[float, PhotonicState]]:
    """Diagonal measurement of one photon of ``block``; Z-fix on a ``-`` result.

    The rest of ``block`` is then a product state and is discarded.
    """
    out = []
    for br in po.measure_diagonal(state, block[0]):
        s = br.post_state
        if br.bit:
            s = po.apply_z_all(s, keep_blocks[0])
        s = po.discard(s, block[1:])
        out.append((br.probability, s))
    return out


@dataclass
class ExactCycle:
    n: int
    q: int
    success_probability: float
    min_fidelity: float


def exact_memory_cycle(n: int, q: int = 2, alpha: complex = 0.6, beta: complex = 0.8) -> ExactCycle:
    """Exact success probability of one cycle starting from the redundant state."""
    _check_sizes(n, q, cycle=True)
    blocks = [block_labels(f"p{b}_", n) for b in range(q)]
    state = logical_target(alpha, beta, blocks)
    live = [(1.0, state)]
    total = 0.0
    min_f = 1.0
    for b in range(q):
        rest = blocks[b + 1 :]
        next_live = []
        for p, st in live:
            wins, fails = _encode(st, blocks[b], n, q, f"c{b}r")
            for _, pw, sw, new in wins:
                branches = [(pw * p, sw)]
                for other in rest:
                    branches = [(pp * pr, sr) for pp, ss in branches for pr, sr in _release(ss, other, new)]
                for pp, ss in branches:
                    min_f = min(min_f, po.fidelity(ss, logical_target(alpha, beta, new)))
                    total += pp
            for pf, sf, left in fails:
                # the last photon of the failed block is measured diagonally
                for pr, sr in _release(sf, left, rest or [[]]) if rest else []:
                    next_live.append((pf * p * pr, sr))
        live = next_live
        if live:
            for _, s in live:
                min_f = min(min_f, po.fidelity(s, logical_target(alpha, beta, blocks[b + 1 :])))
    return ExactCycle(n, q, total, min_f)


@dataclass
class ExactLossRecovery:
    """Result of losing one photon of the block under encoding."""

    n: int
    detected_probability: float
    hidden_outcomes: tuple[int, ...]
    min_fidelity: float


def exact_loss_recovery(n: int, alpha: complex = 0.6, beta: complex = 0.8, lost_index: int = 0) -> ExactLossRecovery:
    """Two blocks in memory; the fused photon of the second is lost.

    The fusion can only herald the loss. Measuring a surviving photon of the
    damaged block diagonally must restore the logical state on the first
    block for either hidden outcome of the loss.
    """
    _check_sizes(n, 2, cycle=True)
    keep = block_labels("a", n)
    hit = block_labels("b", n)
    state = logical_target(alpha, beta, [keep, hit])
    detected = 0.0
    hidden = []
    min_f = 1.0
    target = po.make_parity_plus(alpha, beta, n, labels=keep)
    for lb in po.loss_branches(state, hit[lost_index]):
        hidden.append(lb.bit)
        joint = po.tensor(lb.post_state, encoder_resource(n, 2, "r"))
        for o in po.fuse_type_ii(joint, hit[lost_index], "rh"):
            if o.kind is OutcomeKind.LOSS_DETECTED:
                detected += lb.probability * o.probability
            s = po.discard(o.post_state, [f"r{b}_{i}" for b in range(2) for i in range(n)])
            survivors = [l for l in hit if l != hit[lost_index]]
            for pr, sr in _release(s, survivors, [keep]):
                min_f = min(min_f, po.fidelity(sr, target))
    return ExactLossRecovery(n, detected, tuple(hidden), min_f)
