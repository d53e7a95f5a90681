"""Property suite run by ``paritymem verify``.

Each check returns a :class:`PropertyResult`. :func:`run_suite` gathers them,
and the CLI turns the result into an exit status.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracle as po
from .analytic import CodeParams
from .exact import MAX_EXACT_N, MAX_EXACT_Q
from .oracle import OutcomeKind
from .protocol import DEFAULT_SEED, validate_against_oracle
from .resources import verify_suspect_mode_soundness

FIDELITY_TOL = 1e-10
PROB_TOL = 1e-12


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SuiteConfig:
    oracle_n_max: int = 3
    oracle_q_max: int = 2
    oracle_trials: int = 20_000
    loss_samples: int = 100_000
    seed: int = DEFAULT_SEED
    corrupt_fusion_sign: bool = False

    def __post_init__(self):
        if self.oracle_n_max < 2 or self.oracle_q_max < 1:
            raise ValueError("oracle sizes need n >= 2 and q >= 1")
        if self.oracle_n_max > MAX_EXACT_N or self.oracle_q_max > MAX_EXACT_Q:
            raise po.SizeLimitError(
                f"protocol-vs-oracle validation supports n <= {MAX_EXACT_N}, q <= {MAX_EXACT_Q}"
            )
        if self.oracle_trials < 1 or self.loss_samples < 1:
            raise ValueError("trial counts must be >= 1")


def _psi(m: int, labels, alpha=0.6, beta=0.8j):
    return po.make_parity_plus(alpha, beta, m, labels=labels)


def _normalized(outcomes) -> tuple[bool, float]:
    total = sum(o.probability for o in outcomes)
    norms = all(abs(o.post_state.norm() - 1) < PROB_TOL for o in outcomes)
    return norms and abs(total - 1) < PROB_TOL, total


def check_normalization(seed: int) -> PropertyResult:
    """Branch masses sum to one and every post-state has unit norm."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for k in (2, 3, 4, 5):
        v = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
        s = po.from_amplitudes(v / np.linalg.norm(v), [f"x{i}" for i in range(k)])
        lost = po.apply_loss(s, "x2", rng) if k > 2 else None
        groups = [
            po.fuse_type_ii(s, "x0", "x1", phase_fix=[] if k < 3 else ["x2"]),
            po.fuse_type_i(s, "x0", "x1"),
            po.fuse_join_type_i(s, "x0", "x1"),
            po.measure_computational(s, "x1"),
            po.measure_diagonal(s, "x0"),
            po.loss_branches(s, "x0"),
        ]
        if lost is not None:
            groups += [po.fuse_type_ii(lost, "x2", "x0"), po.fuse_type_i(lost, "x0", "x2")]
        for g in groups:
            good, total = _normalized(g)
            ok = ok and good
            worst = max(worst, abs(total - 1))
    return PropertyResult("normalization", ok, {"max_mass_error": worst})


def check_type_ii_extension(corrupt: bool = False) -> PropertyResult:
    """``|psi>^(m)`` fused with ``|0>^(n+2)`` gives ``|psi>^(m+n)`` with probability 1/2."""
    worst_p, worst_f = 0.0, 1.0
    for m in range(1, 5):
        for n in range(1, 4):
            a = [f"a{i}" for i in range(m)]
            b = [f"b{i}" for i in range(n + 2)]
            state = po.tensor(_psi(m, a), po.make_parity_zero(n + 2, labels=b))
            outs = po.fuse_type_ii(
                state, a[0], b[0], phase_fix=b[1:],
                flip_a=a[1] if m > 1 else None, flip_b=b[1], _corrupt_sign=corrupt,
            )
            wins = [o for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS]
            worst_p = max(worst_p, abs(sum(o.probability for o in wins) - 0.5))
            target = _psi(m + n, a[1:] + b[1:])
            for o in wins:
                worst_f = min(worst_f, po.fidelity(o.post_state, target))
            if m > 1:
                rest = po.tensor(_psi(m - 1, a[1:]), po.make_parity_zero(n + 1, labels=b[1:]))
                for o in outs:
                    if o.kind is OutcomeKind.FUSION_FAILURE:
                        worst_f = min(worst_f, po.fidelity(o.post_state, rest))
    ok = worst_p < PROB_TOL and worst_f > 1 - FIDELITY_TOL
    return PropertyResult("fusion-type-ii-extension", ok, {"max_mass_error": worst_p, "min_fidelity": worst_f})


def check_encoding_reduction() -> PropertyResult:
    """A computational read lowers the level by one, flipping the logical value on outcome 1."""
    worst = 1.0
    alpha, beta = 0.6, 0.8j
    for n in range(2, 7):
        labels = [f"q{i}" for i in range(n)]
        s = _psi(n, labels, alpha, beta)
        for j, l in enumerate(labels):
            rest = labels[:j] + labels[j + 1 :]
            for br in po.measure_computational(s, l):
                a, b = (alpha, beta) if br.bit == 0 else (beta, alpha)
                worst = min(worst, po.fidelity(br.post_state, _psi(n - 1, rest, a, b)))
    return PropertyResult("encoding-level-reduction", worst > 1 - FIDELITY_TOL, {"min_fidelity": worst})


def check_fail_safe(seed: int) -> PropertyResult:
    """Type-II never succeeds on a missing photon; the type-I join can."""
    rng = np.random.default_rng(seed)
    ii_success = 0.0
    ii_detected = 1.0
    fp = 0.0
    for n in (2, 3):
        a = [f"a{i}" for i in range(n)]
        b = [f"b{i}" for i in range(n)]
        s = po.tensor(po.make_parity_zero(n, labels=a), po.make_parity_zero(n, labels=b))
        for victim in (a[0], b[0]):
            lost = po.apply_loss(s, victim, rng)
            outs = po.fuse_type_ii(lost, a[0], b[0])
            ii_success = max(ii_success, sum(o.probability for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS))
            ii_detected = min(ii_detected, sum(o.probability for o in outs if o.kind is OutcomeKind.LOSS_DETECTED))
            fp = max(fp, sum(o.probability for o in po.fuse_join_type_i(lost, a[0], b[0]) if o.false_positive))
    ok = ii_success == 0.0 and abs(ii_detected - 1) < PROB_TOL and fp > 0
    detail = {"type_ii_success": ii_success, "type_ii_loss_detected": ii_detected, "type_i_false_positive": fp}
    return PropertyResult("fail-safe-asymmetry", ok, detail)


def check_logical_operators() -> PropertyResult:
    """Single-qubit X_theta and block-wide Z act as the logical gates."""
    worst = 1.0
    alpha, beta = 0.6, 0.8
    for n in range(1, 6):
        labels = [f"q{i}" for i in range(n)]
        s = _psi(n, labels, alpha, beta)
        for theta in (0.0, 0.3, math.pi / 2, math.pi):
            c, si = math.cos(theta / 2), 1j * math.sin(theta / 2)
            target = _psi(n, labels, c * alpha + si * beta, si * alpha + c * beta)
            for l in labels:
                worst = min(worst, po.fidelity(po.apply_x_rotation(s, l, theta), target))
        worst = min(worst, po.fidelity(po.apply_z_all(s, labels), _psi(n, labels, alpha, -beta)))
    return PropertyResult("logical-operators", worst > 1 - FIDELITY_TOL, {"min_fidelity": worst})


def check_loss_statistics(samples: int, seed: int) -> PropertyResult:
    """Hidden outcomes of sampled loss follow the reduced density matrix (5 sigma)."""
    rng = np.random.default_rng(seed)
    v = np.array([0.2, 0.5, -0.4j, 0.3, 0.1, 0.6j, 0.2, -0.2])
    s = po.from_amplitudes(v / np.linalg.norm(v), ["x0", "x1", "x2"])
    rho = np.einsum("ijk,ljk->il", s.tensor_view(), s.tensor_view().conj())
    p1 = float(rho[1, 1].real)
    ones = sum(dict(po.apply_loss(s, "x0", rng).hidden)["x0"] for _ in range(samples))
    sigma = math.sqrt(p1 * (1 - p1) / samples)
    z = (ones / samples - p1) / sigma
    return PropertyResult("loss-as-hidden-measurement", abs(z) <= 5, {"expected": p1, "observed": ones / samples, "z": z})


def check_protocol_oracle(cfg: SuiteConfig) -> PropertyResult:
    """Event-model branch frequencies against the exact enumeration."""
    runs = []
    ok = True
    for n in range(2, cfg.oracle_n_max + 1):
        for q in range(1, cfg.oracle_q_max + 1):
            v = validate_against_oracle(CodeParams(n, q), cfg.oracle_trials, cfg.seed)
            ok = ok and v.passed
            runs.append({"n": n, "q": q, "passed": v.passed, "max_abs_z": max(abs(c.z) for c in v.checks)})
    return PropertyResult("protocol-oracle-agreement", ok, {"runs": runs})


def check_suspect_soundness() -> PropertyResult:
    rep = verify_suspect_mode_soundness()
    detail = {
        "patterns": len(rep.cases),
        "max_vacuum_success": max(c.final_success_probability for c in rep.cases if c.pattern != "clean"),
        "counterexample_vacuum_success": rep.counterexample.vacuum_success_probability,
    }
    return PropertyResult("suspect-mode-soundness", rep.sound, detail)


def run_suite(cfg: SuiteConfig = SuiteConfig()) -> list[PropertyResult]:
    return [
        check_normalization(cfg.seed),
        check_type_ii_extension(cfg.corrupt_fusion_sign),
        check_encoding_reduction(),
        check_fail_safe(cfg.seed),
        check_logical_operators(),
        check_loss_statistics(cfg.loss_samples, cfg.seed),
        check_protocol_oracle(cfg),
        check_suspect_soundness(),
    ]
