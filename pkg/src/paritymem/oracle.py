"""Exact state-vector simulation of small registers of polarisation qubits.

A register is a dense complex vector over the computational basis of the
*present* qubits. Qubit ``i`` of the vector corresponds to ``labels[i]`` and
is the most significant bit of the basis index. Lost photons stay in the
label table with ``lost_mask`` set, so later operations can refuse them.

Conventions fixed here (only the correction rule is observable):

* ``|0>`` is H, ``|1>`` is V.
* Type-II fusion: the success detector pattern ``(s1, s2)`` with ``s = +1``
  for the diagonal detector and ``-1`` for the antidiagonal one applies
  ``(<00| + s1*s2 <11|) / 2``. A sign of ``-1`` is corrected by Z on the
  ``phase_fix`` qubits supplied by the caller.
* Type-I fusion mixes the H mode of ``a`` with the V mode of ``b``. A click
  on detector ``c0`` applies ``(|H><HH| + |V><VV|)/sqrt(2)``, a click on
  ``c1`` the same with a relative minus sign.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_QUBITS = 20
NORM_TOL = 1e-12
ZERO_PROB = 1e-15

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class OracleError(ValueError):
    """Invalid request to the oracle (lost qubit, bad label, ...)."""


class SizeLimitError(OracleError):
    """Register larger than :data:`MAX_QUBITS`."""


class OutcomeKind(str, enum.Enum):
    FUSION_SUCCESS = "fusion-success"
    FUSION_FAILURE = "fusion-failure"
    LOSS_DETECTED = "loss-detected"


@dataclass(frozen=True)
class ParityDescriptor:
    """Encoding level of a parity block and whether a logical Z is owed."""

    n: int
    logical_phase_flips_pending: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise OracleError("parity length must be >= 1")


@dataclass(frozen=True, eq=False)
class PhotonicState:
    """Pure state of the present qubits plus bookkeeping for lost ones.

    ``hidden`` records the computational outcome sampled when a photon was
    lost. The protocol layer must not read it; tests may.
    """

    amplitudes: np.ndarray
    qubit_labels: tuple[str, ...]
    lost_mask: tuple[bool, ...]
    hidden: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if len(self.qubit_labels) != len(self.lost_mask):
            raise OracleError("labels and lost_mask differ in length")
        if len(set(self.qubit_labels)) != len(self.qubit_labels):
            raise OracleError(f"duplicate labels in {self.qubit_labels}")
        k = len(self.present)
        if k > MAX_QUBITS:
            raise SizeLimitError(f"{k} qubits exceeds the cap of {MAX_QUBITS}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**k:
            raise OracleError(f"expected {2**k} amplitudes, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def present(self) -> tuple[str, ...]:
        return tuple(l for l, gone in zip(self.qubit_labels, self.lost_mask) if not gone)

    @property
    def lost(self) -> tuple[str, ...]:
        return tuple(l for l, gone in zip(self.qubit_labels, self.lost_mask) if gone)

    @property
    def n_present(self) -> int:
        return len(self.present)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_lost(self, label: str) -> bool:
        try:
            return self.lost_mask[self.qubit_labels.index(label)]
        except ValueError:
            raise OracleError(f"unknown qubit {label!r}") from None

    def axis(self, label: str) -> int:
        if self.is_lost(label):
            raise OracleError(f"qubit {label!r} is lost")
        return self.present.index(label)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_present)

    def amplitude_map(self, tol: float = 1e-12) -> dict[str, complex]:
        """Nonzero amplitudes keyed by bit strings in ``present`` order."""
        k = self.n_present
        return {
            format(i, f"0{k}b") if k else "": complex(a)
            for i, a in enumerate(self.amplitudes)
            if abs(a) > tol
        }


@dataclass(frozen=True)
class Branch:
    """One outcome of a single-qubit measurement or loss."""

    bit: int
    probability: float
    post_state: PhotonicState


@dataclass(frozen=True)
class MeasurementOutcome:
    """One detector pattern of a fusion measurement."""

    kind: OutcomeKind
    classical_bits: tuple[int, ...]
    probability: float
    post_state: PhotonicState
    pattern: str = ""
    false_positive: bool = False


# ---------------------------------------------------------------------------
# construction


def _default_labels(n: int, prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def _check_size(n: int) -> None:
    if n < 0:
        raise OracleError("negative register size")
    if n > MAX_QUBITS:
        raise SizeLimitError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")


def from_amplitudes(amplitudes, labels: Sequence[str]) -> PhotonicState:
    labels = tuple(labels)
    return PhotonicState(np.asarray(amplitudes, dtype=complex), labels, (False,) * len(labels))


def _parity_vector(n: int, parity: int) -> np.ndarray:
    idx = np.arange(2**n)
    weights = np.array([bin(i).count("1") for i in idx])
    vec = (weights % 2 == parity).astype(complex)
    return vec / np.linalg.norm(vec)


def make_parity_zero(n: int, labels: Sequence[str] | None = None, prefix: str = "q") -> PhotonicState:
    """``(|+>^n + |->^n)/sqrt 2``: the even-weight uniform superposition."""
    return make_parity_plus(1.0, 0.0, n, labels=labels, prefix=prefix)


def make_parity_plus(
    alpha: complex,
    beta: complex,
    n: int,
    labels: Sequence[str] | None = None,
    prefix: str = "q",
) -> PhotonicState:
    """``alpha |0>^(n) + beta |1>^(n)``."""
    if n < 1:
        raise OracleError("parity length must be >= 1")
    _check_size(n)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > NORM_TOL:
        raise OracleError("|alpha|^2 + |beta|^2 must equal 1")
    labels = _default_labels(n, prefix) if labels is None else tuple(labels)
    if len(labels) != n:
        raise OracleError("need one label per qubit")
    vec = alpha * _parity_vector(n, 0) + beta * _parity_vector(n, 1)
    return from_amplitudes(vec, labels)


def make_product(bits: str, labels: Sequence[str] | None = None, prefix: str = "q") -> PhotonicState:
    """Computational basis state, e.g. ``make_product("01")``."""
    n = len(bits)
    _check_size(n)
    labels = _default_labels(n, prefix) if labels is None else tuple(labels)
    vec = np.zeros(2**n, dtype=complex)
    vec[int(bits, 2) if bits else 0] = 1.0
    return from_amplitudes(vec, labels)


def tensor(*states: PhotonicState) -> PhotonicState:
    """Tensor product; present qubits are concatenated in argument order."""
    if not states:
        raise OracleError("need at least one state")
    labels = sum((s.qubit_labels for s in states), ())
    mask = sum((s.lost_mask for s in states), ())
    _check_size(sum(s.n_present for s in states))
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
    hidden = sum((s.hidden for s in states), ())
    return PhotonicState(amps, labels, mask, hidden)


def relabel(state: PhotonicState, mapping: dict[str, str]) -> PhotonicState:
    labels = tuple(mapping.get(l, l) for l in state.qubit_labels)
    hidden = tuple((mapping.get(l, l), b) for l, b in state.hidden)
    return replace(state, qubit_labels=labels, hidden=hidden)


# ---------------------------------------------------------------------------
# unitaries


def apply_single(state: PhotonicState, qubit: str, unitary: np.ndarray) -> PhotonicState:
    ax = state.axis(qubit)
    t = np.moveaxis(state.tensor_view(), ax, 0)
    t = np.tensordot(unitary, t, axes=([1], [0]))
    t = np.moveaxis(t, 0, ax)
    return replace(state, amplitudes=t.reshape(-1))


def apply_x_rotation(state: PhotonicState, qubit: str, theta: float) -> PhotonicState:
    """``cos(theta/2) I + i sin(theta/2) X`` on one physical qubit."""
    u = np.cos(theta / 2) * _I2 + 1j * np.sin(theta / 2) * _X
    return apply_single(state, qubit, u)


def apply_x(state: PhotonicState, qubit: str) -> PhotonicState:
    return apply_single(state, qubit, _X)


def apply_hadamard(state: PhotonicState, qubit: str) -> PhotonicState:
    return apply_single(state, qubit, _H)


def apply_z_all(state: PhotonicState, qubits: Iterable[str]) -> PhotonicState:
    """Z on every listed qubit. On a whole parity block this is logical Z."""
    qubits = list(qubits)
    for q in qubits:
        state.axis(q)  # raises on lost or unknown labels
    signs = np.ones(2**state.n_present)
    k = state.n_present
    idx = np.arange(2**k)
    for q in qubits:
        bit = (idx >> (k - 1 - state.axis(q))) & 1
        signs = signs * (1 - 2 * bit)
    return replace(state, amplitudes=state.amplitudes * signs)


# ---------------------------------------------------------------------------
# measurement and loss


def _remove(state: PhotonicState, qubit: str, vec: np.ndarray, lost: bool) -> PhotonicState:
    """Drop ``qubit`` from the register after projecting it out.

    ``lost=True`` keeps the label with the lost flag (a photon that vanished);
    ``lost=False`` removes the label entirely (a photon that was detected).
    """
    pos = state.qubit_labels.index(qubit)
    if lost:
        mask = list(state.lost_mask)
        mask[pos] = True
        return PhotonicState(vec, state.qubit_labels, tuple(mask), state.hidden)
    labels = state.qubit_labels[:pos] + state.qubit_labels[pos + 1 :]
    mask = state.lost_mask[:pos] + state.lost_mask[pos + 1 :]
    hidden = tuple(h for h in state.hidden if h[0] != qubit)
    return PhotonicState(vec, labels, mask, hidden)


def _project(state: PhotonicState, qubit: str, bra: np.ndarray) -> tuple[float, np.ndarray]:
    ax = state.axis(qubit)
    t = np.tensordot(bra, np.moveaxis(state.tensor_view(), ax, 0), axes=([0], [0]))
    vec = t.reshape(-1)
    p = float(np.vdot(vec, vec).real)
    return p, vec


def _branches(state: PhotonicState, qubit: str, basis: np.ndarray, lost: bool) -> list[Branch]:
    out = []
    for bit in (0, 1):
        p, vec = _project(state, qubit, basis[bit].conj())
        if p <= ZERO_PROB:
            continue
        post = _remove(state, qubit, vec / np.sqrt(p), lost)
        if lost:
            post = replace(post, hidden=post.hidden + ((qubit, bit),))
        out.append(Branch(bit, p, post))
    return out


_COMP = np.eye(2, dtype=complex)
_DIAG = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def measure_computational(state: PhotonicState, qubit: str) -> list[Branch]:
    """Z-basis measurement; zero-probability branches are omitted."""
    return _branches(state, qubit, _COMP, lost=False)


def measure_diagonal(state: PhotonicState, qubit: str) -> list[Branch]:
    """X-basis measurement. ``bit`` 0 means ``|+>``, 1 means ``|->``."""
    return _branches(state, qubit, _DIAG, lost=False)


def loss_branches(state: PhotonicState, qubit: str) -> list[Branch]:
    """Exact trajectory branches of losing ``qubit``."""
    return _branches(state, qubit, _COMP, lost=True)


def apply_loss(state: PhotonicState, qubit: str, rng: np.random.Generator) -> PhotonicState:
    """Lose ``qubit``: a computational measurement whose result is hidden."""
    if state.is_lost(qubit):
        raise OracleError(f"qubit {qubit!r} already lost")
    branches = loss_branches(state, qubit)
    u = rng.random()
    acc = 0.0
    for b in branches:
        acc += b.probability
        if u < acc:
            return b.post_state
    return branches[-1].post_state


def discard(state: PhotonicState, qubits: Iterable[str], tol: float = 1e-10) -> PhotonicState:
    """Remove qubits that are in a product state with the rest.

    Lost labels are dropped from the table. Raises if the remaining state is
    entangled with the discarded qubits.
    """
    qubits = list(qubits)
    drop_present = [q for q in qubits if not state.is_lost(q)]
    keep = [l for l in state.present if l not in drop_present]
    t = state.tensor_view()
    order = [state.axis(q) for q in keep] + [state.axis(q) for q in drop_present]
    mat = np.transpose(t, order).reshape(2 ** len(keep), 2 ** len(drop_present))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size > 1 and s[1] > tol:
        raise OracleError(f"qubits {drop_present} are entangled with the rest")
    vec = u[:, 0] * s[0]
    vec = vec / np.linalg.norm(vec)
    gone = set(qubits)
    labels = tuple(l for l in state.qubit_labels if l not in gone)
    mask = tuple(m for l, m in zip(state.qubit_labels, state.lost_mask) if l not in gone)
    # restore present order to the surviving label order
    present = [l for l, m in zip(labels, mask) if not m]
    perm = [keep.index(l) for l in present]
    vec = np.transpose(vec.reshape((2,) * len(keep)), perm).reshape(-1) if keep else vec
    hidden = tuple(h for h in state.hidden if h[0] not in gone)
    return PhotonicState(vec, labels, mask, hidden)


# ---------------------------------------------------------------------------
# fusion


def _two_qubit_apply(state: PhotonicState, a: str, b: str, kraus: np.ndarray) -> tuple[float, np.ndarray]:
    """Contract a 2-qubit-input Kraus operator with rows of any output size.

    ``kraus`` has shape ``(d_out, 4)`` with input index ``2*x_a + x_b``.
    Returns (probability, unnormalised vector with the output index first).
    """
    ax_a, ax_b = state.axis(a), state.axis(b)
    t = np.moveaxis(state.tensor_view(), (ax_a, ax_b), (0, 1))
    rest = t.reshape(4, -1)
    out = kraus @ rest
    p = float(np.vdot(out, out).real)
    return p, out


def _consume_two(state: PhotonicState, a: str, b: str, vec: np.ndarray) -> PhotonicState:
    """Register without ``a`` and ``b``; ``vec`` is over the remaining present qubits."""
    drop = {a, b}
    labels = tuple(l for l in state.qubit_labels if l not in drop)
    mask = tuple(m for l, m in zip(state.qubit_labels, state.lost_mask) if l not in drop)
    hidden = tuple(h for h in state.hidden if h[0] not in drop)
    return PhotonicState(vec.reshape(-1), labels, mask, hidden)


def _check_pair(state: PhotonicState, a: str, b: str) -> None:
    if a == b:
        raise OracleError("fusion needs two distinct qubits")
    state.is_lost(a)
    state.is_lost(b)


def _fusion_one_lost(state: PhotonicState, present: str, other: str, sign_label: str) -> list[MeasurementOutcome]:
    """The present photon is detected alone: loss is heralded."""
    out = []
    for x in (0, 1):
        p, vec = _project(state, present, _COMP[x])
        if p <= ZERO_PROB:
            continue
        for d in ("+", "-"):
            post = _consume_two(state, present, other, vec / np.sqrt(p))
            out.append(
                MeasurementOutcome(
                    OutcomeKind.LOSS_DETECTED, (x,), p / 2, post, pattern=f"{sign_label}{x}{d}"
                )
            )
    return out


def fuse_type_ii(
    state: PhotonicState,
    qubit_a: str,
    qubit_b: str,
    *,
    phase_fix: Sequence[str] = (),
    flip_a: str | None = None,
    flip_b: str | None = None,
    corrected: bool = True,
    _corrupt_sign: bool = False,
) -> list[MeasurementOutcome]:
    """Type-II fusion: PBS followed by diagonal-basis detection.

    Success patterns project onto ``|00> +- |11>`` and consume both inputs.
    Failure patterns measure both inputs in the computational basis. If a
    photon is missing the only outcome kind is ``LOSS_DETECTED``.

    With ``corrected=True`` heralded corrections are applied: Z on each of
    ``phase_fix`` after a ``-`` sign, X on ``flip_a`` (``flip_b``) when a
    failure finds ``qubit_a`` (``qubit_b``) in ``|1>``. ``_corrupt_sign`` is
    a test hook that inverts the sign convention.
    """
    _check_pair(state, qubit_a, qubit_b)
    lost_a, lost_b = state.is_lost(qubit_a), state.is_lost(qubit_b)
    if lost_a and lost_b:
        post = _consume_two(state, qubit_a, qubit_b, state.amplitudes)
        return [MeasurementOutcome(OutcomeKind.LOSS_DETECTED, (), 1.0, post, pattern="none")]
    if lost_a:
        return _fusion_one_lost(state, qubit_b, qubit_a, "b")
    if lost_b:
        return _fusion_one_lost(state, qubit_a, qubit_b, "a")

    outcomes = []
    for s1, s2 in itertools.product((1, -1), repeat=2):
        sign = s1 * s2
        kraus = np.array([[1, 0, 0, sign]], dtype=complex) / 2
        p, vec = _two_qubit_apply(state, qubit_a, qubit_b, kraus)
        if p <= ZERO_PROB:
            continue
        post = _consume_two(state, qubit_a, qubit_b, vec / np.sqrt(p))
        fix_sign = -sign if _corrupt_sign else sign
        if corrected and fix_sign < 0 and phase_fix:
            post = apply_z_all(post, phase_fix)
        pattern = ("+" if s1 > 0 else "-") + ("+" if s2 > 0 else "-")
        outcomes.append(MeasurementOutcome(OutcomeKind.FUSION_SUCCESS, (int(sign < 0),), p, post, pattern))

    # both photons in one output port: (a,b) = (0,1) or (1,0); two detector splits each
    for bits in ((0, 1), (1, 0)):
        col = 2 * bits[0] + bits[1]
        kraus = np.zeros((1, 4), dtype=complex)
        kraus[0, col] = 1 / np.sqrt(2)
        p, vec = _two_qubit_apply(state, qubit_a, qubit_b, kraus)
        if p <= ZERO_PROB:
            continue
        for d in ("++", "--"):
            post = _consume_two(state, qubit_a, qubit_b, vec / np.sqrt(p))
            if corrected:
                if bits[0] and flip_a is not None:
                    post = apply_x(post, flip_a)
                if bits[1] and flip_b is not None:
                    post = apply_x(post, flip_b)
            port = "out1" if bits == (0, 1) else "out2"
            outcomes.append(MeasurementOutcome(OutcomeKind.FUSION_FAILURE, bits, p, post, f"{port}{d}"))
    return outcomes


def fuse_type_i(
    state: PhotonicState,
    qubit_a: str,
    qubit_b: str,
    *,
    out_label: str | None = None,
) -> list[MeasurementOutcome]:
    """Bare type-I fusion: the H mode of ``a`` meets the V mode of ``b``.

    Exactly one click is reported as success and leaves one output qubit
    (modes ``b_H``, ``a_V``) labelled ``out_label`` (default ``qubit_a``).
    Two clicks (input HV) or none (input VH) are failures. A missing input
    can produce a single click with an empty output mode: that outcome is
    reported as success with ``false_positive=True`` and the output marked
    lost.
    """
    _check_pair(state, qubit_a, qubit_b)
    out_label = qubit_a if out_label is None else out_label
    lost_a, lost_b = state.is_lost(qubit_a), state.is_lost(qubit_b)
    others = [l for l in state.present if l not in (qubit_a, qubit_b)]

    def with_output(vec: np.ndarray, output_lost: bool) -> PhotonicState:
        """Insert the merged qubit where ``qubit_a`` sat in the label table."""
        base = _consume_two(state, qubit_a, qubit_b, np.zeros(2 ** len(others)))
        pos = state.qubit_labels.index(qubit_a)
        removed_before = sum(1 for l in state.qubit_labels[:pos] if l == qubit_b)
        pos -= removed_before
        labels = base.qubit_labels[:pos] + (out_label,) + base.qubit_labels[pos:]
        mask = base.lost_mask[:pos] + (output_lost,) + base.lost_mask[pos:]
        if output_lost:
            return PhotonicState(vec.reshape(-1), labels, mask, base.hidden)
        # vec is (2, rest): move the output axis to its slot among present qubits
        present_before = sum(1 for l, m in zip(labels[:pos], mask[:pos]) if not m)
        t = vec.reshape((2,) + (2,) * len(others))
        t = np.moveaxis(t, 0, present_before)
        return PhotonicState(t.reshape(-1), labels, mask, base.hidden)

    outcomes: list[MeasurementOutcome] = []
    if not lost_a and not lost_b:
        for c, sign in (("c0", 1), ("c1", -1)):
            kraus = np.zeros((2, 4), dtype=complex)
            kraus[0, 0] = 1 / np.sqrt(2)
            kraus[1, 3] = sign / np.sqrt(2)
            p, vec = _two_qubit_apply(state, qubit_a, qubit_b, kraus)
            if p > ZERO_PROB:
                outcomes.append(
                    MeasurementOutcome(OutcomeKind.FUSION_SUCCESS, (int(sign < 0),), p, with_output(vec / np.sqrt(p), False), c)
                )
        for bits, pats in (((0, 1), ("c0c0", "c1c1")), ((1, 0), ("none",))):
            col = 2 * bits[0] + bits[1]
            kraus = np.zeros((1, 4), dtype=complex)
            kraus[0, col] = 1.0
            p, vec = _two_qubit_apply(state, qubit_a, qubit_b, kraus)
            if p <= ZERO_PROB:
                continue
            for pat in pats:
                post = _consume_two(state, qubit_a, qubit_b, vec / np.sqrt(p))
                outcomes.append(MeasurementOutcome(OutcomeKind.FUSION_FAILURE, bits, p / len(pats), post, pat))
        return outcomes

    if lost_a and lost_b:
        post = _consume_two(state, qubit_a, qubit_b, state.amplitudes)
        return [MeasurementOutcome(OutcomeKind.FUSION_FAILURE, (), 1.0, post, "none")]

    # one input missing: the present photon clicks iff it sits at the mixed mode
    present = qubit_b if lost_a else qubit_a
    click_bit = 1 if lost_a else 0  # b_V or a_H reaches the beam splitter
    other = qubit_a if lost_a else qubit_b
    for x in (0, 1):
        p, vec = _project(state, present, _COMP[x])
        if p <= ZERO_PROB:
            continue
        vec = vec / np.sqrt(p)
        if x == click_bit:
            for c in ("c0", "c1"):
                post = with_output(vec, True)
                outcomes.append(
                    MeasurementOutcome(OutcomeKind.FUSION_SUCCESS, (int(c == "c1"),), p / 2, post, c, false_positive=True)
                )
        else:
            post = _consume_two(state, present, other, vec)
            outcomes.append(MeasurementOutcome(OutcomeKind.FUSION_FAILURE, (x,), p, post, "none"))
    return outcomes


def fuse_join_type_i(state: PhotonicState, qubit_a: str, qubit_b: str, *, out_label: str | None = None) -> list[MeasurementOutcome]:
    """Hadamard-conjugated type-I join of two parity-zero blocks.

    Applies H to both inputs (when present), the bare type-I fusion, then H
    to the output, and X on the output after a ``c1`` click. On parity-zero
    blocks of sizes n and m success yields the parity-zero block of size
    n + m - 1.
    """
    out_label = qubit_a if out_label is None else out_label
    pre = state
    for q in (qubit_a, qubit_b):
        if not pre.is_lost(q):
            pre = apply_hadamard(pre, q)
    result = []
    for o in fuse_type_i(pre, qubit_a, qubit_b, out_label=out_label):
        post = o.post_state
        if o.kind is OutcomeKind.FUSION_SUCCESS and not post.is_lost(out_label):
            post = apply_hadamard(post, out_label)
            if o.classical_bits == (1,):
                post = apply_x(post, out_label)
        result.append(replace(o, post_state=post))
    return result


# ---------------------------------------------------------------------------
# comparison and enumeration


def fidelity(state: PhotonicState, reference: PhotonicState) -> float:
    """``|<reference|state>|^2`` after aligning present labels."""
    if set(state.present) != set(reference.present):
        raise OracleError(f"register mismatch: {state.present} vs {reference.present}")
    order = [reference.present.index(l) for l in state.present]
    ref = np.transpose(reference.tensor_view(), order).reshape(-1) if order else reference.amplitudes
    return float(abs(np.vdot(ref, state.amplitudes)) ** 2)


@dataclass(frozen=True)
class Operation:
    """An oracle operation applied by :func:`enumerate_outcomes`."""

    name: str
    args: tuple = ()
    kwargs: dict = field(default_factory=dict)


_OPS: dict[str, Callable] = {
    "fuse_type_ii": fuse_type_ii,
    "fuse_type_i": fuse_type_i,
    "fuse_join_type_i": fuse_join_type_i,
    "measure_computational": measure_computational,
    "measure_diagonal": measure_diagonal,
    "loss": loss_branches,
}


def enumerate_outcomes(op: Operation | Sequence[Operation], state: PhotonicState) -> list:
    """All branches of one operation, or of a sequence applied branch-wise.

    For a sequence, each returned item is ``(path, probability, post_state)``
    where ``path`` lists the outcome of every step.
    """
    if state.n_present > MAX_QUBITS:
        raise SizeLimitError(f"{state.n_present} qubits exceeds the cap of {MAX_QUBITS}")
    if isinstance(op, Operation):
        try:
            fn = _OPS[op.name]
        except KeyError:
            raise OracleError(f"unknown operation {op.name!r}") from None
        return fn(state, *op.args, **op.kwargs)
    frontier = [((), 1.0, state)]
    for step in op:
        nxt = []
        for path, p, s in frontier:
            for o in enumerate_outcomes(step, s):
                tag = getattr(o, "pattern", None) or getattr(o, "bit", None)
                nxt.append((path + (tag,), p * o.probability, o.post_state))
        frontier = nxt
    return frontier
