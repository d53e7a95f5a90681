import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paritymem import oracle as po
from paritymem.oracle import OutcomeKind

PLUS = np.array([1, 1]) / math.sqrt(2)
MINUS = np.array([1, -1]) / math.sqrt(2)


def kron_all(vecs):
    out = np.array([1.0 + 0j])
    for v in vecs:
        out = np.kron(out, v)
    return out


def brute_parity(alpha, beta, n):
    """alpha (|+>^n + |->^n)/sqrt2 + beta (|+>^n - |->^n)/sqrt2, expanded directly."""
    p, m = kron_all([PLUS] * n), kron_all([MINUS] * n)
    zero, one = (p + m) / math.sqrt(2), (p - m) / math.sqrt(2)
    return alpha * zero + beta * one


def labels(prefix, n):
    return [f"{prefix}{i}" for i in range(n)]


@st.composite
def logical(draw):
    theta = draw(st.floats(0, math.pi))
    phi = draw(st.floats(0, 2 * math.pi))
    return math.cos(theta / 2), complex(math.sin(theta / 2) * np.exp(1j * phi))


# -- construction --------------------------------------------------------


def test_parity_zero_n1_is_ket0():
    assert po.make_parity_zero(1).amplitude_map() == pytest.approx({"0": 1.0})


def test_parity_zero_n2_is_bell():
    amps = po.make_parity_zero(2).amplitude_map()
    assert set(amps) == {"00", "11"}
    assert all(abs(a - 1 / math.sqrt(2)) < 1e-12 for a in amps.values())


def test_parity_zero_n3_even_strings():
    amps = po.make_parity_zero(3).amplitude_map()
    assert set(amps) == {"000", "011", "101", "110"}
    assert np.allclose(list(amps.values()), 0.5)


@pytest.mark.parametrize("n", range(1, 9))
def test_parity_zero_matches_diagonal_expansion(n):
    assert np.allclose(po.make_parity_zero(n).amplitudes, brute_parity(1, 0, n))


@given(logical(), st.integers(1, 7))
def test_parity_plus_matches_diagonal_expansion(ab, n):
    a, b = ab
    s = po.make_parity_plus(a, b, n)
    assert np.allclose(s.amplitudes, brute_parity(a, b, n))
    assert abs(s.norm() - 1) < 1e-12


def test_parity_plus_special_cases():
    assert np.allclose(po.make_parity_plus(1, 0, 4).amplitudes, po.make_parity_zero(4).amplitudes)
    amps = po.make_parity_plus(0, 1, 2).amplitude_map()
    assert set(amps) == {"01", "10"}
    assert np.allclose(po.make_parity_plus(2**-0.5, 2**-0.5, 1).amplitudes, PLUS)


def test_parity_plus_rejects_unnormalized():
    with pytest.raises(po.OracleError):
        po.make_parity_plus(1, 1, 3)


def test_size_cap():
    with pytest.raises(po.SizeLimitError):
        po.make_parity_zero(po.MAX_QUBITS + 1)
    a = po.make_parity_zero(12, prefix="a")
    with pytest.raises(po.SizeLimitError):
        po.tensor(a, po.make_parity_zero(9, prefix="b"))


def test_duplicate_labels_rejected():
    with pytest.raises(po.OracleError):
        po.make_parity_zero(2, labels=["x", "x"])


# -- single-qubit operations --------------------------------------------


def test_x_rotation_zero_is_identity():
    s = po.make_parity_plus(0.6, 0.8, 3)
    assert po.fidelity(po.apply_x_rotation(s, "q1", 0.0), s) == pytest.approx(1.0)
    assert np.allclose(po.apply_x_rotation(s, "q1", 0.0).amplitudes, s.amplitudes)


@pytest.mark.parametrize("n", range(1, 6))
def test_x_rotation_pi_flips_with_phase_i(n):
    out = po.apply_x_rotation(po.make_parity_zero(n), "q0", math.pi)
    assert np.allclose(out.amplitudes, 1j * po.make_parity_plus(0, 1, n).amplitudes)


def test_x_rotation_half_pi_on_bell():
    out = po.apply_x_rotation(po.make_parity_zero(2), "q1", math.pi / 2)
    target = (po.make_parity_zero(2).amplitudes + 1j * po.make_parity_plus(0, 1, 2).amplitudes) / math.sqrt(2)
    assert np.allclose(out.amplitudes, target)


def test_z_all_examples():
    z = po.make_parity_zero(4)
    assert np.allclose(po.apply_z_all(z, z.present).amplitudes, z.amplitudes)
    one = po.make_parity_plus(0, 1, 2)
    assert np.allclose(po.apply_z_all(one, one.present).amplitudes, -one.amplitudes)
    s = po.make_parity_plus(0.6, 0.8, 3)
    assert np.allclose(po.apply_z_all(s, s.present).amplitudes, po.make_parity_plus(0.6, -0.8, 3).amplitudes)


@given(logical(), st.integers(1, 6), st.floats(-math.pi, math.pi), st.data())
def test_x_rotation_acts_logically_on_any_qubit(ab, n, theta, data):
    a, b = ab
    q = data.draw(st.sampled_from(labels("q", n)))
    c, s = math.cos(theta / 2), 1j * math.sin(theta / 2)
    target = po.make_parity_plus(c * a + s * b, s * a + c * b, n)
    out = po.apply_x_rotation(po.make_parity_plus(a, b, n), q, theta)
    assert po.fidelity(out, target) == pytest.approx(1.0, abs=1e-10)


# -- measurement ---------------------------------------------------------


def test_measure_bell_computational():
    br = po.measure_computational(po.make_parity_zero(2), "q0")
    assert [b.bit for b in br] == [0, 1]
    assert [b.probability for b in br] == pytest.approx([0.5, 0.5])
    assert br[0].post_state.amplitude_map() == pytest.approx({"0": 1})
    assert br[1].post_state.amplitude_map() == pytest.approx({"1": 1})


def test_measure_basis_state_deterministic():
    br = po.measure_computational(po.make_product("0"), "q0")
    assert len(br) == 1 and br[0].probability == pytest.approx(1.0)


@given(logical(), st.integers(2, 7), st.data())
def test_computational_read_lowers_level(ab, n, data):
    a, b = ab
    idx = data.draw(st.integers(0, n - 1))
    s = po.make_parity_plus(a, b, n)
    rest = [l for i, l in enumerate(s.present) if i != idx]
    for br in po.measure_computational(s, f"q{idx}"):
        x, y = (a, b) if br.bit == 0 else (b, a)
        target = po.make_parity_plus(x, y, n - 1, labels=rest)
        assert po.fidelity(br.post_state, target) == pytest.approx(1.0, abs=1e-10)


def test_measure_diagonal_examples():
    br = po.measure_diagonal(po.from_amplitudes(PLUS, ["q0"]), "q0")
    assert len(br) == 1 and br[0].bit == 0
    br = po.measure_diagonal(po.make_parity_zero(2), "q0")
    assert [b.probability for b in br] == pytest.approx([0.5, 0.5])
    assert np.allclose(br[0].post_state.amplitudes, PLUS)
    assert np.allclose(br[1].post_state.amplitudes, MINUS)


def test_measurements_commute_on_disjoint_qubits():
    rng = np.random.default_rng(3)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    s = po.from_amplitudes(v / np.linalg.norm(v), labels("x", 4))
    one = po.enumerate_outcomes(
        [po.Operation("measure_computational", ("x0",)), po.Operation("measure_diagonal", ("x2",))], s
    )
    two = po.enumerate_outcomes(
        [po.Operation("measure_diagonal", ("x2",)), po.Operation("measure_computational", ("x0",))], s
    )
    d1 = {path: p for path, p, _ in one}
    d2 = {(b, a): p for (a, b), p, _ in two}
    assert d1.keys() == d2.keys()
    for k in d1:
        assert d1[k] == pytest.approx(d2[k], abs=1e-12)


def test_lost_qubit_cannot_be_measured():
    s = po.apply_loss(po.make_parity_zero(2), "q0", np.random.default_rng(0))
    with pytest.raises(po.OracleError):
        po.measure_computational(s, "q0")
    with pytest.raises(po.OracleError):
        po.apply_x(s, "q0")
    with pytest.raises(po.OracleError):
        po.apply_loss(s, "q0", np.random.default_rng(0))


# -- loss ----------------------------------------------------------------


def test_loss_on_single_photon():
    s = po.apply_loss(po.make_product("0"), "q0", np.random.default_rng(0))
    assert s.n_present == 0 and s.lost == ("q0",)


def test_loss_on_bell_statistics():
    rng = np.random.default_rng(11)
    s = po.make_parity_zero(2)
    trials = 100_000
    ones = 0
    for _ in range(trials):
        post = po.apply_loss(s, "q0", rng)
        bit = dict(post.hidden)["q0"]
        assert post.amplitude_map() == pytest.approx({str(bit): 1})
        ones += bit
    assert abs(ones / trials - 0.5) < 5 * math.sqrt(0.25 / trials)


@given(logical(), st.integers(2, 6))
def test_loss_leaves_lower_encoding(ab, n):
    a, b = ab
    s = po.make_parity_plus(a, b, n)
    for br in po.loss_branches(s, "q0"):
        x, y = (a, b) if br.bit == 0 else (b, a)
        target = po.make_parity_plus(x, y, n - 1, labels=labels("q", n)[1:])
        assert po.fidelity(br.post_state, target) == pytest.approx(1.0, abs=1e-10)
        assert br.post_state.is_lost("q0")


def test_discard_refuses_entangled_qubits():
    with pytest.raises(po.OracleError):
        po.discard(po.make_parity_zero(2), ["q0"])
    prod = po.tensor(po.make_parity_zero(2, prefix="a"), po.make_product("1", prefix="b"))
    out = po.discard(prod, ["b0"])
    assert po.fidelity(out, po.make_parity_zero(2, prefix="a")) == pytest.approx(1.0)


# -- fusion --------------------------------------------------------------


def _psi_zero(m, n, ab=(0.6, 0.8j)):
    a, b = ab
    return po.tensor(po.make_parity_plus(a, b, m, labels=labels("a", m)), po.make_parity_zero(n, labels=labels("b", n)))


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 5) for n in range(1, 4)])
def test_type_ii_extends_parity(m, n):
    s = _psi_zero(m, n + 2)
    outs = po.fuse_type_ii(
        s, "a0", "b0", phase_fix=labels("b", n + 2)[1:], flip_a="a1" if m > 1 else None, flip_b="b1"
    )
    assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-12)
    wins = [o for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS]
    assert sum(o.probability for o in wins) == pytest.approx(0.5, abs=1e-12)
    target = po.make_parity_plus(0.6, 0.8j, m + n, labels=labels("a", m)[1:] + labels("b", n + 2)[1:])
    for o in wins:
        assert po.fidelity(o.post_state, target) == pytest.approx(1.0, abs=1e-10)
        assert abs(o.post_state.norm() - 1) < 1e-12


@pytest.mark.parametrize("m,n", [(2, 3), (3, 4)])
def test_type_ii_failure_leaves_shorter_blocks(m, n):
    outs = po.fuse_type_ii(_psi_zero(m, n), "a0", "b0", flip_a="a1", flip_b="b1")
    rest = po.tensor(
        po.make_parity_plus(0.6, 0.8j, m - 1, labels=labels("a", m)[1:]),
        po.make_parity_zero(n - 1, labels=labels("b", n)[1:]),
    )
    fails = [o for o in outs if o.kind is OutcomeKind.FUSION_FAILURE]
    assert sum(o.probability for o in fails) == pytest.approx(0.5)
    for o in fails:
        assert po.fidelity(o.post_state, rest) == pytest.approx(1.0, abs=1e-10)


def test_type_ii_without_phase_fix_needs_correction():
    outs = po.fuse_type_ii(_psi_zero(2, 3), "a0", "b0", corrected=False)
    target = po.make_parity_plus(0.6, 0.8j, 3, labels=["a1", "b1", "b2"])
    fids = sorted(po.fidelity(o.post_state, target) for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS)
    assert fids[0] < 0.99 and fids[-1] == pytest.approx(1.0)


def test_type_ii_on_product_zeros():
    outs = po.fuse_type_ii(po.make_product("00"), "q0", "q1")
    # |00> only ever reaches the success projector |00>+-|11>; no failure pattern fires
    assert sum(o.probability for o in outs if o.kind is OutcomeKind.FUSION_FAILURE) == pytest.approx(0.0)
    assert sum(o.probability for o in outs) == pytest.approx(1.0)


@pytest.mark.parametrize("victim", ["a0", "b0"])
def test_type_ii_heralds_loss(victim):
    s = po.apply_loss(_psi_zero(3, 3), victim, np.random.default_rng(5))
    outs = po.fuse_type_ii(s, "a0", "b0")
    assert {o.kind for o in outs} == {OutcomeKind.LOSS_DETECTED}
    assert sum(o.probability for o in outs) == pytest.approx(1.0)


def test_same_label_fusion_rejected():
    s = po.make_parity_zero(3)
    with pytest.raises(po.OracleError):
        po.fuse_type_ii(s, "q0", "q0")
    with pytest.raises(po.OracleError):
        po.fuse_type_i(s, "q1", "q1")


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3), (3, 3), (4, 2)])
def test_type_i_join_builds_bigger_zero(n, m):
    s = po.tensor(po.make_parity_zero(n, labels=labels("a", n)), po.make_parity_zero(m, labels=labels("b", m)))
    outs = po.fuse_join_type_i(s, "a0", "b0", out_label="c")
    wins = [o for o in outs if o.kind is OutcomeKind.FUSION_SUCCESS]
    assert sum(o.probability for o in outs) == pytest.approx(1.0)
    assert sum(o.probability for o in wins) == pytest.approx(0.5)
    keep = ["c"] + labels("a", n)[1:] + labels("b", m)[1:]
    target = po.make_parity_zero(n + m - 1, labels=keep)
    for o in wins:
        assert not o.false_positive
        assert po.fidelity(o.post_state, target) == pytest.approx(1.0, abs=1e-10)


def test_type_i_join_failure_destroys_encodings():
    s = po.tensor(po.make_parity_zero(2, labels=["a0", "a1"]), po.make_parity_zero(2, labels=["b0", "b1"]))
    for o in po.fuse_join_type_i(s, "a0", "b0"):
        if o.kind is OutcomeKind.FUSION_FAILURE:
            # the survivors share no entanglement: either can be discarded
            left = po.discard(o.post_state, ["b1"])
            assert left.present == ("a1",)


@pytest.mark.parametrize("victim", ["a0", "b0"])
def test_type_i_false_positive(victim):
    s = po.tensor(po.make_parity_zero(2, labels=["a0", "a1"]), po.make_parity_zero(2, labels=["b0", "b1"]))
    s = po.apply_loss(s, victim, np.random.default_rng(1))
    outs = po.fuse_join_type_i(s, "a0", "b0", out_label="c")
    fp = [o for o in outs if o.false_positive]
    assert fp and sum(o.probability for o in fp) > 0
    assert all(o.kind is OutcomeKind.FUSION_SUCCESS and o.post_state.is_lost("c") for o in fp)
    assert sum(o.probability for o in outs) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_all_branches_normalized(k, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
    s = po.from_amplitudes(v / np.linalg.norm(v), labels("x", k))
    for op in ("fuse_type_ii", "fuse_type_i", "fuse_join_type_i"):
        outs = po.enumerate_outcomes(po.Operation(op, ("x0", "x1")), s)
        assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-12)
        assert all(abs(o.post_state.norm() - 1) < 1e-12 for o in outs)


def test_enumerate_unknown_operation():
    with pytest.raises(po.OracleError):
        po.enumerate_outcomes(po.Operation("teleport"), po.make_parity_zero(2))


# -- fidelity ------------------------------------------------------------


def test_fidelity_examples():
    s = po.make_parity_plus(0.6, 0.8, 3)
    assert po.fidelity(s, s) == pytest.approx(1.0)
    assert po.fidelity(po.make_product("0"), po.make_product("1")) == pytest.approx(0.0)
    pp = po.from_amplitudes(np.kron(PLUS, PLUS), ["q0", "q1"])
    assert po.fidelity(po.make_parity_zero(2), pp) == pytest.approx(0.5)


def test_fidelity_aligns_labels():
    a = po.tensor(po.make_product("1", prefix="x"), po.make_product("0", prefix="y"))
    b = po.tensor(po.make_product("0", prefix="y"), po.make_product("1", prefix="x"))
    assert po.fidelity(a, b) == pytest.approx(1.0)
    with pytest.raises(po.OracleError):
        po.fidelity(a, po.make_parity_zero(2))


def test_fidelity_ignores_global_phase():
    s = po.make_parity_plus(0.6, 0.8, 4)
    t = po.from_amplitudes(np.exp(0.7j) * s.amplitudes, s.present)
    assert po.fidelity(s, t) == pytest.approx(1.0)


def test_parity_descriptor():
    assert po.ParityDescriptor(3).logical_phase_flips_pending is False
    with pytest.raises(po.OracleError):
        po.ParityDescriptor(0)


def test_states_are_immutable():
    s = po.make_parity_zero(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
    assert list(itertools.islice(s.amplitude_map(), 1)) == ["00"]
