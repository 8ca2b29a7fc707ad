import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sense.codec import (
    EmbeddingTable,
    SequenceVector,
    ZeroRowError,
    cyclic_shift,
    decode,
    decode_position,
    encode,
    fixed_axis_variance,
    isotropic_variance,
    random_unit_vector,
    random_unit_vectors,
    score,
    shifted_dot_samples,
    independent_dot_stats,
    shifted_dot_stats,
)

# small tables deliberately exceed the d/8 soft limit
pytestmark = pytest.mark.filterwarnings("ignore:sequence length:UserWarning")


def shift_by_formula(v, m):
    """[v_{d-m'+1}, ..., v_d, v_1, ..., v_{d-m'}] with 1-based v_j, m' = m mod d."""
    d = len(v)
    mp = m % d
    if mp == 0:
        return list(v)
    return [v[j - 1] for j in range(d - mp + 1, d + 1)] + [v[j - 1] for j in range(1, d - mp + 1)]


def basis_table(d, n=None):
    n = d if n is None else n
    return EmbeddingTable(tuple(f"e{i}" for i in range(n)), np.eye(d)[:n])


def test_shift_examples():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    assert cyclic_shift(v, 0).tolist() == [1, 2, 3, 4]
    assert cyclic_shift(v, 1).tolist() == [4, 1, 2, 3]
    assert cyclic_shift(v, 4).tolist() == [1, 2, 3, 4]
    assert cyclic_shift(v, 1).tolist() == shift_by_formula(v.tolist(), 1)


def test_shift_rejects_negative():
    with pytest.raises(ValueError):
        cyclic_shift(np.ones(3), -1)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 20), elements=finite), st.integers(0, 60), st.integers(0, 60))
def test_shift_algebra(v, a, b):
    d = v.size
    assert np.array_equal(cyclic_shift(cyclic_shift(v, a), b), cyclic_shift(v, a + b))
    assert np.array_equal(cyclic_shift(v, d * a), v)
    assert sorted(cyclic_shift(v, a).tolist()) == sorted(v.tolist())
    assert cyclic_shift(v, a).tolist() == shift_by_formula(v.tolist(), a)


def test_single_node_sequence_is_its_row():
    t = EmbeddingTable.from_matrix(["a", "b"], np.random.default_rng(0).normal(size=(2, 6)))
    s = encode(["b"], t)
    assert s.length == 1
    assert np.array_equal(s.values, t.rows[1])
    assert score(s, "b", 1, t) == pytest.approx(1.0, abs=1e-12)


def test_basis_superposition():
    t = basis_table(4)
    s = encode(["e0", "e1"], t)
    assert s.values.tolist() == [1.0, 0.0, 1.0, 0.0]


def test_repeated_node_shifts_differently():
    t = EmbeddingTable.from_matrix(["a"], [[3.0, 1.0, 0.0, 2.0]])
    s = encode(["a", "a"], t)
    np.testing.assert_allclose(s.values, t.rows[0] + cyclic_shift(t.rows[0], 1))


def test_encode_errors():
    t = basis_table(3)
    with pytest.raises(ValueError, match="exceeds dimension"):
        encode(["e0"] * 4, t)
    with pytest.raises(KeyError, match="'zz'"):
        encode(["zz"], t)
    with pytest.raises(ValueError):
        encode([], t)


def test_length_bound_and_soft_warning():
    with pytest.raises(ValueError):
        SequenceVector(np.zeros(4), 5)
    with pytest.raises(ValueError):
        SequenceVector(np.zeros(4), 0)
    with pytest.warns(UserWarning, match="d/8"):
        SequenceVector(np.zeros(16), 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SequenceVector(np.zeros(16), 2)


def test_zero_rows_rejected_by_name():
    with pytest.raises(ZeroRowError, match="'b'"):
        EmbeddingTable.from_matrix(["a", "b"], [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        EmbeddingTable(("a",), np.array([[2.0, 0.0]]))


def test_encode_is_termwise_linear():
    rng = np.random.default_rng(2)
    t = EmbeddingTable.from_matrix(list("abcd"), rng.normal(size=(4, 32)))
    ab = encode(["a", "b"], t).values
    np.testing.assert_allclose(ab, encode(["a"], t).values + cyclic_shift(t.rows[1], 1))


def test_score_expansion_identity():
    rng = np.random.default_rng(3)
    t = EmbeddingTable.from_matrix(list("abcde"), rng.normal(size=(5, 24)))
    seq = list("cadbe")[:4]
    s = encode(seq, t)
    for k, node in enumerate(seq, start=1):
        vk = cyclic_shift(t.rows[t.lookup(node)], k - 1)
        cross = sum(cyclic_shift(t.rows[t.lookup(other)], i - 1) @ vk
                    for i, other in enumerate(seq, start=1) if i != k)
        assert score(s, node, k, t) == pytest.approx(1.0 + cross, abs=1e-12)


def spaced_table(d, n):
    """n basis rows spaced d // n apart: orthogonal under shifts below d // n."""
    return EmbeddingTable(tuple(f"s{i}" for i in range(n)), np.eye(d)[:: d // n][:n])


def test_orthonormal_wrong_scores_are_zero():
    t = spaced_table(16, 4)
    seq = ["s2", "s0", "s1"]
    s = encode(seq, t)
    for k in (1, 2, 3):
        for node in t.ids:
            assert score(s, node, k, t) == (1.0 if node == seq[k - 1] else 0.0)


def test_position_out_of_range():
    t = basis_table(4)
    s = encode(["e0"], t)
    with pytest.raises(ValueError):
        score(s, "e0", 2, t)
    with pytest.raises(ValueError):
        decode_position(s, 0, t)


@pytest.mark.parametrize("d", [12, 16])
def test_orthonormal_round_trip_exhaustive(d):
    # basis rows spaced >= 3 apart stay mutually orthogonal under shifts of 0..2
    ids = [f"v{i}" for i in range(4)]
    table = EmbeddingTable(tuple(ids), np.eye(d)[[0, d // 4, d // 2, 3 * d // 4]])
    for q in range(1, 4):
        for seq in itertools.product(ids, repeat=q):
            s = encode(list(seq), table)
            assert decode(s, table) == list(seq)
            assert all(score(s, node, k, table) == 1.0 for k, node in enumerate(seq, start=1))


def test_tie_breaks_to_lowest_index():
    t = EmbeddingTable(("x", "y", "z"), np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert decode_position(encode(["y"], t), 1, t) == ("x", 1.0)


def test_single_position_recovers_distinct_rows():
    rng = np.random.default_rng(5)
    rows = random_unit_vectors(50, 6, rng)
    t = EmbeddingTable(tuple(map(str, range(50))), rows)
    for i in range(50):
        assert decode(encode([str(i)], t), t) == [str(i)]


def test_random_round_trip_d1024():
    rng = np.random.default_rng(6)
    n = 1000
    t = EmbeddingTable(tuple(map(str, range(n))), random_unit_vectors(n, 1024, rng))
    hits = 0
    trials = 100
    for _ in range(trials):
        seq = [str(x) for x in rng.integers(0, n, size=rng.integers(1, 11))]
        hits += decode(encode(seq, t), t) == seq
    assert hits / trials >= 0.99


def test_middle_position_of_three():
    rng = np.random.default_rng(7)
    t = EmbeddingTable(("1", "2", "3"), random_unit_vectors(3, 2048, rng))
    s = encode(["1", "2", "3"], t)
    assert score(s, "2", 2, t) == pytest.approx(1.0, abs=0.1)
    assert decode_position(s, 2, t)[0] == "2"


def test_threshold_stop_rule():
    t = spaced_table(16, 4)
    s = encode(["s0", "s2"], t)
    assert decode(s, t, stop_below=0.5) == ["s0", "s2"]


def test_decode_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        decode(encode(["e0"], basis_table(4)), basis_table(8))


def test_random_unit_vector_properties():
    rng = np.random.default_rng(0)
    for d in (1, 2, 7, 300):
        assert abs(np.linalg.norm(random_unit_vector(d, rng)) - 1) < 1e-12
    x = random_unit_vectors(20_000, 8, rng)
    # each coordinate has variance 1/8, so the mean has se sqrt(1/8/20000)
    assert np.all(np.abs(x.mean(axis=0)) < 5 * np.sqrt(1 / 8 / 20_000))
    y = random_unit_vectors(20_000, 8, rng)
    dots = np.einsum("ij,ij->i", x, y)
    assert abs(dots.mean()) < 5 * np.sqrt(1 / 8 / 20_000)


def test_independent_dots_small_dimension():
    mean, var = independent_dot_stats(2, 100_000, np.random.default_rng(1))
    assert var == pytest.approx(0.5, rel=0.02)
    assert abs(mean) < 5 * np.sqrt(0.5 / 100_000)


def test_shifted_dots_reject_full_rotation():
    with pytest.raises(ValueError, match="multiple"):
        shifted_dot_stats(16, 0.3, 32, 10_000, np.random.default_rng(0))
    with pytest.raises(ValueError):
        shifted_dot_stats(16, 1.5, 1, 10_000, np.random.default_rng(0))


def test_fixed_axis_endpoints():
    rng = np.random.default_rng(2)
    mean, var = shifted_dot_stats(64, 1.0, 1, 10_000, rng, construction="fixed-axis")
    assert var == 0.0 and mean == 0.0
    mean, var = shifted_dot_stats(64, 0.0, 5, 100_000, rng, construction="fixed-axis")
    assert var == pytest.approx(fixed_axis_variance(64, 0.0), rel=0.03)


@pytest.mark.parametrize("N,c,m", [(32, 0.0, 1), (32, 0.6, 3), (32, 1.0, 1), (16, 0.8, 8), (64, -0.5, 2)])
def test_isotropic_variance_closed_form(N, c, m):
    """Monte-Carlo against the exact variance for uniformly random pairs."""
    dots = shifted_dot_samples(N, c, m, 200_000, np.random.default_rng([N, m]))
    target = isotropic_variance(N, c, m)
    assert dots.var() == pytest.approx(target, rel=0.03)
    assert abs(dots.mean()) < 5 * np.sqrt(dots.var() / dots.size)


def test_isotropic_and_fixed_axis_agree_only_without_correlation():
    N = 128
    assert isotropic_variance(N, 0.0, 1) == pytest.approx(fixed_axis_variance(N, 0.0), rel=0.01)
    assert isotropic_variance(N, 0.6, 1) > 1.5 * fixed_axis_variance(N, 0.6)
    assert isotropic_variance(N, 1.0, 1) == pytest.approx(1 / (N + 2))
