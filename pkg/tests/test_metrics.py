import math

import numpy as np
import pytest

from mobmeta.core import DataError
from mobmeta.metrics import (
    attribute_correlations,
    fit_power_law,
    match_structure,
    mi_decay_curve,
    mutual_information_at_distance,
    pmi,
    pmi_from_counts,
)
from oracles import (
    brute_match_structure,
    mi_by_cell_sum,
    mi_by_pair_enumeration,
    pairs_at_distance,
    pearson_by_hand,
)


def test_mi_alternating_sequence_is_one_bit():
    # 0101...0 of odd length: the lag-1 pair table is exactly half (0,1)
    # and half (1,0), so I = H(X) + H(Y) - H(X,Y) = 1 + 1 - 1 = 1
    seq = [0, 1] * 500 + [0]
    assert mutual_information_at_distance(seq, 1) == pytest.approx(1.0)
    assert mutual_information_at_distance(seq, 2) == pytest.approx(1.0)


def test_mi_iid_is_near_zero(rng):
    seq = rng.integers(0, 4, size=20_000)
    assert mutual_information_at_distance(seq, 1) < 0.002


def test_mi_matches_both_oracle_forms(rng):
    for d in (1, 2, 5):
        seq = rng.integers(0, 5, size=800).tolist()
        got = mutual_information_at_distance(seq, d)
        assert got == pytest.approx(mi_by_pair_enumeration(seq, d), abs=1e-12)
        assert got == pytest.approx(mi_by_cell_sum(seq, d), abs=1e-12)


def test_mi_separator_windows_excluded(rng):
    # separator strictly inside the window must drop the pair too
    sep = 5
    seq = (
        rng.integers(0, 5, size=300).tolist()
        + [sep]
        + rng.integers(0, 5, size=300).tolist()
    )
    for d in (1, 2, 4):
        got = mutual_information_at_distance(seq, d, separator_id=sep)
        assert got == pytest.approx(
            mi_by_pair_enumeration(seq, d, separator=sep), abs=1e-12
        )
    # pair counting really does skip the straddling windows
    assert len(pairs_at_distance(seq, 3, separator=sep)) == 601 - 3 - 4


def test_mi_reversal_symmetric(rng):
    seq = rng.integers(0, 4, size=500).tolist()
    for d in (1, 3):
        assert mutual_information_at_distance(
            seq, d
        ) == pytest.approx(
            mutual_information_at_distance(seq[::-1], d), abs=1e-12
        )


def test_mi_argument_errors():
    with pytest.raises(ValueError, match="distance"):
        mutual_information_at_distance([0, 1, 0], 0)
    with pytest.raises(DataError, match="no pairs"):
        mutual_information_at_distance([0, 1, 0], 3)


def test_pmi_from_counts_values():
    # pair always follows: log2(N * C_ab / (C_a * C_b)) = log2(10*5/(5*5))
    assert pmi_from_counts(10, 5, 5, 5) == pytest.approx(math.log2(2.0))
    # independence: C_ab = C_a * C_b / N exactly
    assert pmi_from_counts(100, 20, 10, 2) == 0.0
    assert pmi_from_counts(10, 5, 5, 0) == float("-inf")
    with pytest.raises(DataError):
        pmi_from_counts(10, 0, 5, 1)


def test_pmi_on_sequence():
    # b follows a every time a occurs; N=10 pairs, C(a)=C(b)=... build it:
    # 0 1 0 1 0 1 0 1 0 1 0 -> pairs (0,1)x5 and (1,0)x5
    seq = [0, 1] * 5 + [0]
    assert pmi(seq, 0, 1, 1) == pytest.approx(1.0)  # log2(10*5/(5*5))
    assert pmi(seq, 0, 0, 1) == float("-inf")
    with pytest.raises(DataError, match="never occurs"):
        pmi(seq, 0, 7, 1)


def test_pmi_matches_direct_count(rng):
    seq = rng.integers(0, 4, size=400).tolist()
    d = 2
    prs = pairs_at_distance(seq, d)
    n = len(prs)
    c_a = sum(1 for x, _ in prs if x == 1)
    c_b = sum(1 for _, y in prs if y == 2)
    c_ab = sum(1 for p in prs if p == (1, 2))
    expected = math.log2(n * c_ab / (c_a * c_b))
    assert pmi(seq, 1, 2, d) == pytest.approx(expected, abs=1e-12)


def test_fit_power_law_recovers_exponent():
    ds = np.arange(1, 40)
    vals = 2.5 * ds ** -0.8
    alpha, rmse = fit_power_law(ds, vals)
    assert alpha == pytest.approx(0.8, abs=1e-9)
    assert rmse == pytest.approx(0.0, abs=1e-9)


def test_fit_power_law_guards():
    with pytest.raises(ValueError, match="2 points"):
        fit_power_law([1], [0.5])
    with pytest.raises(ValueError, match="positive"):
        fit_power_law([1, 2], [0.5, 0.0])


def test_mi_decay_curve_shape_and_depth(rng):
    # 2-block copy source: strong MI at d=1 fading with distance
    n = 4000
    seq = np.empty(n, dtype=np.int64)
    seq[0] = 0
    for i in range(1, n):
        seq[i] = seq[i - 1] if rng.random() < 0.9 else rng.integers(0, 4)
    decay = mi_decay_curve(seq, 12)
    curve = dict(decay.curve)
    assert set(curve) == set(range(1, 13))
    assert curve[1] > curve[6] > curve[12] >= 0.0
    assert decay.ldd_depth is not None and decay.ldd_depth >= 1
    assert decay.alpha is not None and decay.alpha > 0


def test_mi_decay_curve_guards():
    with pytest.raises(ValueError, match="d_max"):
        mi_decay_curve([0, 1] * 20, 4)  # 4*10 >= 40
    with pytest.raises(ValueError, match="d_max"):
        mi_decay_curve([0, 1] * 50, 0)


def test_mi_decay_no_dependence_leaves_alpha_none(rng):
    seq = rng.integers(0, 2, size=3000)
    decay = mi_decay_curve(seq, 5, eps_fit=0.05)
    assert decay.alpha is None
    assert decay.ldd_depth is None


def test_match_structure_hand_example():
    # abab: "a" repeats at 2, "b" repeats at 3, "ab" repeats at 2
    got = match_structure([0, 1, 0, 1], match_lengths=(1, 2))
    assert got == [(2, 1, 2), (2, 2, 2), (3, 1, 2)]


def test_match_structure_matches_quadratic_oracle(rng):
    seq = rng.integers(0, 3, size=200).tolist()
    got = match_structure(seq)
    assert got == brute_match_structure(seq)


def test_match_structure_separator_skipped(rng):
    sep = 3
    seq = (
        rng.integers(0, 3, size=60).tolist()
        + [sep]
        + rng.integers(0, 3, size=60).tolist()
    )
    got = match_structure(seq, separator_id=sep)
    assert got == brute_match_structure(seq, separator=sep)
    assert all(
        sep not in seq[pos : pos + L] for pos, L, _ in got
    )


def test_match_structure_smallest_delta():
    # position 4 gram "0": previous occurrences at 0 and 2; delta is 2
    got = match_structure([0, 1, 0, 1, 0], match_lengths=(1,))
    assert (4, 1, 2) in got


def test_correlations_hand_checked():
    xs = [1.0, 2.0, 3.0, 4.0, 5.0]
    ys = [2.0, 1.0, 4.0, 3.0, 6.0]
    zs = [5.0, 4.0, 3.0, 2.0, 1.0]
    names, corr = attribute_correlations(
        ["x", "y", "z"], np.array([xs, ys, zs])
    )
    assert names == ["x", "y", "z"]
    assert corr[0, 1] == pytest.approx(pearson_by_hand(xs, ys))
    assert corr[0, 2] == pytest.approx(-1.0)
    assert np.allclose(corr, corr.T)
    assert np.all(np.diag(corr) == 1.0)
    assert np.all(corr >= -1.0) and np.all(corr <= 1.0)


def test_correlations_drop_constant_with_warning():
    m = np.array([[1.0, 2.0, 3.0], [7.0, 7.0, 7.0]])
    with pytest.warns(UserWarning, match="no variance"):
        names, corr = attribute_correlations(["a", "b"], m)
    assert names == ["a"]
    assert corr.shape == (1, 1)


def test_correlations_need_three_users():
    with pytest.raises(DataError, match="3 users"):
        attribute_correlations(["a"], np.array([[1.0, 2.0]]))
