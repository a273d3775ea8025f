"""RSA scoring and Kendall tau-b against a brute-force pair-counting oracle."""

import math

import numpy as np
import pytest
from scipy.stats import kendalltau

from colorlang.alignment.rsa import cosine_similarity_matrix, rsa


def taub_oracle(x, y):
    """O(n^2) pair counting straight from the tau-b definition."""
    n = len(x)
    concordant = discordant = 0
    ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif dx * dy > 0:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        return float("nan")
    return (concordant - discordant) / denom


def test_taub_matches_oracle_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.standard_normal(20)
        y = rng.standard_normal(20)
        tau, _ = kendalltau(x, y)
        assert tau == pytest.approx(taub_oracle(x, y), abs=1e-12)


def test_taub_matches_oracle_with_ties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.integers(0, 4, size=20).astype(float)
        y = rng.integers(0, 4, size=20).astype(float)
        tau, _ = kendalltau(x, y)
        oracle = taub_oracle(x, y)
        if math.isnan(oracle):
            assert math.isnan(tau)
        else:
            assert tau == pytest.approx(oracle, abs=1e-12)


def test_cosine_similarity_matrix_properties():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((12, 5))
    C, keep = cosine_similarity_matrix(M)
    assert keep.all()
    assert np.allclose(C, C.T, atol=1e-9)
    assert np.allclose(np.diag(C), 1.0, atol=1e-9)
    assert (np.abs(C) <= 1.0 + 1e-12).all()


def test_cosine_similarity_excludes_zero_rows():
    M = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
    C, keep = cosine_similarity_matrix(M)
    assert keep.tolist() == [True, False, True]
    assert C.shape == (2, 2)


def test_rsa_identical_spaces():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((15, 4))
    report = rsa(X, X.copy())
    assert report.score == pytest.approx(1.0)
    assert report.method == "rsa" and report.n == 15


def test_rsa_full_rank_reversal_is_minus_one():
    # 2-D unit vectors chosen so every row's similarity order flips between
    # the two spaces; with n=3 each row ranks two off-diagonal entries.
    def at(deg):
        r = math.radians(deg)
        return [math.cos(r), math.sin(r)]

    X = np.array([at(0), at(10), at(30)])
    Y = np.array([at(0), at(50), at(20)])
    report = rsa(X, Y)
    assert report.score == pytest.approx(-1.0)


def test_rsa_scale_invariance():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((10, 3))
    Y = rng.standard_normal((10, 3))
    base = rsa(X, Y).score
    assert rsa(7.0 * X, Y).score == pytest.approx(base, abs=1e-12)
    assert rsa(X, 7.0 * Y).score == pytest.approx(base, abs=1e-12)


def test_rsa_zero_rows_excluded_and_counted():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((8, 3))
    Y = rng.standard_normal((8, 3))
    X[2] = 0.0
    report = rsa(X, Y)
    assert report.n == 7
    assert report.detail[0]["excluded_rows"] == 1


def test_rsa_flattened_option():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((9, 3))
    report = rsa(X, X.copy(), flattened=True)
    assert report.detail[1]["flattened_tau"] == pytest.approx(1.0)


def test_rsa_errors():
    rng = np.random.default_rng(7)
    with pytest.raises(ValueError):
        rsa(rng.standard_normal((4, 2)), rng.standard_normal((5, 2)))
    with pytest.raises(ValueError):
        rsa(rng.standard_normal((2, 2)), rng.standard_normal((2, 2)))


def test_rsa_score_range():
    rng = np.random.default_rng(8)
    for seed in range(5):
        r = np.random.default_rng(seed)
        report = rsa(r.standard_normal((8, 3)), r.standard_normal((8, 3)))
        assert -1.0 <= report.score <= 1.0
