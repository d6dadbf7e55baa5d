"""Kernel tests: every numeric claim is checked against an independent oracle.

Oracles used here:
  * compensated summation (math.fsum) for moments
  * adaptive quadrature of the t density (scipy.integrate.quad) for t_cdf
  * bisection on t_cdf plus scipy.stats.t.ppf for t_quantile
  * a from-scratch textbook formula (fsum + scipy quantile) for welch_ci
  * exact rational normal equations (fractions.Fraction) for ols_fit
"""

import math
import random
from fractions import Fraction

import numpy as np
import pytest
import scipy.integrate
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from rvl.stats import (
    Column,
    StatsError,
    Table,
    column_ranges,
    mad_outlier_scores,
    mean_sd,
    ols_fit,
    t_cdf,
    t_pdf,
    t_quantile,
    welch_ci,
)


def col(values, missing=None):
    vals = np.asarray(values, dtype=float)
    mask = np.zeros(len(vals), dtype=bool)
    if missing:
        mask[list(missing)] = True
    return Column(vals, mask)


# --- mean_sd -----------------------------------------------------------------


def test_mean_sd_basic():
    assert mean_sd(col([1, 2, 3])) == (2.0, 1.0, 3)


def test_mean_sd_skips_missing():
    m, s, n = mean_sd(col([1, 99, 3], missing=[1]))
    assert (m, n) == (2.0, 2)
    assert s == pytest.approx(math.sqrt(2), abs=1e-15)


def test_mean_sd_all_missing_errors():
    with pytest.raises(StatsError):
        mean_sd(col([1, 2], missing=[0, 1]))


def test_mean_sd_single_value_has_nan_sd():
    m, s, n = mean_sd(col([7.0]))
    assert (m, n) == (7.0, 1)
    assert math.isnan(s)


def test_mean_sd_against_fsum_oracle():
    rng = random.Random(42)
    for _ in range(50):
        n = rng.randint(2, 200)
        vals = [rng.uniform(-1e3, 1e3) for _ in range(n)]
        m, s, cnt = mean_sd(col(vals))
        om = math.fsum(vals) / n
        osd = math.sqrt(math.fsum((v - om) ** 2 for v in vals) / (n - 1))
        assert cnt == n
        assert m == pytest.approx(om, rel=1e-12)
        assert s == pytest.approx(osd, rel=1e-12)


# --- Student t ---------------------------------------------------------------

DFS = [1.0, 2.0, 5.0, 30.0, 940.0]


def quad_t_cdf(x, df):
    """Adaptive-quadrature oracle for the t CDF."""
    if x >= 0:
        body, _ = scipy.integrate.quad(lambda u: t_pdf(u, df), 0.0, x, epsabs=1e-13, limit=200)
        return 0.5 + body
    return 1.0 - quad_t_cdf(-x, df)


def test_t_cdf_at_zero():
    for df in DFS:
        assert t_cdf(0.0, df) == 0.5


def test_t_cdf_symmetry():
    for df in DFS:
        for x in [0.3, 1.0, 2.5, 7.0]:
            assert t_cdf(x, df) + t_cdf(-x, df) == pytest.approx(1.0, abs=1e-14)


def test_t_cdf_limits_and_monotone():
    for df in DFS:
        xs = np.linspace(-40, 40, 401)
        vals = [t_cdf(float(x), df) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        # df=1 is Cauchy; its tails only decay like 1/x
        bound = 1e-2 if df < 2 else 1e-3
        assert vals[0] < bound and vals[-1] > 1 - bound
    assert t_cdf(math.inf, 3) == 1.0
    assert t_cdf(-math.inf, 3) == 0.0


def test_t_cdf_against_quadrature_oracle():
    for df in DFS:
        for x in np.arange(-8.0, 8.5, 0.5):
            assert t_cdf(float(x), df) == pytest.approx(quad_t_cdf(float(x), df), abs=1e-10)


def test_t_cdf_against_scipy():
    for df in DFS + [1e5, 1e6]:
        for x in [-6.0, -1.7, 0.13, 2.0, 5.5]:
            assert t_cdf(x, df) == pytest.approx(scipy.stats.t.cdf(x, df), abs=1e-10)


def test_t_cdf_frozen_value():
    # df=10, x=2: frozen from the quadrature oracle
    assert t_cdf(2.0, 10.0) == pytest.approx(0.9633059826665225, abs=1e-10)
    assert quad_t_cdf(2.0, 10.0) == pytest.approx(0.9633059826665225, abs=1e-8)


def test_t_cdf_rejects_bad_df():
    with pytest.raises(StatsError):
        t_cdf(1.0, 0.0)
    with pytest.raises(StatsError):
        t_cdf(1.0, -3.0)


def test_t_quantile_median_and_symmetry():
    for df in DFS:
        assert t_quantile(0.5, df) == 0.0
        for p in [0.6, 0.9, 0.975, 0.999]:
            assert t_quantile(1 - p, df) == pytest.approx(-t_quantile(p, df), abs=1e-12)


def test_t_quantile_roundtrip_grid():
    # identity in x, except that p near 1 is quantized to float spacing
    # (~1.1e-16), which bounds any inverse's achievable x resolution
    for df in DFS:
        for x in np.arange(-8.0, 8.25, 0.25):
            xf = float(x)
            p = t_cdf(xf, df)
            if not 0.0 < p < 1.0:
                continue
            quantization = np.spacing(p) / t_pdf(xf, df)
            tol = max(1e-9, 4.0 * quantization)
            assert t_quantile(p, df) == pytest.approx(xf, abs=tol)


def test_t_quantile_cdf_roundtrip_in_p():
    for df in DFS:
        for p in [1e-10, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.975, 0.9999, 1 - 1e-9]:
            assert t_cdf(t_quantile(p, df), df) == pytest.approx(p, abs=1e-9)


def test_t_quantile_monotone_in_p():
    ps = np.linspace(0.01, 0.99, 99)
    for df in [2.0, 940.0]:
        qs = [t_quantile(float(p), df) for p in ps]
        assert all(b > a for a, b in zip(qs, qs[1:]))


def bisect_quantile(p, df):
    lo, hi = -1e6, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_t_quantile_bonferroni_940():
    # the quantile behind the three-coefficient audit table at level .95
    p = 1 - 0.05 / (2 * 3)
    q = t_quantile(p, 940.0)
    assert q == pytest.approx(bisect_quantile(p, 940.0), abs=1e-9)
    assert q == pytest.approx(scipy.stats.t.ppf(p, 940.0), abs=1e-9)
    # printed-table half-width ratio: (3.4725821093 - 3.357035467) / 0.0482655
    assert q == pytest.approx((3.4725821093 - 3.357035467) / 0.0482655, abs=5e-3)


def test_t_quantile_domain():
    for bad in [0.0, 1.0, -0.2, 1.7]:
        with pytest.raises(StatsError):
            t_quantile(bad, 10.0)


# --- Welch CI -----------------------------------------------------------------


def oracle_welch(xs, ys, level, k=1):
    n1, n2 = len(xs), len(ys)
    m1 = math.fsum(xs) / n1
    m2 = math.fsum(ys) / n2
    v1 = math.fsum((v - m1) ** 2 for v in xs) / (n1 - 1)
    v2 = math.fsum((v - m2) ** 2 for v in ys) / (n2 - 1)
    a1, a2 = v1 / n1, v2 / n2
    df = (a1 + a2) ** 2 / (a1**2 / (n1 - 1) + a2**2 / (n2 - 1))
    q = scipy.stats.t.ppf(1 - (1 - level) / k / 2, df)
    half = q * math.sqrt(a1 + a2)
    return m1 - m2, half, df


def test_welch_identical_samples_symmetric_about_zero():
    r = welch_ci(col([1, 2, 3]), col([1, 2, 3]), 0.95)
    assert r.estimate == 0.0
    assert r.lower == pytest.approx(-r.upper, abs=1e-15)
    assert r.lower < 0 < r.upper


def test_welch_matches_formula_oracle():
    rng = random.Random(7)
    for _ in range(25):
        xs = [rng.gauss(5, 2) for _ in range(rng.randint(2, 40))]
        ys = [rng.gauss(3, 1) for _ in range(rng.randint(2, 40))]
        level = rng.choice([0.9, 0.95, 0.99])
        r = welch_ci(col(xs), col(ys), level)
        est, half, df = oracle_welch(xs, ys, level)
        assert r.estimate == pytest.approx(est, abs=1e-10)
        assert r.half_width() == pytest.approx(half, abs=1e-10)
        assert r.df == pytest.approx(df, rel=1e-10)


def test_welch_k1_equals_unadjusted():
    xs, ys = col([1.0, 2, 3, 4]), col([0.5, 1.5, 2.0])
    a = welch_ci(xs, ys, 0.95)
    b = welch_ci(xs, ys, 0.95, k=1)
    assert (a.lower, a.upper) == (b.lower, b.upper)


def test_welch_bonferroni_widening_ratio():
    xs, ys = col([1.0, 2, 3, 4, 7]), col([0.5, 1.5, 2.0, 9.0])
    plain = welch_ci(xs, ys, 0.95)
    wide = welch_ci(xs, ys, 0.95, k=8)
    expect = t_quantile(1 - 0.05 / 16, plain.df) / t_quantile(0.975, plain.df)
    assert wide.half_width() / plain.half_width() == pytest.approx(expect, abs=1e-12)


def test_welch_halfwidth_nondecreasing_in_k():
    xs, ys = col([1.0, 4, 2, 8]), col([3.0, 1, 5])
    widths = [welch_ci(xs, ys, 0.95, k=k).half_width() for k in range(1, 9)]
    assert all(b >= a for a, b in zip(widths, widths[1:]))


def test_welch_swap_reflects_interval():
    xs, ys = col([1.0, 2, 3, 9]), col([4.0, 5, 6])
    a = welch_ci(xs, ys, 0.95)
    b = welch_ci(ys, xs, 0.95)
    assert b.estimate == pytest.approx(-a.estimate, abs=1e-14)
    assert b.lower == pytest.approx(-a.upper, abs=1e-12)
    assert b.upper == pytest.approx(-a.lower, abs=1e-12)


def test_welch_missing_excluded():
    xs = col([1.0, 2, 3, 500], missing=[3])
    ys = col([1.0, 2, 3])
    r = welch_ci(xs, ys, 0.95)
    assert r.estimate == 0.0
    assert (r.n1, r.n2) == (3, 3)


def test_welch_degenerate_errors():
    with pytest.raises(StatsError):
        welch_ci(col([1.0]), col([1.0, 2.0]), 0.95)
    with pytest.raises(StatsError):
        welch_ci(col([2.0, 2.0]), col([3.0, 3.0]), 0.95)
    with pytest.raises(StatsError):
        welch_ci(col([1.0, 2.0]), col([1.0, 2.0]), 1.5)


# --- OLS ----------------------------------------------------------------------


def oracle_ols(yv, xcols):
    """Exact-rational normal equations: beta and s^2 (X'X)^-1 diagonal."""
    n = len(yv)
    X = [[Fraction(1)] + [Fraction(c[i]) for c in xcols] for i in range(n)]
    y = [Fraction(v) for v in yv]
    p = len(X[0])
    A = [[sum(X[r][i] * X[r][j] for r in range(n)) for j in range(p)] for i in range(p)]
    b = [sum(X[r][i] * y[r] for r in range(n)) for i in range(p)]
    # Gauss-Jordan with exact arithmetic, augmented with identity for the inverse
    aug = [row[:] + [Fraction(int(i == j)) for j in range(p)] + [b[i]] for i, row in enumerate(A)]
    for i in range(p):
        piv = next(r for r in range(i, p) if aug[r][i] != 0)
        aug[i], aug[piv] = aug[piv], aug[i]
        inv = 1 / aug[i][i]
        aug[i] = [v * inv for v in aug[i]]
        for r in range(p):
            if r != i and aug[r][i] != 0:
                f = aug[r][i]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[i])]
    beta = [aug[i][-1] for i in range(p)]
    rss = sum((y[r] - sum(X[r][j] * beta[j] for j in range(p))) ** 2 for r in range(n))
    sigma2 = rss / (n - p)
    se2 = [sigma2 * aug[i][p + i] for i in range(p)]
    return [float(v) for v in beta], [math.sqrt(float(v)) for v in se2]


def test_ols_exact_fit():
    x = [0.0, 1, 2, 3, 4]
    y = [2 * v + 1 for v in x]
    fit = ols_fit(col(y), [col(x)])
    assert fit.est == pytest.approx([1.0, 2.0], abs=1e-12)
    assert fit.se == pytest.approx([0.0, 0.0], abs=1e-12)
    assert list(fit.p_values) == [0.0, 0.0]


def test_ols_against_exact_normal_equations():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(8, 50)
        p = rng.randint(1, 4)
        xcols = [[rng.uniform(-5, 5) for _ in range(n)] for _ in range(p)]
        yv = [
            1.5
            + math.fsum(0.7 * (j + 1) * xcols[j][i] for j in range(p))
            + rng.gauss(0, 1)
            for i in range(n)
        ]
        fit = ols_fit(col(yv), [col(c) for c in xcols])
        obeta, ose = oracle_ols(yv, xcols)
        for a, b in zip(fit.est, obeta):
            assert a == pytest.approx(b, rel=1e-9, abs=1e-11)
        for a, b in zip(fit.se, ose):
            assert a == pytest.approx(b, rel=1e-9, abs=1e-11)


def test_ols_pvalues_match_t_reference():
    rng = random.Random(3)
    n = 30
    x = [rng.uniform(0, 10) for _ in range(n)]
    y = [2 + 0.3 * v + rng.gauss(0, 2) for v in x]
    fit = ols_fit(col(y), [col(x)])
    for t, pv in zip(fit.t_stats, fit.p_values):
        assert pv == pytest.approx(2 * (1 - t_cdf(abs(t), fit.df_resid)), abs=1e-14)
        assert 0.0 <= pv <= 1.0


def test_ols_permutation_invariance():
    rng = random.Random(5)
    n = 25
    x1 = [rng.uniform(-3, 3) for _ in range(n)]
    x2 = [rng.uniform(-3, 3) for _ in range(n)]
    y = [1 + 2 * a - b + rng.gauss(0, 1) for a, b in zip(x1, x2)]
    fit = ols_fit(col(y), [col(x1), col(x2)])
    perm = list(range(n))
    rng.shuffle(perm)
    fit2 = ols_fit(
        col([y[i] for i in perm]),
        [col([x1[i] for i in perm]), col([x2[i] for i in perm])],
    )
    assert fit2.est == pytest.approx(fit.est, abs=1e-12)
    assert fit2.se == pytest.approx(fit.se, abs=1e-12)


def test_ols_residual_orthogonality():
    rng = random.Random(9)
    n = 40
    xcols = [[rng.uniform(-2, 2) for _ in range(n)] for _ in range(3)]
    y = [math.fsum(c[i] for c in xcols) + rng.gauss(0, 0.5) for i in range(n)]
    fit = ols_fit(col(y), [col(c) for c in xcols])
    yv = np.array(y)
    X = np.column_stack([np.ones(n)] + [np.array(c) for c in xcols])
    resid = yv - X @ fit.est
    assert np.max(np.abs(X.T @ resid)) < 1e-8 * np.linalg.norm(yv)


def test_ols_complete_case_and_dropped_count():
    y = col([1.0, 2, 3, 4, 5, 6], missing=[0])
    x = col([0.0, 1, 2, 3, 4, 100], missing=[5])
    fit = ols_fit(y, [x], names=["x"])
    assert fit.n == 4
    assert fit.n_dropped == 2
    assert fit.est == pytest.approx([1.0, 1.0], abs=1e-10)


def test_ols_collinear_column_named():
    x1 = [1.0, 2, 3, 4, 5]
    x2 = [2.0, 4, 6, 8, 10]
    y = [1.0, 2, 1, 2, 1]
    with pytest.raises(StatsError, match="dup"):
        ols_fit(col(y), [col(x1), col(x2)], names=["base", "dup"])


def test_ols_too_few_rows():
    with pytest.raises(StatsError):
        ols_fit(col([1.0, 2]), [col([1.0, 2])])


def test_ols_sd_fields():
    rng = random.Random(13)
    x = [rng.uniform(0, 1) for _ in range(20)]
    y = [3 * v + rng.gauss(0, 0.1) for v in x]
    fit = ols_fit(col(y), [col(x)])
    assert fit.sd_x[0] == 0.0
    assert fit.sd_x[1] == pytest.approx(float(np.std(x, ddof=1)), rel=1e-12)
    assert fit.sd_y == pytest.approx(float(np.std(y, ddof=1)), rel=1e-12)


# --- ranges and outlier scores --------------------------------------------------


def make_table(**cols):
    first = next(iter(cols.values()))
    return Table("t", {k: v for k, v in cols.items()}, nrow=len(first))


def test_column_ranges_basic():
    t = make_table(a=col([0, 5, 117]), b=col([-1, 2, 3]))
    r = column_ranges(t)
    assert r.rows == [("a", 0.0, 117.0), ("b", -1.0, 3.0)]
    assert r.minimum("a") == 0.0


def test_column_ranges_skips_missing_and_errors_all_missing():
    t = make_table(a=col([0, 5, 117], missing=[0]))
    assert column_ranges(t).rows == [("a", 5.0, 117.0)]
    bad = make_table(a=col([1.0], missing=[0]))
    with pytest.raises(StatsError, match="'a'"):
        column_ranges(bad)


def test_mad_scores_no_outliers():
    s = mad_outlier_scores(col([1, 2, 3, 4, 5]))
    assert float(np.max(s.values)) < 2.0


def test_mad_scores_gross_outlier():
    s = mad_outlier_scores(col([1, 2, 3, 4, 1000]))
    assert s.values[-1] > 3.5


def test_mad_scores_missing_preserved():
    s = mad_outlier_scores(col([1, 2, 3, 4, 5], missing=[2]))
    assert list(s.missing) == [False, False, True, False, False]


def test_mad_zero_spread_errors():
    with pytest.raises(StatsError, match="zero spread"):
        mad_outlier_scores(col([5, 5, 5, 5, 9]))


# dyadic values keep a*v + b exact in binary64, so the algebraic identity
# is tested without roundoff noise from ill-scaled inputs
@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(-(2**20), 2**20).map(lambda n: n / 64.0), min_size=4, max_size=30),
    st.sampled_from([0.5, 1.0, 2.0, 3.5, 8.0]),
    st.integers(-800, 800).map(lambda n: n / 8.0),
    st.booleans(),
)
def test_mad_scores_affine_invariant(vals, scale, shift, flip):
    a = -scale if flip else scale
    try:
        s1 = mad_outlier_scores(col(vals))
    except StatsError:
        return
    s2 = mad_outlier_scores(col([a * v + shift for v in vals]))
    assert np.allclose(s1.values, s2.values, atol=1e-12, rtol=1e-12)
