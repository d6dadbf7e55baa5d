"""Missing-aware numerics kernel: moments, Student-t, Welch intervals, OLS.

All vector inputs are a value array paired with a boolean missing mask
(True = missing). A missing cell's stored value is never read. Every
function here is pure and deterministic; the interpreter and audit
layers do all I/O and rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Column",
    "Table",
    "CiResult",
    "OlsFit",
    "RangeTable",
    "StatsError",
    "column_ranges",
    "mad_outlier_scores",
    "mean_sd",
    "ols_fit",
    "t_cdf",
    "t_pdf",
    "t_quantile",
    "welch_ci",
]


class StatsError(ValueError):
    """Domain or degeneracy error from a kernel operation."""


@dataclass
class Column:
    """A numeric vector with an explicit missingness mask."""

    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing = np.asarray(self.missing, dtype=bool)
        if self.values.shape != self.missing.shape:
            raise StatsError("values and missing mask differ in length")

    @classmethod
    def from_values(cls, values) -> "Column":
        vals = np.asarray(values, dtype=np.float64)
        return cls(vals, np.zeros(vals.shape, dtype=bool))

    def __len__(self) -> int:
        return len(self.values)

    def nonmissing(self) -> np.ndarray:
        return self.values[~self.missing]

    def n_missing(self) -> int:
        return int(self.missing.sum())

    def copy(self) -> "Column":
        return Column(self.values.copy(), self.missing.copy())


@dataclass
class Table:
    """Columnar dataset; all columns share one row count."""

    name: str
    columns: dict[str, Column]
    nrow: int
    # line of the load statement that produced the table, 0 if unknown
    load_line: int = 0

    def __post_init__(self) -> None:
        for cname, col in self.columns.items():
            if len(col) != self.nrow:
                raise StatsError(f"column {cname!r} has {len(col)} rows, expected {self.nrow}")

    @property
    def colnames(self) -> list[str]:
        return list(self.columns.keys())

    def column(self, name: str) -> Column:
        if name not in self.columns:
            raise StatsError(f"table {self.name!r} has no column {name!r}")
        return self.columns[name]


@dataclass
class RangeTable:
    """Per-column (min, max) over non-missing cells."""

    rows: list[tuple[str, float, float]]

    def minimum(self, name: str) -> float:
        for cname, lo, _ in self.rows:
            if cname == name:
                return lo
        raise KeyError(name)


@dataclass
class CiResult:
    """A two-sample mean-difference confidence interval.

    k_comparisons records the Bonferroni family size used to widen the
    interval; 1 means unadjusted.
    """

    label: str
    estimate: float
    lower: float
    upper: float
    level_nominal: float
    k_comparisons: int
    n1: int
    n2: int
    df: float

    def half_width(self) -> float:
        return (self.upper - self.lower) / 2.0


@dataclass
class OlsFit:
    """Least-squares fit with the per-coefficient quantities the audit needs.

    sd_x holds the sample sd of each design column (0 for the intercept)
    and sd_y the sample sd of the response, both over the rows actually
    used, so standardized effect sizes can be formed without the data.
    """

    coef_names: list[str]
    est: np.ndarray
    se: np.ndarray
    df_resid: float
    n: int
    p: int
    sd_x: np.ndarray
    sd_y: float
    t_stats: np.ndarray
    p_values: np.ndarray
    n_dropped: int = 0
    has_intercept: bool = True
    source_line: int = field(default=0, compare=False)


def _as_column(v) -> Column:
    if isinstance(v, Column):
        return v
    return Column.from_values(v)


def mean_sd(v) -> tuple[float, float, int]:
    """Mean and sample sd (divisor n-1) over non-missing cells.

    Returns (mean, sd, n_nonmissing); sd is NaN when only one value is
    present. Raises StatsError when every cell is missing.
    """
    col = _as_column(v)
    vals = col.nonmissing()
    n = len(vals)
    if n == 0:
        raise StatsError("all values are missing")
    mean = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1)) if n >= 2 else math.nan
    return mean, sd, n


# --- Student-t distribution -------------------------------------------------
#
# t_cdf goes through the regularized incomplete beta function, evaluated
# with the modified-Lentz continued fraction; t_quantile inverts it by
# bisection plus Newton polishing. No external dependencies so the same
# bits come out on any platform.

_BETACF_MAXIT = 400
_BETACF_EPS = 3e-16
_BETACF_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_FPMIN:
        d = _BETACF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise StatsError("incomplete beta continued fraction did not converge")


# Stirling correction S(z) with lgamma(z) = (z-1/2)ln z - z + ln(2*pi)/2 + S(z);
# accurate below 1e-19 for z >= 30.
_STIRLING_COEF = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
)


def _stirling_tail(z: float) -> float:
    zi = 1.0 / z
    z2 = zi * zi
    acc = 0.0
    power = zi
    for c in _STIRLING_COEF:
        acc += c * power
        power *= z2
    return acc


def _lgamma_ratio(a: float, b: float) -> float:
    """lgamma(a+b) - lgamma(a) without cancellation, for a >= 30."""
    return (
        (a - 0.5) * math.log1p(b / a)
        + b * math.log(a + b)
        - b
        + _stirling_tail(a + b)
        - _stirling_tail(a)
    )


def _log_beta(a: float, b: float) -> float:
    lo, hi = min(a, b), max(a, b)
    if hi >= 30.0:
        return math.lgamma(lo) - _lgamma_ratio(hi, lo)
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betainc_reg(a: float, b: float, x: float, xc: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    xc is 1-x supplied by callers that can compute it without
    cancellation (x very close to 1 otherwise loses ~5 digits).
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if xc is None:
        xc = 1.0 - x
    ln_bt = -_log_beta(a, b) + a * math.log(x) + b * math.log(xc)
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, xc) / b


def t_cdf(x: float, df: float) -> float:
    """P(T_df <= x)."""
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if math.isnan(x):
        return math.nan
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    denom = df + x * x
    tail = 0.5 * _betainc_reg(0.5 * df, 0.5, df / denom, x * x / denom)
    return tail if x < 0 else 1.0 - tail


def t_pdf(x: float, df: float) -> float:
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    ln = (
        math.lgamma(0.5 * (df + 1.0))
        - math.lgamma(0.5 * df)
        - 0.5 * math.log(df * math.pi)
        - 0.5 * (df + 1.0) * math.log1p(x * x / df)
    )
    return math.exp(ln)


def t_quantile(p: float, df: float) -> float:
    """Inverse of t_cdf in p; bisection bracket, then Newton polish.

    Solved in the lower tail, where t_cdf carries full relative
    precision, so far-tail quantiles do not lose digits to 1-p
    cancellation.
    """
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if not 0.0 < p < 1.0:
        raise StatsError("quantile probability must lie strictly in (0, 1)")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -t_quantile(1.0 - p, df)

    lo = -1.0
    while t_cdf(lo, df) > p:
        lo *= 2.0
        if lo < -1e300:
            raise StatsError("quantile bracket overflow")
    hi = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(lo)):
            break
    q = 0.5 * (lo + hi)
    for _ in range(6):
        dens = t_pdf(q, df)
        if dens <= 0.0:
            break
        step = (t_cdf(q, df) - p) / dens
        q -= step
        if abs(step) < 1e-15 * max(1.0, abs(q)):
            break
    return q


# --- Two-sample Welch interval ----------------------------------------------


def welch_ci(x, y, level: float, k: int = 1, label: str = "") -> CiResult:
    """Welch (unequal-variance) CI for mean(x) - mean(y).

    k is the Bonferroni comparison count: the interval uses the
    two-sided level 1 - (1-level)/k, so k=1 is the plain interval.
    """
    if not 0.0 < level < 1.0:
        raise StatsError("confidence level must lie strictly in (0, 1)")
    if k < 1:
        raise StatsError("comparison count k must be >= 1")
    xs = _as_column(x).nonmissing()
    ys = _as_column(y).nonmissing()
    n1, n2 = len(xs), len(ys)
    if n1 < 2 or n2 < 2:
        raise StatsError("each group needs at least 2 non-missing values")
    m1 = float(np.mean(xs))
    m2 = float(np.mean(ys))
    v1 = float(np.var(xs, ddof=1))
    v2 = float(np.var(ys, ddof=1))
    a1 = v1 / n1
    a2 = v2 / n2
    se2 = a1 + a2
    if se2 <= 0.0:
        raise StatsError("zero variance in both groups")
    df = se2 * se2 / (a1 * a1 / (n1 - 1) + a2 * a2 / (n2 - 1))
    alpha = 1.0 - level
    q = t_quantile(1.0 - (alpha / k) / 2.0, df)
    half = q * math.sqrt(se2)
    est = m1 - m2
    return CiResult(
        label=label,
        estimate=est,
        lower=est - half,
        upper=est + half,
        level_nominal=level,
        k_comparisons=int(k),
        n1=n1,
        n2=n2,
        df=df,
    )


# --- Ordinary least squares ---------------------------------------------------


def ols_fit(y, xs, intercept: bool = True, names: list[str] | None = None) -> OlsFit:
    """Least-squares fit of y on the predictor columns xs (complete-case).

    Rows with any missing value are dropped. Standard errors come from
    sigma^2 (X'X)^-1 via the QR factor; p-values are two-sided against
    t with n - p degrees of freedom.
    """
    ycol = _as_column(y)
    xcols = [_as_column(xv) for xv in xs]
    total = len(ycol)
    for c in xcols:
        if len(c) != total:
            raise StatsError("response and predictors differ in length")
    if names is None:
        names = [f"x{i + 1}" for i in range(len(xcols))]
    if len(names) != len(xcols):
        raise StatsError("one name per predictor required")

    keep = ~ycol.missing
    for c in xcols:
        keep &= ~c.missing
    n = int(keep.sum())
    n_dropped = total - n

    design_cols = []
    coef_names = []
    if intercept:
        design_cols.append(np.ones(n))
        coef_names.append("(Intercept)")
    for cname, c in zip(names, xcols):
        design_cols.append(c.values[keep])
        coef_names.append(cname)
    p = len(design_cols)
    if p == 0:
        raise StatsError("no predictors and no intercept")
    if n <= p:
        raise StatsError(f"too few complete rows (n={n}) for {p} coefficients")

    X = np.column_stack(design_cols)
    yv = ycol.values[keep]

    Q, R = np.linalg.qr(X)
    rdiag = np.abs(np.diag(R))
    tol = np.abs(R).max() * max(n, p) * np.finfo(np.float64).eps
    for i, rv in enumerate(rdiag):
        if rv <= tol:
            raise StatsError(f"column {coef_names[i]!r} is collinear with earlier columns")

    est = np.linalg.solve(R, Q.T @ yv)
    resid = yv - X @ est
    rss = float(resid @ resid)
    df_resid = float(n - p)
    sigma2 = rss / df_resid
    rinv = np.linalg.inv(R)
    xtx_inv = rinv @ rinv.T
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))

    t_stats = np.empty(p)
    p_values = np.empty(p)
    for i in range(p):
        if se[i] > 0.0:
            t_stats[i] = est[i] / se[i]
            p_values[i] = min(1.0, max(0.0, 2.0 * (1.0 - t_cdf(abs(t_stats[i]), df_resid))))
        else:
            # exact fit: zero residual variance
            t_stats[i] = math.inf if est[i] != 0.0 else 0.0
            p_values[i] = 0.0 if est[i] != 0.0 else 1.0

    sd_x = np.zeros(p)
    offset = 1 if intercept else 0
    for i, c in enumerate(xcols):
        sd_x[offset + i] = float(np.std(c.values[keep], ddof=1))
    sd_y = float(np.std(yv, ddof=1))

    return OlsFit(
        coef_names=coef_names,
        est=est,
        se=se,
        df_resid=df_resid,
        n=n,
        p=p,
        sd_x=sd_x,
        sd_y=sd_y,
        t_stats=t_stats,
        p_values=p_values,
        n_dropped=n_dropped,
        has_intercept=intercept,
    )


# --- Column summaries ---------------------------------------------------------


def column_ranges(t: Table) -> RangeTable:
    """(min, max) of each column over non-missing cells."""
    rows = []
    for cname, col in t.columns.items():
        vals = col.nonmissing()
        if len(vals) == 0:
            raise StatsError(f"column {cname!r} has no non-missing values")
        rows.append((cname, float(vals.min()), float(vals.max())))
    return RangeTable(rows)


def mad_outlier_scores(v) -> Column:
    """Robust z-scores |v - median| / (1.4826 * MAD); missing stays missing."""
    col = _as_column(v)
    vals = col.nonmissing()
    if len(vals) < 3:
        raise StatsError("need at least 3 non-missing values to score outliers")
    med = float(np.median(vals))
    mad = float(np.median(np.abs(vals - med)))
    if mad == 0.0:
        raise StatsError("zero spread: MAD is 0")
    scores = np.abs(col.values - med) / (1.4826 * mad)
    scores[col.missing] = 0.0
    return Column(scores, col.missing.copy())
