"""Statistical audit: coefficient-audit tables and session-level advisories.

The coefficient audit treats all k coefficient rows of a fit as one
inference family: intervals use the two-sided t quantile at
1 - (1-level)/(2k) and p-values are Bonferroni-scaled, min(1, k*p).
On top of the adjusted numbers it flags two hazards:

  SMALL_EFFECT  significant after adjustment, but the standardized
                effect |est| * sd(x)/sd(y) is below a practical cutoff;
  UNDERPOWERED  not significant, yet the interval still straddles
                +-delta for a user-supplied practical delta, so the
                data cannot rule out effects that would matter.

Session auditing adds run-level rules: uncorrected multiple inference,
gross outliers in loaded tables, and overfitting risk (too few rows per
coefficient).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from . import stats
from .formatting import fmt_num

if TYPE_CHECKING:  # pragma: no cover
    from .engine import Session

SMALL_EFFECT = "SMALL_EFFECT"
UNDERPOWERED = "UNDERPOWERED"

W1_SMALL_EFFECT = "W1_SMALL_EFFECT"
W2_UNDERPOWERED = "W2_UNDERPOWERED"
W3_MULTIPLE_INFERENCE = "W3_MULTIPLE_INFERENCE"
W4_OUTLIERS = "W4_OUTLIERS"
W5_OVERFIT = "W5_OVERFIT"


@dataclass(frozen=True)
class CoefAuditRow:
    name: str
    est: float
    left: float
    right: float
    p_adj: float
    warnings: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AuditTable:
    rows: tuple[CoefAuditRow, ...]


@dataclass(frozen=True)
class Advisory:
    code: str
    message: str
    line_no: int = 0
    subject: str = ""

    def render(self) -> str:
        return f"WARN {self.code}: {self.message} (line {self.line_no})"


@dataclass(frozen=True)
class AuditConfig:
    level: float = 0.95
    practical_threshold: float = 0.05
    practical_delta: float = 0.0
    w3_min: int = 2
    w4_cutoff: float = 3.5
    w5_min_ratio: float = 10.0


def coef_audit(
    fit: stats.OlsFit,
    level: float = 0.95,
    practical_threshold: float = 0.05,
    practical_delta: float = 0.0,
) -> list[CoefAuditRow]:
    """Bonferroni-adjusted intervals and p-values over all coefficient rows.

    k equals the number of coefficients (intercept included), so with a
    single coefficient the output reduces to the unadjusted interval.
    The intercept is exempt from SMALL_EFFECT; practical_delta == 0
    turns UNDERPOWERED off entirely.
    """
    if not 0.0 < level < 1.0:
        raise stats.StatsError("confidence level must lie strictly in (0, 1)")
    k = fit.p
    alpha = 1.0 - level
    q = stats.t_quantile(1.0 - alpha / (2.0 * k), fit.df_resid)
    delta = practical_delta * fit.sd_y
    rows = []
    for i, name in enumerate(fit.coef_names):
        est = float(fit.est[i])
        half = q * float(fit.se[i])
        p_adj = min(1.0, k * float(fit.p_values[i]))
        warnings = set()
        if p_adj < alpha:
            if fit.sd_x[i] > 0.0 and fit.sd_y > 0.0:
                standardized = abs(est) * float(fit.sd_x[i]) / fit.sd_y
                if standardized < practical_threshold:
                    warnings.add(SMALL_EFFECT)
        elif practical_delta > 0.0:
            if est - half < -delta and est + half > delta:
                warnings.add(UNDERPOWERED)
        rows.append(
            CoefAuditRow(
                name=name,
                est=est,
                left=est - half,
                right=est + half,
                p_adj=p_adj,
                warnings=frozenset(warnings),
            )
        )
    return rows


def render_audit_table(rows) -> str:
    """Fixed-width table matching the printed audit layout:
    est. 10 decimals, bounds 9, p-values 8, X marks SMALL_EFFECT."""
    rows = list(rows)
    if not rows:
        raise ValueError("audit table needs at least one row")
    header = ["", "est.", "left", "right", "p-val", "warning"]
    body = []
    for i, r in enumerate(rows, start=1):
        body.append(
            [
                str(i),
                "%.10f" % r.est,
                "%.9f" % r.left,
                "%.9f" % r.right,
                "%.8f" % r.p_adj,
                "X" if SMALL_EFFECT in r.warnings else "",
            ]
        )
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    out = []
    for line in [header] + body:
        out.append(" ".join(c.rjust(w) for c, w in zip(line, widths)).rstrip())
    return "\n".join(out)


def audit_session(session: "Session", config: AuditConfig = AuditConfig()) -> list[Advisory]:
    """Run-level advisories, a pure function of session state and config."""
    advisories: list[Advisory] = []

    # coefficient-level hazards on every fitted model in the environment
    for mname, fit in session.fits().items():
        line = session.model_lines.get(mname, 0)
        rows = coef_audit(
            fit, config.level, config.practical_threshold, config.practical_delta
        )
        for row in rows:
            subject = f"{mname}:{row.name}"
            if SMALL_EFFECT in row.warnings:
                standardized = abs(row.est) * _sd_x_of(fit, row.name) / fit.sd_y
                advisories.append(
                    Advisory(
                        W1_SMALL_EFFECT,
                        f"coefficient {row.name!r} of model {mname!r} is significant"
                        f" (adjusted p {fmt_num(row.p_adj)}) but its standardized effect"
                        f" {fmt_num(standardized)} is below {fmt_num(config.practical_threshold)};"
                        " the effect may have no practical importance",
                        line,
                        subject,
                    )
                )
            if UNDERPOWERED in row.warnings:
                advisories.append(
                    Advisory(
                        W2_UNDERPOWERED,
                        f"coefficient {row.name!r} of model {mname!r} is not significant,"
                        " yet its interval"
                        f" [{fmt_num(row.left)}, {fmt_num(row.right)}] still contains"
                        " effects of practical size in both directions; the sample is"
                        " too small to call this a no-difference finding",
                        line,
                        subject,
                    )
                )

    # uncorrected multiple inference
    if session.inference_count >= config.w3_min and session.correction_count == 0:
        first = session.inference_lines[0] if session.inference_lines else 0
        advisories.append(
            Advisory(
                W3_MULTIPLE_INFERENCE,
                f"{session.inference_count} interval estimates were formed with no"
                " multiple inference correction; consider a procedure such as the"
                " Bonferroni method (ci_bonf ... k N) to limit accidental findings",
                first,
                "uncorrected inferences",
            )
        )

    # gross outliers per loaded table column
    for tname, table in session.tables().items():
        line = table.load_line
        for cname, col in table.columns.items():
            try:
                scores = stats.mad_outlier_scores(col)
            except stats.StatsError:
                continue
            worst = float(scores.values[~scores.missing].max())
            if worst > config.w4_cutoff:
                advisories.append(
                    Advisory(
                        W4_OUTLIERS,
                        f"column {tname}.{cname} has highly influential outliers"
                        f" (max robust z-score {fmt_num(worst)} > {fmt_num(config.w4_cutoff)});"
                        " consider a robust method, e.g. quantile regression, or check"
                        " whether extreme values encode missing data",
                        line,
                        f"{tname}.{cname}",
                    )
                )

    # overfitting risk
    for mname, fit in session.fits().items():
        ratio = fit.n / fit.p
        if ratio < config.w5_min_ratio:
            advisories.append(
                Advisory(
                    W5_OVERFIT,
                    f"model {mname!r} fits {fit.p} coefficients to {fit.n} rows"
                    f" (n/p = {fmt_num(ratio)} < {fmt_num(config.w5_min_ratio)});"
                    " possible overfitting",
                    session.model_lines.get(mname, 0),
                    mname,
                )
            )

    return advisories


def _sd_x_of(fit: stats.OlsFit, coef_name: str) -> float:
    for i, name in enumerate(fit.coef_names):
        if name == coef_name:
            return float(fit.sd_x[i])
    return 0.0
