"""rvl: a replayable statistical-analysis workbench.

Analyses are recorded as scripts in RVL, a small line-oriented language.
Scripts replay deterministically, can be branched into numbered saved
versions, and every run can be audited for common statistical-methodology
hazards.
"""

from .audit import AuditConfig, audit_session, coef_audit, render_audit_table
from .branches import BranchStore, diff_scripts
from .dsl import ParseError, format_script, parse_expr, parse_script
from .engine import RunError, Session, load_csv, new_session

__version__ = "0.1.0"

__all__ = [
    "AuditConfig",
    "BranchStore",
    "ParseError",
    "RunError",
    "Session",
    "audit_session",
    "coef_audit",
    "diff_scripts",
    "format_script",
    "load_csv",
    "new_session",
    "parse_expr",
    "parse_script",
    "render_audit_table",
    "__version__",
]
