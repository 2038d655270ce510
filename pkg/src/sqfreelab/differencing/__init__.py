"""Differencing identities, their expansions and the pair-family machinery."""

from .identities import (
    F_a, F_ab, R_a, S_ab, S_hat_ab, p1_p2, p1_p2_combinations,
    qoppa, qoppa_envelope, qoppa_leading, upsilon, upsilon_envelope, upsilon_leading,
)
from .expansions import KINDS, TaylorResidual, calibrate_kind, next_monomial, taylor_residual
from .inversion import InversionError, breve_d, tilde_d
from .families import (
    BoostedReport, DefectRecord, PairFamily, ParamData, boosted_approx, defect_record,
    defect_records, defect_scan, membership_scan, near_integer_audit, pair_family, roth_param,
    spacing_audit, v_envelope,
)

__all__ = [name for name in dir() if not name.startswith("_") and name not in {"identities", "expansions", "inversion", "families"}]
