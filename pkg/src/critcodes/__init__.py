"""Exact codes for continuous and lsc functions, envelopes, certified critical-point search and reversal gadgets."""

__version__ = "0.1.0"

from .codes import (
    Bracket,
    ContinuousCode,
    HonestLscCode,
    LscCode,
    cont_from_samples,
    cont_to_lsc,
    epigraph_to_lsc,
    eval_cont,
    eval_lsc_lower,
    honest_ball_inf,
    honest_promote_compact,
    lsc_add_scaled_distance,
    lsc_combine,
    lsc_zero_on_closed,
    patch,
    pl_code,
    pl_lsc,
    step_lsc,
)
from .ekeland import (
    CriticalityCertificate,
    SearchParams,
    fvp_min_compact,
    fvp_search,
    is_critical,
    lvp_search,
)
from .envelope import EnvelopeCode, envelope_modulus, envelope_value, inf_conv, transfer_critical
from .errors import BudgetExceeded, CodesError, InvalidInput, VerificationFailed
from .gadgets import (
    TreeSpec,
    aca_decode_range,
    aca_injection_gadget,
    aca_sup_gadget,
    embed_baire,
    embed_unit,
    lvp_to_fvp_lift,
    pi11_gadget,
    pseudofib_iota,
    pseudofib_pi,
    wkl_gadget,
    wkl_witness,
)
from .pl import PLFunction
from .spaces import Ball, dist, make_space, net, strictly_inside
