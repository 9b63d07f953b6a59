"""Constrained signaling schemes for second-price auctions."""

from .core import (
    AuctionReport,
    Instance,
    Prior,
    Scheme,
    SchemeComponent,
    auction_report,
    conditional_value,
    full_welfare_scheme,
    marginals,
    revenue as scheme_revenue,
    truncate_scheme,
    validate_scheme,
    welfare,
    welfare_excluding,
)
from .errors import (
    DegenerateInstance,
    MalformedSignal,
    MatroidViolation,
    SignalingError,
    SizeGuardError,
    UnsupportedConstraint,
    ValidationError,
    ZeroProbabilitySignal,
)

__version__ = "0.1.0"
