"""Utilities initialization"""

from trajinfo.utils.numeric import (
    wrap_angle,
    wrap_periodic,
    derive_seed,
    make_rng,
    parse_seed_list,
)
from trajinfo.utils.console import (
    console,
    log,
    warn,
    set_verbose,
    is_verbose,
    make_progress,
)

__all__ = [
    "wrap_angle",
    "wrap_periodic",
    "derive_seed",
    "make_rng",
    "parse_seed_list",
    "console",
    "log",
    "warn",
    "set_verbose",
    "is_verbose",
    "make_progress",
]
