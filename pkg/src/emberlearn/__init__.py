"""Fire-spread simulation, surrogate training, and evaluation toolkit."""

__version__ = "0.1.0"

from .simulation import (  # noqa: F401
    ConfigurationError,
    SimConfig,
    SimParams,
    run_simulation,
)
