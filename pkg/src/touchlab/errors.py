"""Shared exception taxonomy.

Configuration problems (bad shapes, unknown names) are distinguished from
input-domain violations and from runtime training failures so callers can
react differently to each.
"""


class ConfigurationError(ValueError):
    """A build-time contract was violated: bad shape, unknown name, bad wiring."""


class InputError(ValueError):
    """A runtime input fell outside its documented domain."""


class TrainingError(RuntimeError):
    """Optimization produced a non-finite or otherwise unusable state."""


class RewardContractError(RuntimeError):
    """An environment emitted a reward outside [0, 1]."""


class CheckpointError(RuntimeError):
    """A weight container failed to load, verify, or round-trip."""
