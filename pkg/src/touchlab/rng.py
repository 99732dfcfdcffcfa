"""Named deterministic random streams.

Every stochastic consumer (environment, policy sampling, each module's weight
init, the vote controller, validation probes) draws from its own child of a
single root seed. Streams are addressed by name so that adding a consumer, or
running one consumer more or less often, never perturbs the draws seen by the
others. Validation streams are reseeded per probe so probe cadence cannot
alter probe content.
"""

import numpy as np

# Fixed registry of stream names -> spawn offsets. Module-init streams are
# indexed by allocation order (module-0, module-1, ...) starting at _MODULE_BASE.
_NAMED = {
    "env": 0,
    "policy": 1,
    "controller": 2,
    "backbone": 3,
    "dataset": 4,
    "val-env": 5,
    "val-policy": 6,
}
_MODULE_BASE = 32


def stream_key(name: str) -> int:
    if name in _NAMED:
        return _NAMED[name]
    if name.startswith("module-"):
        idx = int(name.split("-", 1)[1])
        return _MODULE_BASE + idx
    raise KeyError(f"unknown stream name: {name!r}")


class RngHub:
    """Hands out independent generators derived from one root seed."""

    def __init__(self, root_seed: int):
        self.root_seed = int(root_seed)

    def get(self, name: str) -> np.random.Generator:
        key = stream_key(name)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.root_seed, key])))

    def probe(self, name: str, step: int) -> np.random.Generator:
        """A throwaway stream for a validation probe at a given step."""
        key = stream_key(name)
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.root_seed, key, int(step)]))
        )
