"""The architecture registry: one canonical id per module variant.

The family is organized along four ablation axes: where the visual bottleneck
sits (early or late), whether sign symmetry is kept (concatenated rectification
of both signs), whether multiplicative interactions are kept (squared units),
and which plain activation substitutes when they are not. The registry holds
exactly the 24 valid combinations; anything else is rejected.
"""

from dataclasses import dataclass

from ..errors import ConfigurationError

BOTTLENECKS = ("early", "late")
SYMMETRIES = ("full", "partial", "none")
MULTIPLICATIVES = ("full", "partial", "none")
ACTIVATIONS = ("cres", "relu_sq", "relu", "tanh", "sigmoid", "elu", "crelu")
SIZE_CLASSES = ("ems", "small", "medium", "large")


@dataclass(frozen=True)
class ArchitectureId:
    """A point in the ablation lattice, keyed by its canonical name."""

    name: str
    bottleneck: str
    symmetry: str
    multiplicative: str
    activation: str
    size_class: str

    def __post_init__(self):
        if self.name not in _REGISTRY_FIELDS:
            raise ConfigurationError(f"unknown architecture {self.name!r}")
        if _REGISTRY_FIELDS[self.name] != (
            self.bottleneck,
            self.symmetry,
            self.multiplicative,
            self.activation,
            self.size_class,
        ):
            raise ConfigurationError(f"invalid field combination for {self.name!r}")


def _build_registry():
    fields = {
        "ems": ("early", "full", "full", "cres", "ems"),
        "partial-symm": ("early", "partial", "full", "relu_sq", "ems"),
        "no-symm": ("early", "none", "full", "relu_sq", "ems"),
        "no-symm-partial-mult": ("early", "none", "partial", "relu_sq", "ems"),
    }
    for act in ("relu", "tanh", "sigmoid", "elu", "crelu"):
        symmetry = "full" if act == "crelu" else "none"
        fields[f"no-mult-{act}"] = ("early", symmetry, "none", act, "ems")
        for size in ("small", "medium", "large"):
            fields[f"late-{act}-{size}"] = ("late", symmetry, "none", act, size)
    return fields


_REGISTRY_FIELDS = _build_registry()

ARCHITECTURES = tuple(sorted(_REGISTRY_FIELDS))


def parse_architecture(name: str) -> ArchitectureId:
    fields = _REGISTRY_FIELDS.get(name)
    if fields is None:
        raise ConfigurationError(f"unknown architecture {name!r}")
    return ArchitectureId(name, *fields)


def downstream_activation(arch: ArchitectureId) -> str:
    """Activation for the post-concatenation stack.

    The partial-multiplicative ablation removes the rectification from the
    relu-plus-square activation, leaving the unit and its square.
    """
    if arch.multiplicative == "partial":
        return "sq"
    return arch.activation


def bottleneck_activation(arch: ArchitectureId) -> str:
    """Activation applied at the early visual bottleneck.

    Symmetric variants rectify both signs; the relu-plus-square family uses a
    plain rectifier; plain-activation variants reuse their named activation.
    """
    if arch.bottleneck != "early":
        raise ConfigurationError(f"{arch.name} has no early bottleneck")
    if arch.symmetry in ("full", "partial"):
        return "crelu"
    if arch.activation == "relu_sq":
        return "relu"
    return arch.activation


# Units per layer by task family (the row used for a given base task) and size
# class. The "small" late-bottleneck class is resolved by parameter-count
# search against the matching early-bottleneck module, so it has no row here.
TASK_FAMILY_WIDTHS = {
    "SR": {"ems": 8, "medium": 128, "large": 512},
    "MTS": {"ems": 32, "medium": 128, "large": 512},
    "LOC": {"ems": 128, "medium": 512, "large": 1024},
}


def task_family(task_id: str) -> str:
    if task_id.startswith("sr"):
        return "SR"
    if task_id.startswith("mts") or task_id == "scene-mts":
        return "MTS"
    if task_id == "loc":
        return "LOC"
    raise ConfigurationError(f"unknown task id {task_id!r}")
