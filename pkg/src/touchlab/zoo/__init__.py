from .arch import (
    ARCHITECTURES,
    TASK_FAMILY_WIDTHS,
    ArchitectureId,
    bottleneck_activation,
    downstream_activation,
    parse_architecture,
    task_family,
)
from .modules import (
    CHECKPOINT_KIND,
    ModuleConfig,
    ReMaPModule,
    build_ablation,
    build_conv_ems,
    build_ems,
    build_module,
    count_parameters,
    small_late_widths,
    widths_for,
)
from .perfect import (
    PerfectSRModule,
    ems_twin_from_boundary,
    fit_boundary,
    normalize_coord,
    perfect_sr_module,
    predict_reward,
)

__all__ = [
    "ARCHITECTURES",
    "ArchitectureId",
    "CHECKPOINT_KIND",
    "ModuleConfig",
    "PerfectSRModule",
    "ReMaPModule",
    "TASK_FAMILY_WIDTHS",
    "bottleneck_activation",
    "build_ablation",
    "build_conv_ems",
    "build_ems",
    "build_module",
    "count_parameters",
    "downstream_activation",
    "ems_twin_from_boundary",
    "fit_boundary",
    "normalize_coord",
    "parse_architecture",
    "perfect_sr_module",
    "predict_reward",
    "small_late_widths",
    "task_family",
    "widths_for",
]
