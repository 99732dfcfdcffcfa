from .images import (
    COLORS,
    ImageBank,
    InstanceRecord,
    LabeledImage,
    N_CLASSES,
    Pose,
    class_shape_color,
    render_class_instance,
    render_scene,
    render_template,
    sample_pose,
    tight_bbox,
)
from .schedule import EmittedFrame, StepInfo, TouchStream, build_stream, replay_stream
from .tasks import (
    DEFAULT_SR_ASSIGNMENTS,
    LOCProgram,
    MTSProgram,
    REWARD_TRANSFORMS,
    SceneMTSProgram,
    SRProgram,
    TASK_IDS,
    TaskProgram,
    build_task_program,
    in_region,
    iou,
    match_layout,
    variant_number,
)

__all__ = [
    "COLORS",
    "DEFAULT_SR_ASSIGNMENTS",
    "EmittedFrame",
    "ImageBank",
    "InstanceRecord",
    "LOCProgram",
    "LabeledImage",
    "MTSProgram",
    "N_CLASSES",
    "Pose",
    "REWARD_TRANSFORMS",
    "SRProgram",
    "SceneMTSProgram",
    "StepInfo",
    "TASK_IDS",
    "TaskProgram",
    "TouchStream",
    "build_stream",
    "build_task_program",
    "class_shape_color",
    "in_region",
    "iou",
    "match_layout",
    "render_class_instance",
    "render_scene",
    "render_template",
    "replay_stream",
    "sample_pose",
    "tight_bbox",
    "variant_number",
]
