"""Request and response schemas for the experiment service.

Request configs are partial dicts deep-merged over the harness defaults on
the server side, so clients only send the knobs they changed. The seed,
output-dir, voting-mode, and transform-toggle overrides mirror the CLI flags.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class PretrainRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    out_dir: Optional[str] = None


class TaskRunRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    seed: Optional[int] = None
    out_dir: Optional[str] = None


class SuiteRunRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    seed: Optional[int] = None
    out_dir: Optional[str] = None


class SwitchRunRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    seed: Optional[int] = None
    out_dir: Optional[str] = None
    mode: Optional[Literal["layer", "unit"]] = None
    use_transforms: Optional[bool] = None


class RenderRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    module_path: str
    out_path: str
    frames: int = 4


class ReportRequest(BaseModel):
    out_dir: str


class Health(BaseModel):
    status: str
    version: str


class BackboneSummary(BaseModel):
    path: str
    weight_hash: str
    val_accuracy: float
    epochs: int
    loss_history: list[float]
    provenance: str


class TaskSummary(BaseModel):
    arch: str
    task: str
    task_config: dict
    seed: int
    lr: float
    steps: int
    horizon: int
    n_params: int
    auc: float
    final_val: Optional[float]
    best_val: Optional[float]
    mean_reward_last_1000: Optional[float]
    files: dict


class SuiteSummary(BaseModel):
    architectures: list[str]
    tasks: list[str]
    seeds: list[int]
    cells: list[dict]
    ta_n_auc: dict
    errors: int


class SwitchSummary(BaseModel):
    pairs: list[int]
    seeds: list[int]
    records: list[dict]
    errors: int


class RenderResult(BaseModel):
    path: str


class ReportResult(BaseModel):
    path: str
    markdown: str
