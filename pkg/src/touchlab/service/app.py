"""HTTP facade over the experiment harness.

Every endpoint is synchronous: the response returns once the run's files are
on disk, so a client that got a 200 can immediately read the outputs. Bad
configs and inputs map to 400, training/checkpoint failures to 500.
"""

import copy

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigurationError, InputError
from ..harness import (
    pretrain_backbone,
    render_maps,
    run_suite,
    run_switch,
    run_task,
    write_report,
)
from . import models


def apply_overrides(config, seed=None, out_dir=None, mode=None, use_transforms=None):
    """Fold the flag-style overrides into a partial config dict."""
    cfg = copy.deepcopy(config)
    if seed is not None:
        cfg["seed"] = seed
        cfg["seeds"] = [seed]
    if out_dir is not None:
        cfg["out_dir"] = out_dir
    if mode is not None:
        cfg.setdefault("voting", {})["mode"] = mode
        cfg.setdefault("switch", {})["modes"] = [mode]
    if use_transforms is not None:
        cfg.setdefault("voting", {})["use_transforms"] = use_transforms
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(title="touchlab", version=__version__)

    @app.exception_handler(ConfigurationError)
    @app.exception_handler(InputError)
    def bad_request(request: Request, exc: Exception):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(RuntimeError)
    def failed_run(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health", response_model=models.Health)
    def health():
        return models.Health(status="ok", version=__version__)

    @app.post("/backbone/pretrain", response_model=models.BackboneSummary)
    def backbone(req: models.PretrainRequest):
        cfg = apply_overrides(req.config, out_dir=req.out_dir)
        return pretrain_backbone(cfg)

    @app.post("/runs/task", response_model=models.TaskSummary)
    def task_run(req: models.TaskRunRequest):
        cfg = apply_overrides(req.config, seed=req.seed, out_dir=req.out_dir)
        return run_task(cfg)

    @app.post("/runs/suite", response_model=models.SuiteSummary)
    def suite_run(req: models.SuiteRunRequest):
        cfg = apply_overrides(req.config, seed=req.seed, out_dir=req.out_dir)
        return run_suite(cfg)

    @app.post("/runs/switch", response_model=models.SwitchSummary)
    def switch_run(req: models.SwitchRunRequest):
        cfg = apply_overrides(req.config, seed=req.seed, out_dir=req.out_dir,
                              mode=req.mode, use_transforms=req.use_transforms)
        return run_switch(cfg)

    @app.post("/render/maps", response_model=models.RenderResult)
    def render(req: models.RenderRequest):
        path = render_maps(req.config, req.module_path, req.out_path, n_frames=req.frames)
        return models.RenderResult(path=path)

    @app.post("/report", response_model=models.ReportResult)
    def report(req: models.ReportRequest):
        path = write_report(req.out_dir)
        with open(path) as f:
            return models.ReportResult(path=path, markdown=f.read())

    return app


app = create_app()
