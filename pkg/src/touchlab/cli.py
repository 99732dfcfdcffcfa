"""Command line client for the experiment service.

Every subcommand posts to the HTTP service and prints the JSON response. By
default the service runs in process, so no server needs to be up; pass
--base-url to talk to a remote one started with `touchlab serve`.
"""

import json

import click
import httpx

from . import __version__


def read_config(path):
    if not path:
        return {}
    with open(path) as f:
        return json.load(f)


def make_client(base_url):
    if base_url:
        return httpx.Client(base_url=base_url, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def call(ctx, route, body):
    with make_client(ctx.obj["base_url"]) as client:
        response = client.post(route, json=body)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise click.ClickException(f"{route} failed ({response.status_code}): {detail}")
    payload = response.json()
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    return payload


@click.group()
@click.option("--base-url", default="", help="Remote service URL; empty runs in process.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, base_url):
    """Desk-scale continual learning experiments."""
    ctx.ensure_object(dict)
    ctx.obj["base_url"] = base_url


@main.command("pretrain-backbone")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Partial config JSON merged over the defaults.")
@click.option("--out-dir", default=None, help="Override the output directory.")
@click.pass_context
def pretrain_backbone_cmd(ctx, config_path, out_dir):
    """Pretrain and freeze the visual encoder."""
    call(ctx, "/backbone/pretrain", {"config": read_config(config_path), "out_dir": out_dir})


@main.command("run-task")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--out-dir", default=None)
@click.pass_context
def run_task_cmd(ctx, config_path, seed, out_dir):
    """Train one module on one task."""
    call(ctx, "/runs/task",
         {"config": read_config(config_path), "seed": seed, "out_dir": out_dir})


@main.command("run-suite")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Run only this seed.")
@click.option("--out-dir", default=None)
@click.pass_context
def run_suite_cmd(ctx, config_path, seed, out_dir):
    """Run the architecture x task x seed grid and score it."""
    call(ctx, "/runs/suite",
         {"config": read_config(config_path), "seed": seed, "out_dir": out_dir})


@main.command("run-switch")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Run only this seed.")
@click.option("--out-dir", default=None)
@click.option("--mode", type=click.Choice(["layer", "unit"]), default=None,
              help="Restrict voting to one mode.")
@click.option("--transforms/--no-transforms", "use_transforms", default=None,
              help="Toggle the targeted transform candidates.")
@click.pass_context
def run_switch_cmd(ctx, config_path, seed, out_dir, mode, use_transforms):
    """Run task-switch pairs with the voting controller plus scratch baselines."""
    call(ctx, "/runs/switch",
         {"config": read_config(config_path), "seed": seed, "out_dir": out_dir,
          "mode": mode, "use_transforms": use_transforms})


@main.command("render-maps")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--module", "module_path", type=click.Path(exists=True), required=True,
              help="Module checkpoint to render.")
@click.option("--out", "out_path", required=True, help="Output PNG path.")
@click.option("--frames", type=int, default=4, show_default=True)
@click.pass_context
def render_maps_cmd(ctx, config_path, module_path, out_path, frames):
    """Render dense predicted reward maps for the config's task."""
    call(ctx, "/render/maps",
         {"config": read_config(config_path), "module_path": module_path,
          "out_path": out_path, "frames": frames})


@main.command("report")
@click.option("--out-dir", required=True, help="Directory holding suite/switch outputs.")
@click.pass_context
def report_cmd(ctx, out_dir):
    """Aggregate run outputs into a markdown report."""
    call(ctx, "/report", {"out_dir": out_dir})


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
