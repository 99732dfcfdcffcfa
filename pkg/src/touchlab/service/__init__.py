from .app import app, apply_overrides, create_app

__all__ = ["app", "apply_overrides", "create_app"]
