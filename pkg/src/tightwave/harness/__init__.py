"""Configuration, dispatch and artifact persistence."""
from .artifact import RunArtifact, write_artifact
from .config import RunConfig, apply_overrides, load_config, parse_config
from .run import run

__all__ = ["RunArtifact", "RunConfig", "apply_overrides", "load_config", "parse_config", "run",
           "write_artifact"]
