from __future__ import annotations

from pathlib import Path

import yaml
from pydantic import ValidationError

from vae_conformal.config.schema import RunConfig
from vae_conformal.errors import ConfigError


class ConfigLoader:
    """Reads one YAML run configuration and validates it into a RunConfig."""

    def __init__(self, path: Path) -> None:
        self.path = path

    def load(self) -> RunConfig:
        """An empty file gives the defaults; anything but a mapping is rejected."""
        if not self.path.is_file():
            raise ConfigError("Config file does not exist", path=self.path)
        try:
            raw = yaml.safe_load(self.path.read_text())
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML: {e}", path=self.path) from e
        if raw is None:
            return RunConfig()
        if not isinstance(raw, dict):
            raise ConfigError("Expected a YAML mapping at top level", path=self.path)
        try:
            return RunConfig.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Validation error: {e}", path=self.path) from e


def apply_overrides(
    config: RunConfig,
    seed: int | None = None,
    output_dir: Path | None = None,
) -> RunConfig:
    """Command-line flags win over file values."""
    update: dict[str, object] = {}
    if seed is not None:
        update["seed"] = seed
    if output_dir is not None:
        update["output_dir"] = output_dir
    return config.model_copy(update=update) if update else config
