from vae_conformal.config.loader import ConfigError, ConfigLoader, apply_overrides
from vae_conformal.config.schema import RunConfig

__all__ = ["ConfigError", "ConfigLoader", "RunConfig", "apply_overrides"]
