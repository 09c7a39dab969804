"""VAE Conformal: adversarial-example detection for a regression perception component."""

__version__ = "0.1.0"
