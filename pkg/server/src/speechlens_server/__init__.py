"""Model server: expose a speech classifier over the probability wire protocol.

This package is the other side of the HTTP contract that the speechlens
RemoteOracle speaks. It owns checkpoint loading and label-space mapping
and nothing else: audio arrives as raw float32 samples at a declared
rate, is never resampled here, and leaves as per-head probability
distributions. The package deliberately does not import speechlens; the
protocol is the only coupling.
"""

from .app import InferenceBackend, create_app, serve
from .config import ConfigError, ServerConfig, load_config, split_composite_labels

__all__ = [
    "ConfigError",
    "ServerConfig",
    "load_config",
    "split_composite_labels",
    "InferenceBackend",
    "create_app",
    "serve",
]
