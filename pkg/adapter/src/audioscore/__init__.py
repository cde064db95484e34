"""Reference prediction server for external audio classifiers.

Exposes a small stdio server so any host speaking the line-delimited
JSON protocol can obtain class probabilities for raw audio without
linking this package's model code.
"""

from audioscore.server import (
    AdapterConfig,
    BandEnergyModel,
    ConfigError,
    StubModel,
    band_energy_fractions,
    build_model,
    serve,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "BandEnergyModel",
    "ConfigError",
    "StubModel",
    "band_energy_fractions",
    "build_model",
    "serve",
]
