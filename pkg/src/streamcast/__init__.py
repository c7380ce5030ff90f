"""Encoder/decoder LSTM streamflow forecasting with event-based evaluation."""

__version__ = "0.1.0"

from .data import BasinRecord, FeatureStandardizer, filter_gauges, load_basin, load_basins, write_basin  # noqa: E402
from .model import EncoderDecoderForecaster, ModelConfig  # noqa: E402

__all__ = [
    "BasinRecord",
    "EncoderDecoderForecaster",
    "FeatureStandardizer",
    "ModelConfig",
    "__version__",
    "filter_gauges",
    "load_basin",
    "load_basins",
    "write_basin",
]
