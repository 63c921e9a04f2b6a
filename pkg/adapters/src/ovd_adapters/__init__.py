"""Adapters exposing open-vocabulary detectors behind the engine's interfaces.

Each adapter process serves one model over the JSON wire protocol
(``/v1/detect``, ``/v1/health``, ``/v1/model``) or writes prediction-cache
files in batch mode. Real detectors load their frameworks lazily; a
deterministic fixture model keeps everything testable offline.
"""

from .batch import batch_predict
from .config import SUPPORTED_MODELS, AdapterConfig
from .models import DetectorModel, FixtureModel, build_model
from .server import create_app, serve, validate_detections

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "SUPPORTED_MODELS",
    "DetectorModel",
    "FixtureModel",
    "build_model",
    "create_app",
    "serve",
    "validate_detections",
    "batch_predict",
]
