"""Model-file format and the bundled example models."""

from .loader import BUNDLED_DIR, MODEL_PATH_ENV, LoadedModel, ModelLoader

__all__ = ["BUNDLED_DIR", "MODEL_PATH_ENV", "LoadedModel", "ModelLoader"]
