"""Dataset adapter exposing on-the-fly video-to-voxel conversion to dataloaders."""

from .dataset import Dataset, open_dataset

__version__ = "0.1.0"

__all__ = ["Dataset", "open_dataset"]
