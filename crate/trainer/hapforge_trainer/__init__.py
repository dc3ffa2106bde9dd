"""Training and export of the visual-to-haptic generators."""

from .archive import ArchiveError, ChecksumError, read_archive, write_archive
from .model import Discriminator, ExportError, UNet, unet_descriptor
from .train import Checkpoint, TrainConfig, TrainingError, train

__all__ = [
    "ArchiveError",
    "Checkpoint",
    "ChecksumError",
    "Discriminator",
    "ExportError",
    "TrainConfig",
    "TrainingError",
    "UNet",
    "read_archive",
    "train",
    "unet_descriptor",
    "write_archive",
]
