"""Learned abundance super-resolver companion to the hsisr pipeline.

Trains a mixed 3-D/2-D convolutional network on the synthetic dead-leaves
pair corpus and super-resolves low-resolution abundance tensors. All
exchange with the pipeline happens through float32 NPY tensor files and the
corpus manifest; neither package imports the other.
"""

from .config import TrainConfig
from .data import CropSampler, PairCorpus, load_corpus
from .exceptions import NumericalError, TrainerError, ValidationError
from .infer import infer, super_resolve
from .io import probe_shape, read_tensor, write_tensor
from .model import MixedConvSR
from .train import load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
