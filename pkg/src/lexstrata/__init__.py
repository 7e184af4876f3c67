"""lexstrata: self-supervised layered vocabulary learning from character streams."""

from .config import Config
from .network import ConceptNetwork
from .learner import Trainer

__all__ = ["Config", "ConceptNetwork", "Trainer"]
__version__ = "0.1.0"
