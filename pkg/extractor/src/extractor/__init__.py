from .extract import ExtractionSpec, extract
from .format import write_tensor
from .report import verify_against_reference
from .taps import ARCHITECTURES, get_architecture

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "ExtractionSpec",
    "extract",
    "get_architecture",
    "verify_against_reference",
    "write_tensor",
]
