"""HTTP scoring microservice: fact-checking confidence and 3-way NLI."""

__version__ = "0.1.0"

from .app import create_app
from .models import StubModel, load_backend, softmax_pair
from .template import INSTRUCTION_TEMPLATE, fill_instruction

__all__ = [
    "INSTRUCTION_TEMPLATE",
    "StubModel",
    "create_app",
    "fill_instruction",
    "load_backend",
    "softmax_pair",
    "__version__",
]
