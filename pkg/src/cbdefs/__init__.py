"""Island-model binary differential evolution, plain and chaotic, for wrapper
feature subset selection with an embedded logistic-regression/AUC evaluator.
"""
from .backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
