"""Context collection and evaluation pipeline for fill-in-the-middle code completion."""

from ctxcollect._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
