"""Python bindings for the fradrc fractional-order ADRC toolkit."""

from ._fradrc import *  # noqa: F401,F403
from ._fradrc import __doc__  # noqa: F401

__version__ = "0.1.0"
