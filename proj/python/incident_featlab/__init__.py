"""Python bindings for the featlab incident-detection pipeline."""

from ._featlab import *  # noqa: F401,F403
from ._featlab import __doc__  # noqa: F401

__version__ = "0.3.0"
