"""Python bindings for the drcf collaborative-filtering library."""

from ._drcf import *  # noqa: F401,F403
from ._drcf import __doc__  # noqa: F401
