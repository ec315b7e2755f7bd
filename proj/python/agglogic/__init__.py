"""Averaging logic on featured graphs."""

from ._agglogic import *  # noqa: F401,F403
from ._agglogic import __version__  # noqa: F401
