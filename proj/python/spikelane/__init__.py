"""Compact spiking network for lane-change intention prediction."""

from ._spikelane import *  # noqa: F401,F403
from ._spikelane import __doc__  # noqa: F401
