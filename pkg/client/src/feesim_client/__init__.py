"""Gym-style client for the feesim environment wire protocol."""

from .client import (
    ClientError,
    ConnectionLost,
    DimensionError,
    ProtocolError,
    RemoteEnv,
)
from .envcheck import check_env
from .spaces import Box

__version__ = "0.1.0"
