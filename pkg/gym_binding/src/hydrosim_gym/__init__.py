"""Gym-style client environments for the hydrosim session protocol."""

__version__ = "0.1.0"

from .client import ProtocolClient, ProtocolError  # noqa: F401
from .env import EnvSpec, EpisodeTerminatedError, PipeFollowEnv  # noqa: F401

ENV_ID = "HydroSimPipe-v0"

_REGISTRY = {ENV_ID: PipeFollowEnv}


def make(env_id: str = ENV_ID, **kwargs) -> PipeFollowEnv:
    """Instantiate a registered environment by id."""
    if env_id not in _REGISTRY:
        raise KeyError(f"unknown environment id {env_id!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[env_id](**kwargs)


def _register_with_gymnasium():
    try:
        from gymnasium.envs.registration import register
    except ImportError:
        return
    try:
        register(id=ENV_ID, entry_point="hydrosim_gym.env:PipeFollowEnv")
    except Exception:  # already registered on re-import
        pass


_register_with_gymnasium()
