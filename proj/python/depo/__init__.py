"""Advantage shaping for group-relative policy optimization.

Thin wrapper over the compiled ``_core`` extension: rollout records in,
decoupled token-level advantages, difficulty-aware length rewards, and
sign-preserving advantage clipping out, plus a deterministic desk-scale
training simulator under ``depo.sim``.
"""

from ._core import *  # noqa: F401,F403
from ._core import sim  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
