"""Node hardware tiers and their reward multipliers.

The multiplier table is the single place reward scaling is defined;
scenario configs may override it but every component reads this table
through the ledger/settlement path. Multipliers are exact rationals so
settlement arithmetic stays exact.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction


class NodeTier(Enum):
    CLAUDE_SESSION = "claude_session"  # orchestration + training + storage
    GPU_COMPUTE = "gpu_compute"        # GPU training + inference + storage
    STORAGE_NODE = "storage_node"      # SSD storage only
    CPU_ONLY = "cpu_only"              # CPU inference + storage
    MOBILE_LIGHT = "mobile_light"      # relay-assisted inference, no storage


DEFAULT_TIER_MULTIPLIERS: dict[NodeTier, Fraction] = {
    NodeTier.CLAUDE_SESSION: Fraction(3),
    NodeTier.GPU_COMPUTE: Fraction(1),
    NodeTier.STORAGE_NODE: Fraction(3, 10),
    NodeTier.CPU_ONLY: Fraction(3, 10),
    NodeTier.MOBILE_LIGHT: Fraction(1, 10),
}

# Tiers that may hold shards; mobile_light is inference-only.
STORAGE_ELIGIBLE_TIERS = frozenset(
    {NodeTier.CLAUDE_SESSION, NodeTier.GPU_COMPUTE, NodeTier.STORAGE_NODE, NodeTier.CPU_ONLY}
)


def as_fraction(value) -> Fraction:
    """Exact rational from int/str/Fraction; floats go through str() so a
    config value like 0.3 means 3/10, not its binary approximation."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)
