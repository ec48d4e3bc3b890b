"""Frozen seed derivation for experiment cells.

Child seeds are SplitMix64 mixes of (master_seed, dim, index); each method
then mixes in its own tag, so no two methods share a stream.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

METHOD_TAGS = {
    'rejection': 0x52454A,
    'gessner': 0x474553,
    'semianalytic': 0x53454D,
}


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state x"""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(master_seed: int, dim: int, index: int) -> int:
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ dim)
    return splitmix64(h ^ index)


def method_seed(child: int, method: str) -> int:
    return splitmix64(child ^ METHOD_TAGS[method])
