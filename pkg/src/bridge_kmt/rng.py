"""Counter-based random streams for reproducible tree sampling.

splitmix64 is used as a keyed bijection: every (seed, sample, tree node) gets
its own stream whose draws depend only on those labels, never on scheduling.
The compiled kernel reimplements `stream_u01` verbatim on uint64, so draws are
bit-identical across backends; keep the two in sync when touching constants.
"""
from __future__ import annotations

MASK = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
NODE_SALT = 0xC2B2AE3D27D4EB4F


def mix64(x: int) -> int:
    """Stafford mix13 finalizer, a bijection on 64-bit words."""
    x &= MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK
    x ^= x >> 31
    return x


def sample_seed(seed: int, idx: int) -> int:
    """Root state for one sample of a batch; distinct for every idx."""
    return mix64((seed + idx * GAMMA) & MASK)


def node_seed(samp_seed: int, node_id: int) -> int:
    """Stream state for one tree node (root = 1, children 2i and 2i+1)."""
    return mix64((samp_seed ^ ((node_id * NODE_SALT) & MASK)) & MASK)


def u64_at(state: int, j: int) -> int:
    """j-th raw output of the splitmix64 stream starting at `state`."""
    return mix64((state + (j + 1) * GAMMA) & MASK)


def u01_at(state: int, j: int) -> float:
    """j-th uniform of the stream, strictly inside (0, 1)."""
    return ((u64_at(state, j) >> 11) + 0.5) * 1.1102230246251565e-16  # 2^-53


class Stream:
    """Sequential view of one node's stream; tracks how many draws were taken."""

    __slots__ = ("state", "count")

    def __init__(self, state: int):
        self.state = state
        self.count = 0

    def next_u01(self) -> float:
        u = u01_at(self.state, self.count)
        self.count += 1
        return u
