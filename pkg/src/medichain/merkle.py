"""Binary Merkle tree over transaction ids.

Conventions: the root of an empty list is the all-zero hash, a single leaf
is its own root, and odd-length levels duplicate their last node (the
Bitcoin rule).
"""

from __future__ import annotations

from .hashing import ZERO_HASH, check_hash32, sha256


def merkle_root(leaves: list[bytes]) -> bytes:
    """Fold a list of 32-byte leaf hashes into the tree root."""
    if not leaves:
        return ZERO_HASH
    level = [check_hash32(leaf, "merkle leaf") for leaf in leaves]
    while len(level) > 1:
        if len(level) % 2 == 1:
            level.append(level[-1])
        level = [sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]
