"""Binary Merkle tree over 32-byte leaf digests.

Tree shape: adjacent nodes are paired, parent = sha256(left || right); an
odd node at any level is paired with a copy of itself (Bitcoin-style
duplication). The pairing round always runs at least once, so a single
leaf ``h`` yields root sha256(h || h), not ``h``. The empty tree commits
to sha256(b"").
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import hash_sha256

LEFT = "left"
RIGHT = "right"


class IndexOutOfRange(Exception):
    """Requested leaf index does not exist in the leaf list."""


@dataclass(frozen=True)
class MerkleProof:
    """Inclusion proof: sibling digests from leaf level up to the root.

    ``directions[i]`` is the side the sibling sits on when recombining at
    level ``i`` (RIGHT means parent = sha256(node || sibling)).
    """

    leaf_index: int
    siblings: tuple[bytes, ...]
    directions: tuple[str, ...]


def merkle_root(leaves: list[bytes]) -> bytes:
    """Root commitment over ``leaves`` in order; empty list -> sha256(b"")."""
    if not leaves:
        return hash_sha256(b"")
    level = list(leaves)
    while True:
        if len(level) % 2 == 1:
            level.append(level[-1])
        level = [hash_sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        if len(level) == 1:
            return level[0]


def merkle_prove(leaves: list[bytes], index: int) -> MerkleProof:
    """Build the inclusion proof for ``leaves[index]``."""
    if not leaves or not 0 <= index < len(leaves):
        raise IndexOutOfRange(f"leaf index {index} out of range for {len(leaves)} leaves")
    level = list(leaves)
    i = index
    siblings: list[bytes] = []
    directions: list[str] = []
    while True:
        if len(level) % 2 == 1:
            level.append(level[-1])
        sibling = i ^ 1
        siblings.append(level[sibling])
        directions.append(RIGHT if sibling > i else LEFT)
        level = [hash_sha256(level[j] + level[j + 1]) for j in range(0, len(level), 2)]
        i //= 2
        if len(level) == 1:
            return MerkleProof(index, tuple(siblings), tuple(directions))


def merkle_verify(leaf: bytes, proof: MerkleProof, root: bytes) -> bool:
    """True iff folding ``leaf`` through the proof reproduces ``root``."""
    if len(proof.siblings) != len(proof.directions):
        return False
    node = leaf
    for sibling, direction in zip(proof.siblings, proof.directions):
        if direction == RIGHT:
            node = hash_sha256(node + sibling)
        elif direction == LEFT:
            node = hash_sha256(sibling + node)
        else:
            return False
    return node == root
