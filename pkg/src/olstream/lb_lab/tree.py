"""Lower-bound tree over the time axis and the convolution lower-bound formula."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..modring import bit_width, is_prime
from .toeplitz import build_toeplitz, recovery_number


@dataclass(frozen=True)
class TreeNode:
    """Internal node whose left subtree spans [t0, t1] and right subtree [t1+1, t2]."""

    level: int  # 1 for parents of leaves
    index: int
    t0: int
    t1: int
    t2: int

    @property
    def L(self) -> int:
        """Leaves in each child subtree."""
        return self.t1 - self.t0 + 1

    @property
    def leaves(self) -> int:
        return self.t2 - self.t0 + 1


@dataclass(frozen=True)
class LowerBoundTree:
    n: int
    nodes: tuple[TreeNode, ...]

    @property
    def depth(self) -> int:
        return self.n.bit_length() - 1

    @property
    def leaf_sum(self) -> int:
        """Sum over internal nodes of the leaves below the node (n log2 n)."""
        return sum(v.leaves for v in self.nodes)

    @property
    def child_leaf_sum(self) -> int:
        """Sum over internal nodes of L(v), the leaves of one child subtree."""
        return sum(v.L for v in self.nodes)

    def node(self, level: int, index: int) -> TreeNode:
        if not 1 <= level <= self.depth or not 0 <= index < self.n >> level:
            raise IndexError(f"no node at level {level}, index {index}")
        return self.nodes[self._offset(level) + index]

    def _offset(self, level: int) -> int:
        # Levels are stored bottom-up; level k holds n >> k nodes.
        return sum(self.n >> k for k in range(1, level))

    def level_nodes(self, level: int) -> tuple[TreeNode, ...]:
        off = self._offset(level)
        return self.nodes[off : off + (self.n >> level)]

    def lca(self, tw: int, tr: int) -> TreeNode:
        """Lowest common ancestor of leaves tw < tr."""
        if not 0 <= tw < tr < self.n:
            raise ValueError(f"need 0 <= tw < tr < {self.n}")
        level = (tw ^ tr).bit_length()
        return self.node(level, tr >> level)


def build_tree(n: int) -> LowerBoundTree:
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    nodes = []
    level, span = 1, 2
    while span <= n:
        half = span // 2
        for index in range(n // span):
            t0 = index * span
            nodes.append(TreeNode(level, index, t0, t0 + half - 1, t0 + span - 1))
        level += 1
        span *= 2
    return LowerBoundTree(n, tuple(nodes))


@dataclass(frozen=True)
class LowerBoundTerms:
    n: int
    q: int
    w: int
    delta: int
    recovery: dict[int, int]  # L -> R_{V,L}
    node_counts: dict[int, int]  # L -> number of nodes with that L

    @property
    def recovery_sum(self) -> int:
        return sum(self.recovery[L] * self.node_counts[L] for L in self.recovery)

    @property
    def value(self) -> Fraction:
        return Fraction(self.delta, 2 * self.w) * self.recovery_sum - Fraction(self.n - 1, 2)


def lower_bound_terms(n: int, q: int, w: int, v) -> LowerBoundTerms:
    """Per-level recovery numbers entering the bound (δ/2w) Σ_v R_{V,L(v)} - (n-1)/2."""
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    if not is_prime(q):
        raise ValueError(f"q must be prime, got {q}")
    if w < 1:
        raise ValueError("w must be positive")
    if len(v) != n:
        raise ValueError(f"V must have length n={n}, got {len(v)}")
    vals = [int(x) % q for x in v]
    recovery, counts = {}, {}
    L = 1
    while 2 * L <= n:
        recovery[L] = recovery_number(build_toeplitz(vals, L, q))
        counts[L] = n // (2 * L)
        L *= 2
    return LowerBoundTerms(n, q, w, bit_width(q), recovery, counts)


def lower_bound_value(n: int, q: int, w: int, v) -> Fraction:
    """Expected-probe lower bound for online convolution with fixed vector V."""
    return lower_bound_terms(n, q, w, v).value
