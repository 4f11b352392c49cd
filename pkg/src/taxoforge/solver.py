"""Maximum spanning arborescence decoding over edge score matrices.

The solver is the greedy-then-contract algorithm: pick the best incoming
edge for every non-root node, and while that graph contains a cycle,
contract the cycle into a supernode with adjusted entering scores and
recurse. Scores are summed, so matrices holding log-odds yield the
maximum product-of-odds tree.

``brute_force_arborescence`` is an independent oracle that enumerates all
parent assignments; it exists so the solver can be checked against it and
must stay a separate code path.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .types import ABSENT, AncestorSet, EdgeScoreMatrix, Taxonomy, ValidationError

BRUTE_FORCE_MAX_NODES = 8


@dataclass(frozen=True)
class GivenRoot:
    """Decode with a fixed root node index."""

    root: int


@dataclass(frozen=True)
class BestRoot:
    """Decode once per candidate root and keep the highest-scoring tree.

    Ties keep the smallest root index.
    """


@dataclass(frozen=True)
class VirtualRoot:
    """Attach a phantom root offering every node the same prior score.

    The phantom is dropped from the result. If it ends up with several
    children, strict mode raises; otherwise the child with the best
    phantom-edge score (first wins) becomes the root and adopts the rest.
    """

    prior: float
    strict: bool = False


RootPolicy = GivenRoot | BestRoot | VirtualRoot


def _best_incoming(scores: np.ndarray, root: int) -> np.ndarray:
    """Greedy parent per non-root node; ties keep the smallest parent index."""
    n = scores.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        if j != root:
            parent[j] = int(np.argmax(scores[:, j]))
    return parent


def _find_cycle(parent: np.ndarray, root: int) -> list[int] | None:
    """Return one cycle in the greedy parent graph, or None."""
    n = len(parent)
    color = [0] * n  # 0 unvisited, 1 on current path, 2 finished
    color[root] = 2
    for start in range(n):
        if color[start]:
            continue
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = int(parent[v])
        if color[v] == 1:
            return path[path.index(v):]
        for u in path:
            color[u] = 2
    return None


def _solve(scores: np.ndarray, root: int) -> np.ndarray:
    """Parent vector of the maximum arborescence rooted at ``root``."""
    parent = _best_incoming(scores, root)
    cycle = _find_cycle(parent, root)
    if cycle is None:
        return parent

    n = scores.shape[0]
    in_cycle = np.zeros(n, dtype=bool)
    in_cycle[cycle] = True
    outside = [v for v in range(n) if not in_cycle[v]]
    new_index = {v: i for i, v in enumerate(outside)}
    super_node = len(outside)
    cycle_sorted = sorted(cycle)
    # Score of the cycle edge that entering at node j would displace.
    displaced = {j: scores[parent[j], j] for j in cycle}

    contracted = np.full((super_node + 1, super_node + 1), ABSENT)
    enter_at: dict[int, int] = {}  # outside node (new index) -> cycle node it enters at
    leave_from: dict[int, int] = {}  # outside node (new index) -> cycle node feeding it
    for a, va in enumerate(outside):
        for b, vb in enumerate(outside):
            if a != b:
                contracted[a, b] = scores[va, vb]
        best_in, best_in_j = ABSENT, -1
        best_out, best_out_i = ABSENT, -1
        for j in cycle_sorted:
            adjusted = scores[va, j] - displaced[j]
            if adjusted > best_in:
                best_in, best_in_j = adjusted, j
            if scores[j, va] > best_out:
                best_out, best_out_i = scores[j, va], j
        contracted[a, super_node] = best_in
        enter_at[a] = best_in_j
        contracted[super_node, a] = best_out
        leave_from[a] = best_out_i

    sub_parent = _solve(contracted, new_index[root])

    # Expand: outside nodes take their sub-solution parent (resolving the
    # supernode to a concrete cycle node), cycle nodes keep their greedy
    # parent except where the chosen entering edge breaks the cycle.
    result = parent.copy()
    result[root] = -1
    for a, va in enumerate(outside):
        if va == root:
            continue
        p = int(sub_parent[a])
        result[va] = leave_from[a] if p == super_node else outside[p]
    entry_parent = int(sub_parent[super_node])
    result[enter_at[entry_parent]] = outside[entry_parent]
    return result


def chu_liu_edmonds(matrix: EdgeScoreMatrix, root: int) -> Taxonomy:
    """Maximum spanning arborescence of ``matrix`` rooted at ``root``."""
    if not 0 <= root < matrix.n:
        raise ValidationError("root out of range", f"{matrix.tree_id}: {root}")
    parents = _solve(matrix.scores, root)
    return Taxonomy(matrix.term_set(), root, tuple(int(p) for p in parents))


def total_score(tree: Taxonomy, matrix: EdgeScoreMatrix) -> float:
    """Sum of edge scores of ``tree``, accumulated in child-index order."""
    if tree.term_set.terms != matrix.term_order:
        raise ValidationError(
            "term mismatch", f"{tree.id}: tree terms differ from matrix {matrix.tree_id}"
        )
    total = 0.0
    for j in range(tree.n):
        p = tree.parents[j]
        if p != -1:
            total += float(matrix.scores[p, j])
    return total


@lru_cache(maxsize=32)
def _enumerate_assignments(n: int, root: int) -> tuple[np.ndarray, np.ndarray]:
    """All parent assignments for ``n`` nodes plus their validity mask.

    Validity depends only on the shape of the assignment, not on scores,
    so the (assignments, valid) pair is cached per (n, root).
    """
    choices = [[root] if j == root else [i for i in range(n) if i != j] for j in range(n)]
    assignments = np.array(list(itertools.product(*choices)), dtype=np.int64)

    # A parent assignment is an arborescence iff every chain reaches the
    # root; pointer doubling resolves all chains in log2(n) rounds.
    reach = assignments.copy()
    hops = 1
    while hops < n:
        reach = np.take_along_axis(reach, reach, axis=1)
        hops *= 2
    valid = np.all(reach == root, axis=1)
    assignments.setflags(write=False)
    valid.setflags(write=False)
    return assignments, valid


def brute_force_arborescence(matrix: EdgeScoreMatrix, root: int) -> Taxonomy:
    """Exhaustive maximum arborescence; oracle counterpart of the solver.

    Enumerates every parent assignment, keeps the valid ones, and returns
    the maximizer with the lexicographically smallest parent vector.
    Guarded to small problems because the search space is (n-1)^(n-1).
    """
    n = matrix.n
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValidationError(
            "enumeration guard", f"{matrix.tree_id}: n={n} exceeds {BRUTE_FORCE_MAX_NODES}"
        )
    if not 0 <= root < n:
        raise ValidationError("root out of range", f"{matrix.tree_id}: {root}")
    if n == 1:
        return Taxonomy(matrix.term_set(), 0, (-1,))

    assignments, valid = _enumerate_assignments(n, root)

    # Accumulate per-child scores in ascending child order, matching the
    # exact float addition sequence of total_score.
    totals = np.zeros(len(assignments), dtype=np.float64)
    for j in range(n):
        if j != root:
            totals = totals + matrix.scores[assignments[:, j], j]
    totals = np.where(valid, totals, ABSENT)

    best = int(np.argmax(totals))
    parents = assignments[best].tolist()
    parents[root] = -1
    return Taxonomy(matrix.term_set(), root, tuple(parents))


def induce(matrix: EdgeScoreMatrix, policy: RootPolicy) -> Taxonomy:
    """Decode a taxonomy from a score matrix under a root policy."""
    n = matrix.n
    if isinstance(policy, GivenRoot):
        return chu_liu_edmonds(matrix, policy.root)

    if isinstance(policy, BestRoot):
        best_tree, best_total = None, ABSENT
        for r in range(n):
            tree = chu_liu_edmonds(matrix, r)
            tot = total_score(tree, matrix)
            if best_tree is None or tot > best_total:
                best_tree, best_total = tree, tot
        return best_tree

    if isinstance(policy, VirtualRoot):
        if not np.isfinite(policy.prior):
            raise ValidationError("non-finite score", "virtual root prior")
        augmented = np.full((n + 1, n + 1), ABSENT)
        augmented[:n, :n] = matrix.scores
        augmented[n, :n] = policy.prior
        parents = _solve(augmented, n)
        phantom_children = [j for j in range(n) if parents[j] == n]
        if len(phantom_children) > 1 and policy.strict:
            raise ValidationError(
                "multiple virtual-root children",
                f"{matrix.tree_id}: {len(phantom_children)} candidates",
            )
        # All phantom edges share the prior score, so first wins.
        winner = phantom_children[0]
        final = list(parents[:n])
        final[winner] = -1
        for j in phantom_children[1:]:
            final[j] = winner
        return Taxonomy(matrix.term_set(), winner, tuple(int(p) for p in final))

    raise ValidationError("unknown root policy", repr(policy))


def ancestor_pairs(tree: Taxonomy) -> AncestorSet:
    """Transitive closure of ``tree`` as (ancestor term, descendant term) pairs."""
    terms = tree.term_set.terms
    pairs = set()
    for j in range(tree.n):
        v = tree.parents[j]
        while v != -1:
            pairs.add((terms[v], terms[j]))
            v = tree.parents[v]
    return AncestorSet(frozenset(pairs))
