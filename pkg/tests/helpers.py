"""Small builders shared across the test suite."""

from __future__ import annotations

import numpy as np

from taxoforge import EdgeScoreMatrix, Taxonomy, TermSet


def make_matrix(
    terms: tuple[str, ...],
    scores: dict[tuple[str, str], float],
    *,
    tree_id: str = "m",
    default: float = 0.0,
) -> EdgeScoreMatrix:
    """Build a score matrix from a sparse {(parent, child): score} map."""
    n = len(terms)
    arr = np.full((n, n), default, dtype=np.float64)
    index = {t: i for i, t in enumerate(terms)}
    for (p, c), s in scores.items():
        arr[index[p], index[c]] = s
    return EdgeScoreMatrix(tree_id, terms, arr)


def make_tree(
    terms: tuple[str, ...],
    edges: set[tuple[str, str]],
    *,
    tree_id: str = "t",
) -> Taxonomy:
    """Build a taxonomy from named (parent, child) edges."""
    index = {t: i for i, t in enumerate(terms)}
    parents = [-1] * len(terms)
    children = set()
    for p, c in edges:
        parents[index[c]] = index[p]
        children.add(index[c])
    root = next(i for i in range(len(terms)) if i not in children)
    return Taxonomy(TermSet(tree_id, terms), root, tuple(parents))


def random_matrix(rng: np.random.Generator, n: int, *, integer: bool = False) -> EdgeScoreMatrix:
    """A random n-by-n score matrix; integer scores force frequent ties."""
    if integer:
        arr = rng.integers(0, 3, size=(n, n)).astype(np.float64)
    else:
        arr = rng.uniform(0.0, 1.0, size=(n, n))
    terms = tuple(f"t{i}" for i in range(n))
    return EdgeScoreMatrix("rand", terms, arr)
