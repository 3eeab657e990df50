"""Rank-correlation similarity between users and Top-K neighbor selection.

Similarity is the Kendall rank correlation over the services both users
observed: (concordant - discordant) / (N(N-1)/2), with ties counting toward
neither side while the denominator stays N(N-1)/2. Pairs sharing fewer than
two services are uninformative and score 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matrix import QoSMatrix


@dataclass(frozen=True)
class SimilarityRow:
    """Similarities of one active user to every other user."""

    active: int
    users: np.ndarray  # candidate user ids, ascending, active excluded
    sims: np.ndarray  # aligned with users


@dataclass(frozen=True)
class Neighborhood:
    """Top-K users with strictly positive similarity, best first."""

    active: int
    members: tuple[tuple[int, float], ...]

    def user_ids(self) -> list[int]:
        return [u for u, _ in self.members]

    def similarities(self) -> list[float]:
        return [s for _, s in self.members]

    def __len__(self) -> int:
        return len(self.members)


def krcc(matrix: QoSMatrix, u: int, v: int) -> float:
    """Rank correlation between users u and v over their common services.

    Reference pairwise implementation; `similarity_row` is the batched
    equivalent and must agree with it bit for bit.
    """
    if u == v:
        raise DomainError("self-similarity is handled by exclusion, not computed")
    matrix._check_user(u)
    matrix._check_user(v)
    mask = matrix.observed_mask
    common = np.flatnonzero(mask[u] & mask[v])
    n = common.size
    if n < 2:
        return 0.0
    values = matrix.values
    concordant = discordant = 0
    for a in range(n):
        for b in range(a + 1, n):
            du = values[u, common[a]] - values[u, common[b]]
            dv = values[v, common[a]] - values[v, common[b]]
            prod = du * dv
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


def similarity_row(matrix: QoSMatrix, u: int) -> SimilarityRow:
    """krcc(u, v) for every user v != u, vectorized over v."""
    matrix._check_user(u)
    others = np.array([v for v in range(matrix.num_users) if v != u], dtype=int)
    sign_u = _masked_pair_signs(matrix, np.array([u]))[0]
    sign_v = _masked_pair_signs(matrix, others)
    # sum of sign products counts each unordered pair twice
    cd = np.einsum("vij,ij->v", sign_v, sign_u) / 2.0
    common = matrix.observed_mask[others].astype(float) @ matrix.observed_mask[u].astype(float)
    pairs = common * (common - 1) / 2.0
    sims = np.divide(cd, pairs, out=np.zeros_like(cd), where=pairs > 0)
    return SimilarityRow(active=u, users=others, sims=sims)


def _masked_pair_signs(matrix: QoSMatrix, users: np.ndarray) -> np.ndarray:
    """(len(users), S, S) tensor of sign(q_i - q_j), zero wherever either
    service is unobserved by that user."""
    mask = matrix.observed_mask[users]
    vals = np.where(mask, matrix.values[users], 0.0)
    signs = np.sign(vals[:, :, None] - vals[:, None, :])
    both = mask[:, :, None] & mask[:, None, :]
    return signs * both


def select_neighbors(row: SimilarityRow, k: int) -> Neighborhood:
    """The at-most-k users with the largest strictly positive similarity,
    sorted descending; equal similarities break toward the smaller user id."""
    if k < 0:
        raise DomainError(f"neighborhood size must be >= 0, got {k}")
    order = np.lexsort((row.users, -row.sims))
    members = []
    for idx in order:
        if len(members) >= k:
            break
        sim = float(row.sims[idx])
        if sim <= 0.0:
            break  # sorted descending, nothing positive remains
        members.append((int(row.users[idx]), sim))
    return Neighborhood(active=row.active, members=tuple(members))
