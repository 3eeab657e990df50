"""Pairwise service preferences for an active user.

A preference value for services (i, j) is the signed degree to which i beats
j. It is explicit (confidence 1) when the active user observed both services,
implicit when inferred from neighbors who observed both (confidence is the
similarity-weighted mean of those neighbors' similarities), and unknown
(value 0, confidence 0) when nobody covers the pair. Weights are always
renormalized over the pair-specific neighbor subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .matrix import QoSMatrix
from .similarity import Neighborhood


class Provenance(Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    UNKNOWN = "unknown"


_PROV_CODES = {Provenance.UNKNOWN: 0, Provenance.IMPLICIT: 1, Provenance.EXPLICIT: 2}
_CODE_PROV = {code: prov for prov, code in _PROV_CODES.items()}


@dataclass(frozen=True)
class PreferenceValue:
    value: float
    confidence: float
    provenance: Provenance


@dataclass(frozen=True)
class PairNeighborhood:
    """Neighbors of the active user who observed both services of a pair."""

    pair: tuple[int, int]
    members: tuple[tuple[int, float], ...]


def pair_neighborhood(
    matrix: QoSMatrix, nbrs: Neighborhood, i: int, j: int
) -> PairNeighborhood:
    """Restrict a neighborhood to members observing both i and j."""
    mask = matrix.observed_mask
    members = tuple(
        (v, s) for v, s in nbrs.members if mask[v, i] and mask[v, j]
    )
    return PairNeighborhood(pair=(i, j), members=members)


def pair_weights(pair_nbrs: PairNeighborhood) -> list[tuple[int, float]]:
    """Similarity-proportional weights over the pair's members; sums to 1."""
    if not pair_nbrs.members:
        raise DomainError(f"empty pair neighborhood for {pair_nbrs.pair}")
    total = sum(s for _, s in pair_nbrs.members)
    return [(v, s / total) for v, s in pair_nbrs.members]


def pair_confidence(pair_nbrs: PairNeighborhood) -> float:
    """Weighted mean of member similarities: sum_v w_v * sim_v."""
    weights = pair_weights(pair_nbrs)
    sims = dict(pair_nbrs.members)
    return sum(w * sims[v] for v, w in weights)


def preference_value(
    matrix: QoSMatrix, u: int, nbrs: Neighborhood, i: int, j: int
) -> PreferenceValue:
    """Preference of service i over j for user u.

    Explicit when u observed both; otherwise inferred from the neighbors
    observing both, with weights renormalized over that subset; unknown when
    no neighbor covers the pair.
    """
    if i == j:
        raise DomainError("preference requires two distinct services")
    matrix._check_user(u)
    mask = matrix.observed_mask
    values = matrix.values
    if mask[u, i] and mask[u, j]:
        return PreferenceValue(
            value=float(values[u, i] - values[u, j]),
            confidence=1.0,
            provenance=Provenance.EXPLICIT,
        )
    pn = pair_neighborhood(matrix, nbrs, i, j)
    if not pn.members:
        return PreferenceValue(0.0, 0.0, Provenance.UNKNOWN)
    weights = pair_weights(pn)
    value = sum(w * (values[v, i] - values[v, j]) for v, w in weights)
    return PreferenceValue(
        value=float(value),
        confidence=pair_confidence(pn),
        provenance=Provenance.IMPLICIT,
    )


@dataclass(frozen=True)
class PreferenceTable:
    """All pairwise preferences of one active user over a candidate set.

    `values` is antisymmetric, `confidences` symmetric; diagonal entries are
    placeholders and never read.
    """

    active: int
    candidates: tuple[int, ...]
    values: np.ndarray
    confidences: np.ndarray
    provenance_codes: np.ndarray

    def __post_init__(self):
        for arr in (self.values, self.confidences, self.provenance_codes):
            arr.setflags(write=False)

    def index_of(self, service: int) -> int:
        try:
            return self.candidates.index(service)
        except ValueError:
            raise DomainError(f"service {service} not in candidate set") from None

    def value(self, i: int, j: int) -> PreferenceValue:
        if i == j:
            raise DomainError("preference requires two distinct services")
        a, b = self.index_of(i), self.index_of(j)
        return PreferenceValue(
            value=float(self.values[a, b]),
            confidence=float(self.confidences[a, b]),
            provenance=_CODE_PROV[int(self.provenance_codes[a, b])],
        )


def build_preference_table(
    matrix: QoSMatrix, u: int, nbrs: Neighborhood, candidates
) -> PreferenceTable:
    """Vectorized construction of the full pairwise table.

    Agrees with per-pair `preference_value` calls up to floating-point
    summation order.
    """
    matrix._check_user(u)
    cands = tuple(sorted(set(int(c) for c in candidates)))
    if not cands:
        raise DomainError("candidate set must be non-empty")
    cols = np.array(cands, dtype=int)
    mask = matrix.observed_mask[:, cols]
    vals = np.where(mask, matrix.values[:, cols], 0.0)

    ids = np.array(nbrs.user_ids(), dtype=int)
    sims = np.array(nbrs.similarities(), dtype=float)
    covered = mask[ids].astype(float) if ids.size else np.zeros((0, len(cands)))
    nvals = vals[ids] if ids.size else np.zeros((0, len(cands)))

    # For each pair (i, j): value = sum_v s_v (q_vi - q_vj) / sum_v s_v and
    # confidence = sum_v s_v^2 / sum_v s_v, restricted to neighbors covering
    # both services. All three reduce to (S x K) @ (K x S) products.
    weighted_cover = sims[:, None] * covered
    weighted_vals = sims[:, None] * nvals
    denom = weighted_cover.T @ covered
    cross = weighted_vals.T @ covered
    sq = (sims**2)[:, None] * covered
    conf_num = sq.T @ covered

    implicit = denom > 0
    values = np.divide(cross - cross.T, denom, out=np.zeros_like(denom), where=implicit)
    confidences = np.divide(conf_num, denom, out=np.zeros_like(denom), where=implicit)
    provenance = np.where(implicit, _PROV_CODES[Provenance.IMPLICIT], 0).astype(np.int8)

    own = matrix.observed_mask[u, cols]
    explicit = own[:, None] & own[None, :]
    own_vals = np.where(own, matrix.values[u, cols], 0.0)
    gaps = own_vals[:, None] - own_vals[None, :]
    values = np.where(explicit, gaps, values)
    confidences = np.where(explicit, 1.0, confidences)
    provenance = np.where(explicit, _PROV_CODES[Provenance.EXPLICIT], provenance).astype(np.int8)

    np.fill_diagonal(values, 0.0)
    np.fill_diagonal(confidences, 0.0)
    np.fill_diagonal(provenance, 0)
    return PreferenceTable(
        active=u,
        candidates=cands,
        values=values,
        confidences=confidences,
        provenance_codes=provenance,
    )


def preference_sum(
    table: PreferenceTable, i: int, remaining, weighted: bool = False
) -> float:
    """Sum of preferences of service i over the remaining candidates.

    With `weighted` on, each term is scaled by its confidence (the
    aggregation the confidence-weighted ranker maximizes). Unknown pairs
    contribute 0 either way.
    """
    remaining = sorted(set(int(s) for s in remaining))
    if i not in remaining:
        raise DomainError(f"service {i} not in remaining set")
    a = table.index_of(i)
    total = 0.0
    for j in remaining:
        if j == i:
            continue
        b = table.index_of(j)
        term = table.values[a, b]
        if weighted:
            term = table.confidences[a, b] * term
        total += term
    return float(total)
