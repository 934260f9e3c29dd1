"""Compressing the augmentation search space into distance bands.

Scoring every (transform, magnitude) tuple independently makes the
search space explode; tuples that move the data distribution by about
the same amount are interchangeable for search purposes. Each tuple is
scored by the Frechet distance between the embedded original dataset and
the embedded transformed dataset, and tuples are then banded into
equal-frequency quantile groups of that distance. Downstream search can
pick one representative per group instead of sweeping every tuple.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .augment import RandomProjectionEmbedder, TransformTuple, apply_transform
from .exceptions import ConfigError, ShapeError
from .frechet import fit_gaussian_summary, frechet_distance
from .validation import as_vector, check_finite


@dataclass(frozen=True)
class TransformGroup:
    """One distance band. members are indices into the scored tuple
    list, in catalog order."""

    group_id: int
    band: tuple[float, float]
    members: tuple[int, ...]


@dataclass(frozen=True)
class GroupingResult:
    groups: tuple[TransformGroup, ...]
    requested_groups: int
    fewer_than_requested: bool

    def member_count(self) -> int:
        return sum(len(g.members) for g in self.groups)


def default_tuple_grid(
    transforms: Sequence[str] | None = None,
    magnitudes: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> tuple[TransformTuple, ...]:
    """Cross every transform with every magnitude, in catalog order."""
    from .augment import TRANSFORM_CATALOG

    names = tuple(transforms) if transforms is not None else TRANSFORM_CATALOG
    if not names:
        raise ConfigError("need at least one transform")
    if not magnitudes:
        raise ConfigError("need at least one magnitude")
    return tuple(
        TransformTuple(transform=t, magnitude=float(m))
        for t in names
        for m in magnitudes
    )


def tuple_distances(
    images,
    tuples: Sequence[TransformTuple],
    embedder: RandomProjectionEmbedder,
    seed: int = 0,
) -> np.ndarray:
    """Frechet distance from the untouched dataset to each transformed
    copy, in tuple order.

    The noise draw for gaussian_noise tuples is keyed on (seed, tuple
    index), so reordering or subsetting other tuples never changes a
    tuple's distance.
    """
    if not tuples:
        raise ConfigError("need at least one tuple to score")
    reference = fit_gaussian_summary(embedder.embed(images))
    distances = np.empty(len(tuples))
    for i, tup in enumerate(tuples):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, i])))
        transformed = apply_transform(tup, images, rng=rng)
        summary = fit_gaussian_summary(embedder.embed(transformed))
        distances[i] = frechet_distance(reference, summary)
    return distances


def group_tuples(
    tuples: Sequence[TransformTuple],
    distances,
    num_groups: int,
) -> GroupingResult:
    """Band tuples into equal-frequency quantile groups of distance.

    Every tuple lands in exactly one group; bands are disjoint and cover
    the observed distance range. Ties share a band, so fewer groups than
    requested come back when the distances do not support the requested
    resolution; the result flags that case instead of inventing splits.
    """
    dist = as_vector(distances, "distances")
    check_finite(dist, "distances")
    if len(tuples) != dist.shape[0]:
        raise ShapeError(
            f"got {len(tuples)} tuples but {dist.shape[0]} distances"
        )
    if dist.size == 0:
        raise ConfigError("need at least one tuple to group")
    if num_groups < 1:
        raise ConfigError(f"num_groups must be at least 1, got {num_groups}")
    if float(dist.min()) < 0.0:
        raise ShapeError(f"distances must be nonnegative, got {float(dist.min()):g}")

    unique = np.unique(dist)
    effective = min(num_groups, unique.shape[0])
    edges = np.quantile(dist, np.linspace(0.0, 1.0, effective + 1))
    edges = np.unique(edges)
    inner = edges[1:-1]

    # right-open bands except the last, so every value maps to one band
    assignment = np.searchsorted(inner, dist, side="right")
    n_bands = edges.shape[0] - 1 if edges.shape[0] > 1 else 1

    members_by_band: list[list[int]] = [[] for _ in range(n_bands)]
    for idx, band in enumerate(assignment):
        members_by_band[min(int(band), n_bands - 1)].append(idx)

    groups = []
    next_id = 0
    for band_idx, members in enumerate(members_by_band):
        if not members:
            continue
        if edges.shape[0] > 1:
            lo, hi = float(edges[band_idx]), float(edges[band_idx + 1])
        else:
            lo = hi = float(edges[0])
        groups.append(
            TransformGroup(group_id=next_id, band=(lo, hi), members=tuple(members))
        )
        next_id += 1

    result = GroupingResult(
        groups=tuple(groups),
        requested_groups=num_groups,
        fewer_than_requested=len(groups) < num_groups,
    )
    if result.member_count() != dist.shape[0]:
        raise AssertionError("grouping lost or duplicated tuples")
    return result


def grouping_report(
    tuples: Sequence[TransformTuple],
    distances,
    result: GroupingResult,
) -> dict:
    """JSON-ready description of the compressed search space.

    Group members are indices into the top-level tuples list. Each group
    also names a representative: its member of median distance, the
    natural single tuple to carry forward into a policy search.
    """
    dist = as_vector(distances, "distances")
    groups = []
    for g in result.groups:
        member_d = dist[list(g.members)]
        rep = g.members[int(np.argsort(member_d, kind="stable")[len(g.members) // 2])]
        groups.append(
            {
                "id": g.group_id,
                "band": [g.band[0], g.band[1]],
                "members": list(g.members),
                "representative": int(rep),
            }
        )
    return {
        "tuples": [
            {"transform": t.transform, "magnitude": t.magnitude} for t in tuples
        ],
        "distances": [float(d) for d in dist],
        "groups": groups,
        "requested_groups": result.requested_groups,
        "fewer_than_requested": result.fewer_than_requested,
    }
