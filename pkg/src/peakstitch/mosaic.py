"""Mosaic planning: stitch N shuffled images without prior layout knowledge.

Every unordered pair of images is registered once, producing a symmetric
pairwise transform table.  Planning then proceeds in greedy rounds: the
image with the most verified neighbors among the remaining set anchors
the canvas, and every image reachable from the placed set through table
entries is placed by composing transforms along a connecting entry.
Images that never connect are reported as unmatched, not silently
dropped.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .compositor import Placement, compute_canvas, warp_and_blend
from .errors import ConfigError
from .imaging import IntensityImage
from .pipeline import PipelineConfig, prepare_image, register_prepared
from .registration import RigidTransform


@dataclass(frozen=True)
class PairEntry:
    transform: RigidTransform  # maps column image's coords into row image's frame
    inlier_count: int


@dataclass(eq=False)
class PairwiseTransformTable:
    n: int
    entries: dict[tuple[int, int], PairEntry] = field(default_factory=dict)

    def present(self, a: int, b: int) -> bool:
        return (a, b) in self.entries

    def get(self, a: int, b: int) -> PairEntry:
        return self.entries[(a, b)]

    def set_pair(self, a: int, b: int, b_to_a: RigidTransform, inliers: int) -> None:
        """Store a verified pair symmetrically: entry (a, b) maps b into a's frame."""
        if a == b:
            raise ValueError("diagonal entries are not allowed")
        self.entries[(a, b)] = PairEntry(b_to_a, inliers)
        self.entries[(b, a)] = PairEntry(b_to_a.inverse(), inliers)

    def neighbor_count(self, a: int, among: set[int]) -> int:
        return sum(1 for b in among if b != a and (a, b) in self.entries)


@dataclass(eq=False)
class MosaicRound:
    reference_id: str
    stitched_ids: list[str]


@dataclass(eq=False)
class MosaicPlan:
    rounds: list[MosaicRound]
    final_unmatched: list[str]
    placements: dict[str, RigidTransform] = field(default_factory=dict)
    pair_inliers: dict[tuple[str, str], int] = field(default_factory=dict)
    stage_seconds: dict[str, float] = field(default_factory=dict)

    @property
    def total_seconds(self) -> float:
        return sum(self.stage_seconds.values())


def _pair_seed(seed: int, a: int, b: int) -> int:
    return int(np.random.SeedSequence([seed, a, b]).generate_state(1)[0])


def build_pairwise_table(
    images: Sequence[IntensityImage], cfg: PipelineConfig
) -> PairwiseTransformTable:
    """Register every unordered image pair once and tabulate the successes.

    Features are detected and described once per image; the n*(n-1)/2
    match+RANSAC jobs run on a bounded worker pool with per-pair derived
    seeds, so the table is identical for any thread count.  Failed pairs
    are simply absent.
    """
    if len(images) < 2:
        raise ConfigError("pairwise table needs at least 2 images")
    prepared = [prepare_image(img, cfg) for img in images]
    jobs = [(a, b) for a in range(len(images)) for b in range(a + 1, len(images))]

    def run(job: tuple[int, int]):
        a, b = job
        _, result, _, _ = register_prepared(
            prepared[a], prepared[b], cfg, seed=_pair_seed(cfg.seed, a, b)
        )
        return a, b, result

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    table = PairwiseTransformTable(n=len(images))
    for a, b, result in outcomes:
        if result is not None:
            # ransac gives a->b; the (a, b) entry wants b mapped into a.
            table.set_pair(a, b, result.transform.inverse(), len(result.inliers))
    return table


def select_reference(table: PairwiseTransformTable, remaining: set[int]) -> int:
    """Remaining image with the most verified neighbors; ties take the lowest id."""
    if not remaining:
        raise ValueError("remaining set is empty")
    return min(remaining, key=lambda a: (-table.neighbor_count(a, remaining), a))


def _best_link(table: PairwiseTransformTable, candidate: int, placed: dict) -> int | None:
    """Placed image to attach `candidate` through: most inliers, then lowest id."""
    links = [p for p in placed if table.present(p, candidate)]
    if not links:
        return None
    return min(links, key=lambda p: (-table.get(p, candidate).inlier_count, p))


def plan_mosaic(
    table: PairwiseTransformTable, ids: Sequence[str]
) -> tuple[MosaicPlan, dict[int, RigidTransform]]:
    """Greedy round loop over a pairwise table.

    Each round anchors a reference (identity placement for the first one,
    composed through an existing entry afterwards when possible) and then
    places every remaining image reachable from the placed set.  A selected
    reference with no route into the placed set cannot be positioned and
    goes to final_unmatched.
    """
    remaining = set(range(table.n))
    placed: dict[int, RigidTransform] = {}
    rounds: list[MosaicRound] = []
    unmatched: list[int] = []

    while remaining:
        ref = select_reference(table, remaining)
        if not placed:
            placed[ref] = RigidTransform.identity()
        else:
            link = _best_link(table, ref, placed)
            if link is None:
                remaining.discard(ref)
                unmatched.append(ref)
                continue
            placed[ref] = placed[link].compose(table.get(link, ref).transform)
        remaining.discard(ref)

        stitched: list[int] = []
        progress = True
        while progress:
            progress = False
            for candidate in sorted(remaining):
                link = _best_link(table, candidate, placed)
                if link is None:
                    continue
                placed[candidate] = placed[link].compose(
                    table.get(link, candidate).transform
                )
                remaining.discard(candidate)
                stitched.append(candidate)
                progress = True
        rounds.append(MosaicRound(ids[ref], [ids[i] for i in stitched]))

    plan = MosaicPlan(
        rounds=rounds,
        final_unmatched=[ids[i] for i in sorted(unmatched)],
        placements={ids[i]: t for i, t in placed.items()},
    )
    return plan, placed


def plan_and_stitch(
    images: Sequence[IntensityImage], cfg: PipelineConfig
) -> tuple[MosaicPlan, np.ndarray]:
    """Build the pairwise table, plan rounds, and composite the placed images."""
    if len(images) < 2:
        raise ConfigError("mosaic needs at least 2 images")
    ids = [img.image_id for img in images]
    if len(set(ids)) != len(ids):
        raise ConfigError("image ids must be unique")

    t0 = time.perf_counter()
    table = build_pairwise_table(images, cfg)
    t1 = time.perf_counter()
    plan, placed = plan_mosaic(table, ids)
    plan.pair_inliers = {
        (ids[a], ids[b]): entry.inlier_count
        for (a, b), entry in table.entries.items()
        if a < b
    }
    t2 = time.perf_counter()

    placements = [Placement(ids[i], placed[i]) for i in sorted(placed)]
    dims = {ids[i]: (images[i].nr, images[i].nc) for i in placed}
    canvas = compute_canvas(placements, dims)
    composite = warp_and_blend(
        {ids[i]: images[i].pixels for i in placed},
        placements,
        canvas,
        blend=cfg.blend,
        resample=cfg.resample,
    )
    t3 = time.perf_counter()
    plan.stage_seconds = {
        "pairwise_table": t1 - t0,
        "planning": t2 - t1,
        "compositing": t3 - t2,
    }
    return plan, composite
