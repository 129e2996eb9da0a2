"""Procedural chair dataset with exact, analytically controlled part adjacency.

Chairs are unions of axis-aligned boxes over four parts (back=0, seat=1,
legs=2, armrest=3; the four legs are one part). Each catalog structure code
fixes which parts exist and which pairs touch; dimensions are sampled per
shape. Adjacent parts share a contact face (distance 0), non-adjacent parts
are kept at least four contact epsilons apart, so the min-distance adjacency
rule recovers the intended graph exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DatasetManifest,
    ManifestEntry,
    PointCloud,
    ShapeRecord,
    StructureGraph,
    adjacency_from_parts,
    normalize_cloud,
    validate_structure_graph,
)
from .errors import SgenError

PART_BACK, PART_SEAT, PART_LEG, PART_ARMREST = 0, 1, 2, 3
NUM_PARTS = 4

# Pre-normalization contact epsilon; non-adjacent parts are built >= 4x apart.
CONTACT_EPS = 0.01
MIN_SEPARATION = 4 * CONTACT_EPS
# Threshold used to recover adjacency on normalized clouds (core default).
CONTACT_THRESHOLD = 0.05

CATALOG_CODES = ("Ch_012", "Ch_03", "Ch_13", "Ch_23", "Ch_013", "Ch_023", "Ch_123", "Ch_0123")

BASE_EDGES = ((PART_BACK, PART_SEAT), (PART_SEAT, PART_LEG))

DEFAULT_RANGES = {
    "seat_width": (0.9, 1.2),
    "seat_depth": (0.9, 1.2),
    "seat_thickness": (0.07, 0.12),
    "leg_height": (0.5, 0.8),
    "leg_halfwidth": (0.05, 0.07),
    "back_halfthickness": (0.03, 0.05),
    "back_height": (0.7, 1.0),
    "arm_support_height": (0.18, 0.28),
    "arm_halfthickness": (0.02, 0.035),
    "arm_band_halfwidth": (0.035, 0.05),
    "outer_support_halfthickness": (0.025, 0.035),
}

_ARM_BACK_GAP = 0.06      # arm-to-back clearance when not attached
_ARM_FRONT_INSET = 0.03
_OUTER_SUPPORT_DIP = 0.12  # how far the outer support reaches down beside the leg
_INNER_SUPPORT_HALFDEPTH = 0.05


def structure_catalog() -> list[tuple[str, np.ndarray, np.ndarray]]:
    """All catalog codes with their existence vectors and adjacency matrices."""
    out = []
    for code in CATALOG_CODES:
        v, e = code_structure(code)
        out.append((code, v, e))
    return out


def code_structure(code: str) -> tuple[np.ndarray, np.ndarray]:
    """Expand a catalog code like Ch_13 into (V, E)."""
    if code not in CATALOG_CODES:
        raise SgenError("UNKNOWN_STRUCTURE", f"{code!r} is not a catalog code")
    digits = code.split("_", 1)[1]
    v = np.ones(NUM_PARTS, dtype=np.uint8)
    e = np.zeros((NUM_PARTS, NUM_PARTS), dtype=np.uint8)
    for j, k in BASE_EDGES:
        e[j, k] = e[k, j] = 1
    if "3" in digits:
        for d in digits:
            j = int(d)
            if j != PART_ARMREST:
                e[j, PART_ARMREST] = e[PART_ARMREST, j] = 1
    else:
        v[PART_ARMREST] = 0
    return v, e


def structure_code_for(existence: np.ndarray, adjacency: np.ndarray) -> str | None:
    """Reverse lookup: catalog code matching (V, E), or None."""
    for code, v, e in structure_catalog():
        if np.array_equal(v, existence) and np.array_equal(e, adjacency):
            return code
    return None


@dataclass
class PartPrimitive:
    """Axis-aligned box belonging to one part."""

    center: np.ndarray
    half_extents: np.ndarray
    part_index: int

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        if np.any(self.half_extents <= 0):
            raise SgenError("INVALID_RANGE", "half_extents must be strictly positive")

    @property
    def lo(self) -> np.ndarray:
        return self.center - self.half_extents

    @property
    def hi(self) -> np.ndarray:
        return self.center + self.half_extents

    @property
    def surface_area(self) -> float:
        a, b, c = 2 * self.half_extents
        return 2.0 * (a * b + b * c + a * c)


def _box(lo, hi, part: int) -> PartPrimitive:
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    return PartPrimitive((lo + hi) / 2, (hi - lo) / 2, part)


def box_distance(a: PartPrimitive, b: PartPrimitive) -> float:
    gaps = np.maximum(0.0, np.maximum(a.lo - b.hi, b.lo - a.hi))
    return float(np.sqrt(np.sum(gaps**2)))


@dataclass
class ChairSpec:
    """A structure code plus the sampled dimensions that realize it."""

    structure_code: str
    dims: dict[str, float]

    @property
    def armrest_neighbors(self) -> frozenset[int]:
        digits = self.structure_code.split("_", 1)[1]
        if "3" not in digits:
            return frozenset()
        return frozenset(int(d) for d in digits if d != "3")


def sample_chair_spec(code: str, rng: np.random.Generator, ranges=None) -> ChairSpec:
    ranges = dict(DEFAULT_RANGES, **(ranges or {}))
    dims = {key: float(rng.uniform(lo, hi)) for key, (lo, hi) in ranges.items()}
    return ChairSpec(code, dims)


def realize_parts(spec: ChairSpec) -> list[PartPrimitive]:
    """Instantiate the box primitives for a chair spec."""
    d = spec.dims
    w2 = d["seat_width"] / 2
    dp2 = d["seat_depth"] / 2
    t = d["seat_thickness"]
    hleg = d["leg_height"]
    lw = d["leg_halfwidth"]
    bt = d["back_halfthickness"]
    seat_top = hleg + t
    nbrs = spec.armrest_neighbors
    has_arm = "3" in spec.structure_code.split("_", 1)[1]

    boxes = []
    # Seat slab.
    boxes.append(_box((-w2, -dp2, hleg), (w2, dp2, seat_top), PART_SEAT))
    # Four legs centered on the seat's side planes so their outer faces stick out.
    for sx in (-1, 1):
        for sy in (-1, 1):
            cx = sx * w2
            cy = sy * (dp2 - lw)
            boxes.append(_box((cx - lw, cy - lw, 0.0), (cx + lw, cy + lw, hleg), PART_LEG))
    # Back slab; widened sideways when the armrest hangs outside and must reach it.
    widened = {PART_BACK, PART_LEG} <= nbrs
    st = d["outer_support_halfthickness"]
    back_w2 = w2 + lw + 2 * st if widened else w2
    y_back_front = -dp2 + 2 * bt
    boxes.append(
        _box((-back_w2, -dp2, seat_top), (back_w2, y_back_front, seat_top + d["back_height"]),
             PART_BACK)
    )
    if has_arm:
        aw = d["arm_band_halfwidth"]
        at = d["arm_halfthickness"]
        hs = d["arm_support_height"]
        z_arm = seat_top + hs
        inner_lo, inner_hi = w2 - 2 * aw, w2
        outer_lo, outer_hi = w2 + lw, w2 + lw + 2 * st
        ax0 = inner_lo if (PART_SEAT in nbrs or PART_LEG not in nbrs) else outer_lo
        ax1 = outer_hi if PART_LEG in nbrs else inner_hi
        ay0 = y_back_front if PART_BACK in nbrs else y_back_front + _ARM_BACK_GAP
        ay1 = dp2 - _ARM_FRONT_INSET
        for sx in (-1, 1):
            def mx(a, b):
                return (min(sx * a, sx * b), max(sx * a, sx * b))

            x0, x1 = mx(ax0, ax1)
            boxes.append(_box((x0, ay0, z_arm), (x1, ay1, z_arm + 2 * at), PART_ARMREST))
            if PART_SEAT in nbrs:
                x0, x1 = mx(inner_lo, inner_hi)
                ys = dp2 / 2
                boxes.append(
                    _box((x0, ys - _INNER_SUPPORT_HALFDEPTH, seat_top),
                         (x1, ys + _INNER_SUPPORT_HALFDEPTH, z_arm), PART_ARMREST)
                )
            if PART_LEG in nbrs:
                x0, x1 = mx(outer_lo, outer_hi)
                boxes.append(
                    _box((x0, dp2 - 2 * lw, hleg - _OUTER_SUPPORT_DIP),
                         (x1, dp2, z_arm), PART_ARMREST)
                )
    return boxes


def _part_distances(boxes: list[PartPrimitive]) -> np.ndarray:
    dist = np.full((NUM_PARTS, NUM_PARTS), np.inf)
    for i, a in enumerate(boxes):
        for b in boxes[i + 1:]:
            if a.part_index == b.part_index:
                continue
            j, k = a.part_index, b.part_index
            d = box_distance(a, b)
            if d < dist[j, k]:
                dist[j, k] = dist[k, j] = d
    return dist


def check_spec_geometry(spec: ChairSpec) -> list[PartPrimitive]:
    """Realize the boxes and verify the contact/separation invariant analytically."""
    boxes = realize_parts(spec)
    v, e = code_structure(spec.structure_code)
    dist = _part_distances(boxes)
    for j in range(NUM_PARTS):
        for k in range(j + 1, NUM_PARTS):
            if not (v[j] and v[k]):
                continue
            if e[j, k]:
                if dist[j, k] >= CONTACT_EPS:
                    raise SgenError(
                        "GEOMETRY_INFEASIBLE",
                        f"{spec.structure_code}: parts {j},{k} should touch (d={dist[j, k]:.4f})",
                    )
            elif dist[j, k] < MIN_SEPARATION:
                raise SgenError(
                    "GEOMETRY_INFEASIBLE",
                    f"{spec.structure_code}: parts {j},{k} too close (d={dist[j, k]:.4f})",
                )
    return boxes


def _contact_rectangles(boxes: list[PartPrimitive], j: int, k: int):
    """Rectangles (lo, hi with one zero-width axis) where parts j and k touch."""
    rects = []
    for a in boxes:
        if a.part_index != j:
            continue
        for b in boxes:
            if b.part_index != k:
                continue
            if box_distance(a, b) > 1e-12:
                continue
            lo = np.maximum(a.lo, b.lo)
            hi = np.minimum(a.hi, b.hi)
            span = hi - lo
            flat = np.isclose(span, 0.0, atol=1e-12)
            if flat.sum() == 1 and np.all(span >= -1e-12):
                rects.append((lo, np.maximum(hi, lo)))
    return rects


def _sample_on_rectangles(rects, count: int, rng: np.random.Generator) -> np.ndarray:
    areas = np.array([np.prod(np.sort(hi - lo)[1:]) for lo, hi in rects])
    weights = areas / areas.sum() if areas.sum() > 0 else np.full(len(rects), 1 / len(rects))
    choice = rng.choice(len(rects), size=count, p=weights)
    pts = np.empty((count, 3))
    for i, ri in enumerate(choice):
        lo, hi = rects[ri]
        pts[i] = rng.uniform(lo, hi)
    return pts


def _sample_on_boxes(boxes: list[PartPrimitive], count: int, rng: np.random.Generator) -> np.ndarray:
    areas = np.array([b.surface_area for b in boxes])
    box_choice = rng.choice(len(boxes), size=count, p=areas / areas.sum())
    pts = np.empty((count, 3))
    for i, bi in enumerate(box_choice):
        b = boxes[bi]
        ext = 2 * b.half_extents
        face_areas = np.array([ext[1] * ext[2], ext[1] * ext[2], ext[0] * ext[2],
                               ext[0] * ext[2], ext[0] * ext[1], ext[0] * ext[1]])
        face = rng.choice(6, p=face_areas / face_areas.sum())
        axis, side = face // 2, face % 2
        p = rng.uniform(b.lo, b.hi)
        p[axis] = b.hi[axis] if side else b.lo[axis]
        pts[i] = p
    return pts


def _allocate_counts(areas: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder allocation, each positive-area part gets >= 1."""
    mask = areas > 0
    quotas = np.zeros_like(areas)
    quotas[mask] = areas[mask] / areas[mask].sum() * n
    counts = np.floor(quotas).astype(int)
    counts[mask] = np.maximum(counts[mask], 1)
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    rema = quotas - counts
    while counts.sum() < n:
        i = int(np.argmax(rema))
        counts[i] += 1
        rema[i] = -np.inf
    return counts


def make_shape(spec: ChairSpec, n: int, seed, shape_id: str | None = None) -> ShapeRecord:
    """Sample a labeled, normalized point cloud for a chair spec.

    Points are allocated to parts proportionally to surface area; every
    adjacent part pair additionally receives a few shared points on its
    contact face so the min-distance adjacency rule is exact. Deterministic
    given (spec, seed).
    """
    if n < 64:
        raise SgenError("INVALID_RANGE", "make_shape needs n >= 64")
    boxes = check_spec_geometry(spec)
    v, e = code_structure(spec.structure_code)
    pairs = [(j, k) for j in range(NUM_PARTS) for k in range(j + 1, NUM_PARTS) if e[j, k]]
    k_seam = max(1, n // 256)

    rng = np.random.default_rng(seed)
    for attempt in range(100):
        part_boxes = [[b for b in boxes if b.part_index == j] for j in range(NUM_PARTS)]
        areas = np.array([sum(b.surface_area for b in bl) for bl in part_boxes])
        counts = _allocate_counts(areas, n)

        seam_pts: dict[int, list[np.ndarray]] = {j: [] for j in range(NUM_PARTS)}
        for j, k in pairs:
            rects = _contact_rectangles(boxes, j, k)
            if not rects:
                raise SgenError("GEOMETRY_INFEASIBLE", f"no contact face for parts {j},{k}")
            shared = _sample_on_rectangles(rects, k_seam, rng)
            seam_pts[j].append(shared)
            seam_pts[k].append(shared)

        chunks, label_idx = [], []
        feasible = True
        for j in range(NUM_PARTS):
            if counts[j] == 0:
                continue
            seams = np.concatenate(seam_pts[j]) if seam_pts[j] else np.empty((0, 3))
            if len(seams) > counts[j]:
                feasible = False
                break
            rest = _sample_on_boxes(part_boxes[j], counts[j] - len(seams), rng)
            chunks.append(np.concatenate([seams, rest]))
            label_idx.extend([j] * counts[j])
        if not feasible:
            continue

        points = np.concatenate(chunks)
        labels = np.zeros((n, NUM_PARTS), dtype=np.uint8)
        labels[np.arange(n), label_idx] = 1
        cloud = normalize_cloud(PointCloud(points.astype(np.float32)))
        if np.array_equal(adjacency_from_parts(cloud, labels, CONTACT_THRESHOLD), e):
            graph = StructureGraph(labels, v, e)
            sid = shape_id or f"chair-{spec.structure_code}-{seed}"
            return ShapeRecord(cloud, graph, spec.structure_code, sid)
    raise SgenError("GEOMETRY_INFEASIBLE", f"{spec.structure_code}: no valid sampling in 100 tries")


@dataclass
class GeneratorConfig:
    n: int = 512
    count_per_code: int = 25
    ranges: dict = field(default_factory=dict)
    noise_sigma: float = 0.0
    seed: int = 0
    category: str = "chair"

    def __post_init__(self):
        if self.n < max(NUM_PARTS, 64):
            raise SgenError("INVALID_RANGE", "GeneratorConfig.n must be >= 64")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})


def _split_for(shape_id: str) -> str:
    digest = hashlib.sha256(shape_id.encode()).digest()
    return "train" if int.from_bytes(digest[:4], "big") % 100 < 85 else "test"


def make_dataset(config: GeneratorConfig) -> tuple[DatasetManifest, list[ShapeRecord]]:
    """Generate count_per_code shapes for every catalog code, with an 85/15 hash split."""
    manifest = DatasetManifest(category=config.category, m=NUM_PARTS)
    records = []
    for ci, code in enumerate(CATALOG_CODES):
        for i in range(config.count_per_code):
            ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(ci, i))
            rng = np.random.default_rng(ss)
            spec = sample_chair_spec(code, rng, config.ranges)
            shape_id = f"{config.category}-{code}-{i:04d}"
            record = make_shape(spec, config.n, ss.spawn(1)[0], shape_id=shape_id)
            if config.noise_sigma > 0:
                noisy = record.cloud.points + config.noise_sigma * rng.standard_normal(
                    (config.n, 3)
                ).astype(np.float32)
                record = ShapeRecord(
                    normalize_cloud(PointCloud(noisy)), record.graph, code, shape_id
                )
            records.append(record)
            manifest.entries.append(
                ManifestEntry(shape_id, code, _split_for(shape_id), f"blobs/{shape_id}.sgpc")
            )
    return manifest, records
