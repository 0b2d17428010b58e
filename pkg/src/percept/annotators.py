"""The synthetic expert suite.

Each expert is a pure CAS -> CAS transformer over the synthetic RGB-D
observation model, registered with the descriptor that planning consults.
Real perception algorithms are replaced by deterministic analogues with
injectable noise: depth clustering for tabletop segmentation, invalid
depth components for transparency, color contrast for flat objects, and
seeded conditional-probability emitters standing in for learned detectors.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from . import scene as scene_mod
from .cas import (
    Annotation,
    Cas,
    add_hypothesis,
    annotate,
    annotate_scene,
    find_hypothesis_by_region,
    region_bbox,
    region_centroid,
    region_from_mask,
    scene_annotations_of,
)
from .geometry import Pose
from .ontology import KnowledgeBase
from .registry import (
    KIND_ANNOTATOR,
    KIND_BOTH,
    KIND_HYPOTHESIS_GENERATOR,
    AnnotatorContext,
    Registry,
    descriptor,
)

DEPTH_DELTA_MM = 10.0
MIN_COMPONENT_PIXELS = 3
COLOR_CONTRAST_THRESHOLD = 0.15
BIG_VOLUME_LITERS = 0.5


# --- shared helpers ---------------------------------------------------------------

def _depth_mode(values: np.ndarray) -> float:
    """Most frequent value; ties break toward the smallest."""
    vals, counts = np.unique(values, return_counts=True)
    return float(vals[np.argmax(counts)])


def _dominant_plane_depth(cas: Cas, kb: KnowledgeBase) -> float:
    planes = scene_annotations_of(cas, "PlaneAnnotation", kb)
    if not planes:
        raise AssertionError("plane annotation missing despite planner closure")
    return float(planes[0].get("depthMillimeters"))


def _roi_mask(cas: Cas, ctx: AnnotatorContext) -> np.ndarray | None:
    rois = scene_annotations_of(cas, "RegionOfInterest", ctx.kb)
    if not rois:
        return None
    h, w = cas.observation.height, cas.observation.width
    mask = np.zeros((h, w), dtype=bool)
    labels = {r.get("roiLabel") for r in rois}
    for region in ctx.semantic_regions:
        if region.label in labels:
            x, y, rw, rh = region.rect
            mask[int(y):int(y + rh), int(x):int(x + rw)] = True
    return mask


def _components(mask: np.ndarray, min_pixels: int) -> list:
    """Connected components (4-connectivity) as pixel-index frozensets."""
    labeled, count = ndimage.label(mask)
    regions = []
    for i in range(1, count + 1):
        region = region_from_mask(labeled == i)
        if len(region) >= min_pixels:
            regions.append(region)
    return regions


def _ensure_cluster(cas: Cas, kb: KnowledgeBase, region: frozenset, source: str) -> str:
    """Create a hypothesis for a region unless one already covers it."""
    hyp_id = find_hypothesis_by_region(cas, region)
    if hyp_id is None:
        hyp_id = add_hypothesis(cas, region)
    annotate(cas, hyp_id, Annotation.make("SceneCluster", source=source), kb)
    return hyp_id


def _clusters(cas: Cas, kb: KnowledgeBase) -> list:
    return [
        hyp
        for hyp in cas.hypotheses
        if any(a.type_name == "SceneCluster" for a in hyp.annotations)
    ]


def _region_heights(cas: Cas, region, plane_depth: float) -> np.ndarray:
    depth = cas.observation.depth.ravel()
    values = depth[sorted(region)]
    valid = values[values > 0]
    return plane_depth - valid


def _rgb_to_hue_histogram(pixels: np.ndarray, bins: int = 12) -> tuple:
    """Hue histogram with two extra bins for unsaturated and dark pixels."""
    maxc = pixels.max(axis=1)
    minc = pixels.min(axis=1)
    delta = maxc - minc
    dark = maxc < 0.15
    unsaturated = (~dark) & (delta < 0.12)
    chromatic = ~(dark | unsaturated)
    hist = np.zeros(bins + 2, dtype=float)
    hist[bins] = np.count_nonzero(unsaturated)
    hist[bins + 1] = np.count_nonzero(dark)
    px = pixels[chromatic]
    if len(px):
        r, g, b = px[:, 0], px[:, 1], px[:, 2]
        mx = px.max(axis=1)
        d = mx - px.min(axis=1)
        hue = np.zeros(len(px))
        rmax = mx == r
        gmax = (~rmax) & (mx == g)
        bmax = ~(rmax | gmax)
        hue[rmax] = ((g - b)[rmax] / d[rmax]) % 6
        hue[gmax] = (b - r)[gmax] / d[gmax] + 2
        hue[bmax] = (r - g)[bmax] / d[bmax] + 4
        hue /= 6.0
        idx = np.minimum((hue * bins).astype(int), bins - 1)
        np.add.at(hist, idx, 1.0)
    hist /= max(hist.sum(), 1.0)
    return tuple(round(float(v), 6) for v in hist)


def _nearest_palette_color(mean_rgb: np.ndarray) -> str:
    best, best_d = None, None
    for name in sorted(scene_mod.PALETTE):
        d = float(np.linalg.norm(mean_rgb - np.array(scene_mod.PALETTE[name])))
        if best_d is None or d < best_d:
            best, best_d = name, d
    return best


def _centroid_pose(cas: Cas, region, ctx: AnnotatorContext, plane_depth: float) -> Pose:
    obs = cas.observation
    cx, cy = region_centroid(region, obs.width)
    depth = obs.depth.ravel()
    values = depth[sorted(region)]
    valid = values[values > 0]
    z_mm = float(np.median(valid)) if len(valid) else plane_depth
    scale = ctx.mm_per_pixel / 1000.0
    return Pose(
        x=round((cx - obs.width / 2.0) * scale, 6),
        y=round((cy - obs.height / 2.0) * scale, 6),
        z=round(z_mm / 1000.0, 6),
    )


# --- hypothesis generation ----------------------------------------------------------

def plane_annotator(cas: Cas, ctx: AnnotatorContext):
    """Dominant supporting plane from the depth-value mode."""
    depth = cas.observation.depth
    valid = depth[depth > 0]
    if len(valid) == 0:
        return
    plane_depth = _depth_mode(valid)
    label = "plane"
    on_plane = np.abs(depth - plane_depth) <= DEPTH_DELTA_MM
    best = 0
    for region in ctx.semantic_regions:
        x, y, w, h = region.rect
        count = int(np.count_nonzero(on_plane[int(y):int(y + h), int(x):int(x + w)]))
        if count > best:
            best, label = count, region.label
    annotate_scene(
        cas,
        Annotation.make("PlaneAnnotation", depthMillimeters=plane_depth, planeLabel=label),
        ctx.kb,
    )


def point_cloud_cluster_extractor(cas: Cas, ctx: AnnotatorContext):
    """Euclidean-distance style tabletop segmentation over valid depth."""
    plane_depth = _dominant_plane_depth(cas, ctx.kb)
    delta = ctx.param("PointCloudClusterExtractor", "depthDeltaMillimeters", DEPTH_DELTA_MM)
    min_px = ctx.param("PointCloudClusterExtractor", "minPixels", MIN_COMPONENT_PIXELS)
    depth = cas.observation.depth
    mask = (depth > 0) & (np.abs(depth - plane_depth) > delta)
    roi = _roi_mask(cas, ctx)
    if roi is not None:
        mask &= roi
    for region in _components(mask, min_px):
        _ensure_cluster(cas, ctx.kb, region, "depth_clustering")


def transparent_segmentation(cas: Cas, ctx: AnnotatorContext):
    """Invalid-depth holes that are enclosed by valid returns."""
    depth = cas.observation.depth
    invalid = depth == 0
    roi = _roi_mask(cas, ctx)
    if roi is not None:
        invalid = invalid & roi
    labeled, count = ndimage.label(invalid)
    border_labels = set(labeled[0, :]) | set(labeled[-1, :]) | set(labeled[:, 0]) | set(labeled[:, -1])
    limit = 0.3 * depth.size
    for i in range(1, count + 1):
        if i in border_labels:
            continue
        region = region_from_mask(labeled == i)
        if MIN_COMPONENT_PIXELS <= len(region) <= limit:
            _ensure_cluster(cas, ctx.kb, region, "transparent_segmentation")


def image_segmentation(cas: Cas, ctx: AnnotatorContext):
    """Color-contrast segmentation on the supporting plane.

    Catches objects too flat for depth clustering (cutlery) by comparing
    on-plane pixels against the plane's reference color.
    """
    plane_depth = _dominant_plane_depth(cas, ctx.kb)
    threshold = ctx.param("ImageSegmentation", "contrastThreshold", COLOR_CONTRAST_THRESHOLD)
    obs = cas.observation
    on_plane = (obs.depth > 0) & (np.abs(obs.depth - plane_depth) <= DEPTH_DELTA_MM)
    if not on_plane.any():
        return
    reference = np.median(obs.color[on_plane], axis=0)
    distance = np.linalg.norm(obs.color - reference, axis=2)
    mask = on_plane & (distance > threshold)
    roi = _roi_mask(cas, ctx)
    if roi is not None:
        mask &= roi
    for region in _components(mask, MIN_COMPONENT_PIXELS):
        _ensure_cluster(cas, ctx.kb, region, "image_segmentation")


def region_filter(cas: Cas, ctx: AnnotatorContext):
    """Restrict downstream generators to one semantic region.

    The target region comes from an explicit config parameter or from the
    query's location constraint.
    """
    from .query import Compound, Detect, NestedRef, region_label_of

    target = ctx.param("RegionFilter", "region", None)
    if target is None and cas.query is not None:
        q = cas.query
        desc = None
        if isinstance(q, Detect):
            desc = q.description
        elif isinstance(q, Compound):
            desc = q.inner.description
        if desc is not None:
            value = desc.value_of("location")
            if isinstance(value, NestedRef):
                target = region_label_of(value.description)
            elif isinstance(value, str):
                target = value
    if target is None:
        return
    if any(r.label == target for r in ctx.semantic_regions):
        annotate_scene(cas, Annotation.make("RegionOfInterest", roiLabel=target), ctx.kb)


# --- general-purpose annotators -------------------------------------------------------

def normal_estimator(cas: Cas, ctx: AnnotatorContext):
    """Pseudo surface normals from depth gradients."""
    depth = cas.observation.depth
    dy, dx = np.gradient(depth)
    nz = 1.0 / np.sqrt(dx**2 + dy**2 + 1.0)
    valid = depth > 0
    up = float((nz[valid] > 0.95).mean()) if valid.any() else 0.0
    annotate_scene(
        cas, Annotation.make("NormalsCloud", upFraction=round(up, 6)), ctx.kb
    )


def primitive_shape_annotator(cas: Cas, ctx: AnnotatorContext):
    """box / round / flat from region fill ratio, aspect and protrusion."""
    plane_depth = _dominant_plane_depth(cas, ctx.kb)
    flat_max = ctx.param("PrimitiveShapeAnnotator", "flatMaxMillimeters", DEPTH_DELTA_MM)
    flat_aspect = ctx.param("PrimitiveShapeAnnotator", "flatAspect", 4.0)
    width = cas.observation.width
    for hyp in _clusters(cas, ctx.kb):
        heights = _region_heights(cas, hyp.region, plane_depth)
        x0, y0, x1, y1 = region_bbox(hyp.region, width)
        w, h = x1 - x0 + 1, y1 - y0 + 1
        fill = len(hyp.region) / (w * h)
        aspect = max(w, h) / min(w, h)
        low = len(heights) > 0 and float(np.median(heights)) <= flat_max
        if low or aspect >= flat_aspect:
            shape = "flat"
        elif fill >= 0.85:
            shape = "box"
        else:
            shape = "round"
        annotate(cas, hyp.id, Annotation.make("ShapeAnnotation", shape=shape), ctx.kb)


def cluster_color_histogram_calculator(cas: Cas, ctx: AnnotatorContext):
    """Semantic color label (nearest palette) plus a hue histogram."""
    color = cas.observation.color.reshape(-1, 3)
    for hyp in _clusters(cas, ctx.kb):
        pixels = color[sorted(hyp.region)]
        label = _nearest_palette_color(pixels.mean(axis=0))
        hist = _rgb_to_hue_histogram(pixels)
        annotate(
            cas,
            hyp.id,
            Annotation.make("SemanticColorAnnotation", color=label, histogram=hist),
            ctx.kb,
        )


def cluster_3d_geometry_annotator(cas: Cas, ctx: AnnotatorContext):
    """Bounding-box pose plus a small/big size split on metric volume."""
    plane_depth = _dominant_plane_depth(cas, ctx.kb)
    big_liters = ctx.param("Cluster3DGeometryAnnotator", "bigLiters", BIG_VOLUME_LITERS)
    for hyp in _clusters(cas, ctx.kb):
        pose = _centroid_pose(cas, hyp.region, ctx, plane_depth)
        heights = _region_heights(cas, hyp.region, plane_depth)
        height_mm = float(np.max(heights)) if len(heights) else 0.0
        volume_l = len(hyp.region) * ctx.mm_per_pixel**2 * max(height_mm, 0.0) / 1e6
        size = "big" if volume_l >= big_liters else "small"
        annotate(cas, hyp.id, Annotation.make("PoseAnnotation", pose=pose), ctx.kb)
        annotate(
            cas,
            hyp.id,
            Annotation.make("SizeAnnotation", size=size, volumeLiters=round(volume_l, 6)),
            ctx.kb,
        )


def cluster_location_annotator(cas: Cas, ctx: AnnotatorContext):
    """Semantic location: the map region containing the region centroid."""
    width = cas.observation.width
    for hyp in _clusters(cas, ctx.kb):
        cx, cy = region_centroid(hyp.region, width)
        for region in ctx.semantic_regions:
            if region.contains(cx, cy):
                annotate(
                    cas,
                    hyp.id,
                    Annotation.make("LocationAnnotation", location=region.label),
                    ctx.kb,
                )
                break


class ClassificationAnnotator:
    """Nearest-neighbour classification against the ontology's visual models.

    The model database is built from every object class that declares
    visual properties; distance mixes semantic color, shape and size
    mismatches over the attributes each class declares.
    """

    EXCLUDED_ROOTS = ("AnalysisComponent", "VisualAppearance", "FeatureStructure", "Capability")

    def __init__(self, kb: KnowledgeBase):
        self.models = {}
        for name in sorted(kb.tbox.classes):
            if any(kb.is_subclass_of(name, root) for root in self.EXCLUDED_ROOTS if kb.tbox.has_class(root)):
                continue
            pairs = kb.visual_properties_of(name)
            if pairs:
                expected = {}
                for attr, value in pairs:
                    expected.setdefault(attr, value)
                self.models[name] = expected

    @property
    def output_domain(self) -> frozenset:
        return frozenset(self.models)

    def _distance(self, expected: dict, observed: dict) -> float:
        used, total = 0, 0.0
        for attr in ("color", "shape", "size"):
            want = expected.get(attr)
            if want is None:
                continue
            have = observed.get(attr)
            used += 1
            if have is None:
                total += 0.5
            elif attr == "size" and want == "medium":
                total += 0.25  # medium is never emitted by the size expert
            elif have != want:
                total += 1.0
        return total / used if used else 1.0

    def __call__(self, cas: Cas, ctx: AnnotatorContext):
        if not self.models:
            return
        for hyp in _clusters(cas, ctx.kb):
            observed = {}
            for ann in hyp.annotations:
                if ann.type_name == "SemanticColorAnnotation":
                    observed.setdefault("color", ann.get("color"))
                elif ann.type_name == "ShapeAnnotation":
                    observed.setdefault("shape", ann.get("shape"))
                elif ann.type_name == "SizeAnnotation":
                    observed.setdefault("size", ann.get("size"))
            if not observed:
                continue
            scored = sorted(
                (self._distance(expected, observed), name)
                for name, expected in self.models.items()
            )
            distance, label = scored[0]
            annotate(
                cas,
                hyp.id,
                Annotation.make(
                    "ClassificationAnnotation",
                    classLabel=label,
                    classConfidence=round(1.0 / (1.0 + distance), 6),
                    classifierName="knn",
                ),
                ctx.kb,
            )


class AtomEmitterStub:
    """Noisy evidence emitter driven by a conditional probability table.

    Stands in for a learned detector: given the ground-truth class of a
    hypothesis, each atom of this emitter's predicate fires with its
    conditional probability. Used to exercise evidence fusion.
    """

    PREDICATE_TYPES = {
        "linemod": ("LinemodAtom", "match"),
        "text": ("TextAtom", "text"),
        "logo": ("LogoAtom", "logo"),
    }

    def __init__(self, predicate: str):
        self.predicate = predicate
        self.type_name, self.property_name = self.PREDICATE_TYPES[predicate]

    def __call__(self, cas: Cas, ctx: AnnotatorContext):
        model = ctx.fusion_model
        if model is None or ctx.scene is None:
            return
        for hyp in _clusters(cas, ctx.kb):
            truth = scene_mod.ground_truth_at(ctx.scene, hyp.region)
            if truth is None or truth.class_label not in model.classes:
                continue
            for pred, value in model.atoms:
                if pred != self.predicate:
                    continue
                p = model.probability((pred, value), truth.class_label)
                if ctx.rng.random() < p:
                    annotate(
                        cas,
                        hyp.id,
                        Annotation(self.type_name, ((self.property_name, value),)),
                        ctx.kb,
                    )


# --- task-specific experts -------------------------------------------------------------

def handle_detector(cas: Cas, ctx: AnnotatorContext):
    """Thin vertical depth ridges inside drawer / cupboard front regions."""
    kb = ctx.kb
    depth = cas.observation.depth
    for region_spec in ctx.semantic_regions:
        if region_spec.kind not in ("drawer", "cupboard"):
            continue
        x, y, w, h = (int(v) for v in region_spec.rect)
        window = depth[y:y + h, x:x + w]
        valid = window[window > 0]
        if len(valid) == 0:
            continue
        front_depth = _depth_mode(valid)
        ridge = np.zeros_like(depth, dtype=bool)
        ridge[y:y + h, x:x + w] = (window > 0) & (front_depth - window > DEPTH_DELTA_MM)
        for region in _components(ridge, 2):
            x0, y0, x1, y1 = region_bbox(region, cas.observation.width)
            rw, rh = x1 - x0 + 1, y1 - y0 + 1
            if rw > 4 or rh < 2 * rw:
                continue  # not a thin vertical ridge
            hyp_id = _ensure_cluster(cas, kb, region, "handle_ridge")
            try:
                parent_type = kb.resolve_type_name(region_spec.kind)
            except Exception:
                parent_type = region_spec.kind.capitalize()
            annotate(
                cas,
                hyp_id,
                [
                    Annotation.make(
                        "ClassificationAnnotation",
                        classLabel="Handle",
                        classConfidence=0.9,
                        classifierName="ridge_detector",
                    ),
                    Annotation.make("PartAnnotation", part="handle"),
                    Annotation.make(
                        "PartOfAnnotation",
                        parent=region_spec.label,
                        parentType=parent_type,
                    ),
                    Annotation.make(
                        "PoseAnnotation",
                        pose=_centroid_pose(cas, region, ctx, front_depth),
                    ),
                    Annotation.make("LocationAnnotation", location=region_spec.label),
                ],
                kb,
            )


def sac_model_annotator(cas: Cas, ctx: AnnotatorContext):
    """Cylinder fit: radius from footprint extent, capacity = pi r^2 h."""
    plane_depth = _dominant_plane_depth(cas, ctx.kb)
    width = cas.observation.width
    for hyp in _clusters(cas, ctx.kb):
        x0, y0, x1, y1 = region_bbox(hyp.region, width)
        radius_mm = ctx.mm_per_pixel * ((x1 - x0 + 1) + (y1 - y0 + 1)) / 4.0
        heights = _region_heights(cas, hyp.region, plane_depth)
        height_mm = float(np.max(heights)) if len(heights) else 0.0
        capacity_l = math.pi * radius_mm**2 * height_mm / 1e6
        annotate(
            cas,
            hyp.id,
            [
                Annotation.make("SacModelAnnotation", model="cylinder"),
                Annotation.make(
                    "VolumeAnnotation",
                    radiusMeters=round(radius_mm / 1000.0, 6),
                    heightMeters=round(height_mm / 1000.0, 6),
                    capacityLiters=round(capacity_l, 6),
                ),
            ],
            ctx.kb,
        )


def shelf_scanner(cas: Cas, ctx: AnnotatorContext):
    """Shelf floors as near-full-width protruding rows inside shelf regions."""
    depth = cas.observation.depth
    for region_spec in ctx.semantic_regions:
        if region_spec.kind != "shelf":
            continue
        x, y, w, h = (int(v) for v in region_spec.rect)
        window = depth[y:y + h, x:x + w]
        valid = window[window > 0]
        if len(valid) == 0:
            continue
        back_depth = _depth_mode(valid)
        protruding = (window > 0) & (back_depth - window > DEPTH_DELTA_MM)
        coverage = protruding.mean(axis=1)
        rows = coverage >= 0.8
        start = None
        for row in range(h + 1):
            active = row < h and rows[row]
            if active and start is None:
                start = row
            elif not active and start is not None:
                strip = np.zeros_like(depth, dtype=bool)
                strip[y + start:y + row, x:x + w] = protruding[start:row]
                region = region_from_mask(strip)
                if region:
                    hyp_id = _ensure_cluster(cas, ctx.kb, region, "shelf_scanner")
                    center_row = y + (start + row - 1) / 2.0
                    annotate(
                        cas,
                        hyp_id,
                        [
                            Annotation.make("ShelfLineAnnotation", row=float(center_row)),
                            Annotation.make(
                                "ClassificationAnnotation",
                                classLabel="ShelfFloor",
                                classConfidence=0.9,
                                classifierName="shelf_scanner",
                            ),
                            Annotation.make(
                                "PoseAnnotation",
                                pose=_centroid_pose(cas, region, ctx, back_depth),
                            ),
                        ],
                        ctx.kb,
                    )
                start = None


def separator_detector(cas: Cas, ctx: AnnotatorContext):
    """Thin vertical product separators inside shelf regions."""
    depth = cas.observation.depth
    for region_spec in ctx.semantic_regions:
        if region_spec.kind != "shelf":
            continue
        x, y, w, h = (int(v) for v in region_spec.rect)
        window = depth[y:y + h, x:x + w]
        valid = window[window > 0]
        if len(valid) == 0:
            continue
        back_depth = _depth_mode(valid)
        protruding = (window > 0) & (back_depth - window > DEPTH_DELTA_MM)
        labeled, count = ndimage.label(protruding)
        for i in range(1, count + 1):
            ys, xs = np.nonzero(labeled == i)
            rw, rh = xs.max() - xs.min() + 1, ys.max() - ys.min() + 1
            if rw <= 2 and rh >= 3 * rw:
                strip = np.zeros_like(depth, dtype=bool)
                strip[y:y + h, x:x + w] = labeled == i
                region = region_from_mask(strip)
                hyp_id = _ensure_cluster(cas, ctx.kb, region, "separator_detector")
                annotate(
                    cas,
                    hyp_id,
                    Annotation.make("SeparatorAnnotation", column=float(x + xs.min())),
                    ctx.kb,
                )


def barcode_stub(cas: Cas, ctx: AnnotatorContext):
    """Deterministic barcode read-out from the authored ground truth."""
    if ctx.scene is None:
        return
    for hyp in _clusters(cas, ctx.kb):
        truth = scene_mod.ground_truth_at(ctx.scene, hyp.region)
        if truth is not None:
            annotate(
                cas,
                hyp.id,
                Annotation.make("BarcodeAtom", barcode=f"EAN:{truth.class_label}"),
                ctx.kb,
            )


def volumetric_counter(cas: Cas, ctx: AnnotatorContext):
    """Facing count = floor(facing extent / product width from the query)."""
    from .query import Compound, Detect

    width_m = ctx.param("VolumetricCounter", "productWidthMeters", None)
    if width_m is None and cas.query is not None:
        q = cas.query
        desc = None
        if isinstance(q, Compound):
            desc = q.inner.description
        elif isinstance(q, Detect):
            desc = q.description
        if desc is not None:
            width_m = desc.value_of("width")
    if not width_m:
        return
    raster_width = cas.observation.width
    for hyp in _clusters(cas, ctx.kb):
        x0, y0, x1, y1 = region_bbox(hyp.region, raster_width)
        extent_m = (x1 - x0 + 1) * ctx.mm_per_pixel / 1000.0
        count = int(math.floor(round(extent_m / float(width_m), 9)))
        annotate(cas, hyp.id, Annotation.make("CountAnnotation", count=count), ctx.kb)


def grasp_points_stub(cas: Cas, ctx: AnnotatorContext):
    """Experimental: grasp points at the left/right region extremes."""
    width = cas.observation.width
    for hyp in _clusters(cas, ctx.kb):
        poses = hyp.annotations_of(ctx.kb, "PoseAnnotation")
        if not poses:
            continue
        pose = poses[0].get("pose")
        x0, y0, x1, y1 = region_bbox(hyp.region, width)
        half = (x1 - x0 + 1) / 2.0 * ctx.mm_per_pixel / 1000.0
        points = (
            round(pose.x - half, 6), round(pose.y, 6), round(pose.z, 6),
            round(pose.x + half, 6), round(pose.y, 6), round(pose.z, 6),
        )
        annotate(cas, hyp.id, Annotation.make("GraspAnnotation", points=points), ctx.kb)


# --- default registry ---------------------------------------------------------------

def default_registry(kb: KnowledgeBase, fusion_model=None) -> Registry:
    """Register the full expert suite in the shipped order.

    The registration order doubles as the topological tie-break, so the
    planner's output order is reproducible.
    """
    registry = Registry(kb)
    classifier = ClassificationAnnotator(kb)
    depth = "Perceive3DDepthCapability"
    color = "PerceiveColorCapability"

    entries = [
        (
            descriptor(
                "PlaneAnnotator", KIND_ANNOTATOR,
                outputs=["PlaneAnnotation"], capabilities=[depth], continuous=True,
            ),
            plane_annotator,
        ),
        (
            descriptor(
                "PointCloudClusterExtractor", KIND_HYPOTHESIS_GENERATOR,
                inputs=["PlaneAnnotation"], outputs=["SceneCluster"],
                capabilities=[depth], continuous=True,
            ),
            point_cloud_cluster_extractor,
        ),
        (
            descriptor(
                "NormalEstimator", KIND_ANNOTATOR,
                outputs=["NormalsCloud"], capabilities=[depth], continuous=True,
            ),
            normal_estimator,
        ),
        (
            descriptor(
                "PrimitiveShapeAnnotator", KIND_ANNOTATOR,
                inputs=["NormalsCloud", "PlaneAnnotation", "SceneCluster"],
                outputs=["ShapeAnnotation"], capabilities=[depth],
                domain=["box", "round", "flat"], continuous=True,
            ),
            primitive_shape_annotator,
        ),
        (
            descriptor(
                "ClusterColorHistogramCalculator", KIND_ANNOTATOR,
                inputs=["SceneCluster"], outputs=["SemanticColorAnnotation"],
                capabilities=[color], domain=sorted(scene_mod.PALETTE), continuous=True,
            ),
            cluster_color_histogram_calculator,
        ),
        (
            descriptor(
                "ClusterLocationAnnotator", KIND_ANNOTATOR,
                inputs=["SceneCluster", "SemanticMapAnnotation"],
                outputs=["LocationAnnotation"], continuous=True,
            ),
            cluster_location_annotator,
        ),
        (
            descriptor(
                "Cluster3DGeometryAnnotator", KIND_ANNOTATOR,
                inputs=["SceneCluster", "PlaneAnnotation"],
                outputs=["PoseAnnotation", "SizeAnnotation"],
                capabilities=[depth], domain=["small", "big"], continuous=True,
            ),
            cluster_3d_geometry_annotator,
        ),
        (
            descriptor(
                "ClassificationAnnotator", KIND_ANNOTATOR,
                inputs=["SceneCluster", "SemanticColorAnnotation", "ShapeAnnotation", "SizeAnnotation"],
                outputs=["ClassificationAnnotation"],
                capabilities=[color, depth],
                domain=classifier.output_domain, continuous=True,
            ),
            classifier,
        ),
        (
            descriptor(
                "TransparentSegmentation", KIND_HYPOTHESIS_GENERATOR,
                inputs=["PlaneAnnotation"], outputs=["SceneCluster"],
                capabilities=[depth], cost=1.5,
            ),
            transparent_segmentation,
        ),
        (
            descriptor(
                "ImageSegmentation", KIND_HYPOTHESIS_GENERATOR,
                inputs=["PlaneAnnotation"], outputs=["SceneCluster"],
                capabilities=[color, depth], cost=1.5,
            ),
            image_segmentation,
        ),
        (
            descriptor(
                "RegionFilter", KIND_HYPOTHESIS_GENERATOR,
                inputs=["SemanticMapAnnotation"], outputs=["RegionOfInterest"],
                continuous=True,
            ),
            region_filter,
        ),
        (
            descriptor(
                "LineModStub", KIND_ANNOTATOR,
                inputs=["SceneCluster"], outputs=["LinemodAtom"],
                capabilities=[color, depth],
                domain=["Popcorn", "Pot", "PringlesSalt"],
            ),
            AtomEmitterStub("linemod"),
        ),
        (
            descriptor(
                "TextStub", KIND_ANNOTATOR,
                inputs=["SceneCluster"], outputs=["TextAtom"], capabilities=[color],
            ),
            AtomEmitterStub("text"),
        ),
        (
            descriptor(
                "LogoStub", KIND_ANNOTATOR,
                inputs=["SceneCluster"], outputs=["LogoAtom"], capabilities=[color],
            ),
            AtomEmitterStub("logo"),
        ),
        (
            # also attaches pose/location bookkeeping at runtime, but only
            # advertises the handle findings it is planned for
            descriptor(
                "HandleDetector", KIND_BOTH,
                inputs=["PlaneAnnotation", "SemanticMapAnnotation"],
                outputs=[
                    "SceneCluster", "ClassificationAnnotation", "PartAnnotation",
                    "PartOfAnnotation",
                ],
                capabilities=[depth], domain=["Handle"], cost=2.0,
            ),
            handle_detector,
        ),
        (
            descriptor(
                "SacModelAnnotator", KIND_ANNOTATOR,
                inputs=["SceneCluster", "PlaneAnnotation"],
                outputs=["SacModelAnnotation", "VolumeAnnotation"],
                capabilities=[depth], cost=2.0,
            ),
            sac_model_annotator,
        ),
        (
            descriptor(
                "ShelfScanner", KIND_BOTH,
                inputs=["PlaneAnnotation", "SemanticMapAnnotation"],
                outputs=["SceneCluster", "ShelfLineAnnotation", "ClassificationAnnotation"],
                capabilities=[depth], domain=["Shelf", "ShelfFloor"], cost=2.0,
            ),
            shelf_scanner,
        ),
        (
            descriptor(
                "SeparatorDetector", KIND_BOTH,
                inputs=["PlaneAnnotation", "SemanticMapAnnotation"],
                outputs=["SceneCluster", "SeparatorAnnotation"],
                capabilities=[depth], cost=2.0,
            ),
            separator_detector,
        ),
        (
            descriptor(
                "BarcodeStub", KIND_ANNOTATOR,
                inputs=["SceneCluster"], outputs=["BarcodeAtom"], capabilities=[color],
            ),
            barcode_stub,
        ),
        (
            descriptor(
                "VolumetricCounter", KIND_ANNOTATOR,
                inputs=["SceneCluster", "PoseAnnotation"], outputs=["CountAnnotation"],
                cost=2.0,
            ),
            volumetric_counter,
        ),
        (
            descriptor(
                "GraspPointsStub", KIND_ANNOTATOR,
                inputs=["SceneCluster", "PoseAnnotation"], outputs=["GraspAnnotation"],
                cost=2.0,
            ),
            grasp_points_stub,
        ),
    ]
    for desc, impl in entries:
        registry.register(desc, impl)
    return registry
