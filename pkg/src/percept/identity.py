"""Persistent belief state and object identity resolution.

The belief state maps stable object ids onto annotation bundles carried
across cycles. Each cycle's hypotheses are matched against existing
objects by a weighted per-annotation distance (pose, color histogram,
class and shape), greedily and one-to-one; unmatched hypotheses found a
new object. Knowledge-based filters cut false duplicates before matching:
frames seen under camera motion or blur are skipped, near-identical
successive frames are skipped, and hypotheses outside the task's regions
of interest are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .cas import Annotation, Hypothesis, encode_value, region_centroid
from .geometry import Pose


@dataclass
class FilterConfig:
    roi_enabled: bool = True
    task_regions: tuple = ()
    static_skip_enabled: bool = True
    static_epsilon_mm: float = 2.0
    motion_enabled: bool = True
    max_translation_m: float = 0.2
    max_rotation_rad: float = 0.3
    blur_threshold: float = 100.0

    @classmethod
    def all_off(cls) -> "FilterConfig":
        return cls(roi_enabled=False, static_skip_enabled=False, motion_enabled=False)

    def with_task_regions(self, regions) -> "FilterConfig":
        return replace(self, task_regions=tuple(regions))


@dataclass
class MatchConfig:
    pose_weight: float = 1.0
    pose_scale_mm: float = 500.0
    histogram_weight: float = 1.0
    class_weight: float = 1.0
    shape_weight: float = 1.0
    threshold: float = 0.5

    def validate(self):
        weights = (self.pose_weight, self.histogram_weight, self.class_weight, self.shape_weight)
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ValueError("match weights must be non-negative with at least one positive")


@dataclass
class FrameMeta:
    tick: int
    camera_pose: Pose
    blur_score: float
    depth: np.ndarray | None = None
    width: int = 0
    semantic_regions: list = field(default_factory=list)


class BeliefObject:
    def __init__(self, object_id: str, tick: int):
        self.id = object_id
        self.first_seen = tick
        self.last_seen = tick
        self.latest_by_type: dict[str, Annotation] = {}
        self.history: list = []  # (tick, Annotation)
        self.lineage: list = []  # (tick, hypothesis id)

    def latest(self, type_name: str) -> Annotation | None:
        return self.latest_by_type.get(type_name)

    def absorb(self, hypothesis: Hypothesis, tick: int):
        for ann in hypothesis.annotations:
            self.latest_by_type[ann.type_name] = ann
            self.history.append((tick, ann))
        self.last_seen = tick
        self.lineage.append((tick, hypothesis.id))

    @property
    def class_label(self) -> str | None:
        ann = self.latest("ClassificationAnnotation")
        return ann.get("classLabel") if ann else None


class BeliefState:
    def __init__(self):
        self._objects: dict[str, BeliefObject] = {}
        self._counter = 0

    def __len__(self):
        return len(self._objects)

    def ids(self) -> list[str]:
        return list(self._objects)

    def objects(self) -> list[BeliefObject]:
        return list(self._objects.values())

    def get(self, object_id: str) -> BeliefObject | None:
        return self._objects.get(object_id)

    def create(self, hypothesis: Hypothesis, tick: int) -> BeliefObject:
        self._counter += 1
        obj = BeliefObject(f"obj_{self._counter}", tick)
        obj.absorb(hypothesis, tick)
        self._objects[obj.id] = obj
        return obj

    def to_dict(self) -> dict:
        return {
            "objects": [
                {
                    "id": obj.id,
                    "class": obj.class_label,
                    "annotations": [
                        {
                            "type": ann.type_name,
                            "properties": [[n, encode_value(v)] for n, v in ann.properties],
                        }
                        for ann in obj.latest_by_type.values()
                    ],
                    "firstSeen": obj.first_seen,
                    "lastSeen": obj.last_seen,
                }
                for obj in self._objects.values()
            ]
        }

    def dump(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# --- frame-level filters -------------------------------------------------------------

def frame_filter_reason(
    filters: FilterConfig,
    meta: FrameMeta,
    prev_pose: Pose | None,
    prev_depth: np.ndarray | None,
) -> str | None:
    """Why this frame should be skipped, or None to process it."""
    if filters.motion_enabled and prev_pose is not None:
        if meta.camera_pose.translation_distance(prev_pose) > filters.max_translation_m:
            return "camera-motion"
        if meta.camera_pose.rotation_distance(prev_pose) > filters.max_rotation_rad:
            return "camera-motion"
    if filters.motion_enabled and meta.blur_score > filters.blur_threshold:
        return "blur"
    if (
        filters.static_skip_enabled
        and prev_depth is not None
        and meta.depth is not None
        and meta.depth.shape == prev_depth.shape
    ):
        if float(np.abs(meta.depth - prev_depth).mean()) < filters.static_epsilon_mm:
            return "static"
    return None


def _inside_task_regions(hyp: Hypothesis, filters: FilterConfig, meta: FrameMeta) -> bool:
    if not filters.roi_enabled or not filters.task_regions:
        return True
    cx, cy = region_centroid(hyp.region, meta.width)
    for region in meta.semantic_regions:
        if region.label in filters.task_regions and region.contains(cx, cy):
            return True
    return False


# --- distances -------------------------------------------------------------------------

def _histogram_distance(h1, h2) -> float:
    a = np.asarray(h1, dtype=float)
    b = np.asarray(h2, dtype=float)
    if a.shape != b.shape:
        return 1.0
    return float(1.0 - np.minimum(a, b).sum() / max(a.sum(), b.sum(), 1e-12))


def hypothesis_distance(obj: BeliefObject, hyp: Hypothesis, cfg: MatchConfig) -> float | None:
    """Weighted average over the annotation metrics both sides carry.

    None when no metric applies (nothing comparable, so no match).
    """
    by_type = {}
    for ann in hyp.annotations:
        by_type.setdefault(ann.type_name, ann)

    total, weight_sum = 0.0, 0.0

    obj_pose = obj.latest("PoseAnnotation")
    hyp_pose = by_type.get("PoseAnnotation")
    if cfg.pose_weight > 0 and obj_pose is not None and hyp_pose is not None:
        mm = obj_pose.get("pose").translation_distance(hyp_pose.get("pose")) * 1000.0
        total += cfg.pose_weight * min(mm / cfg.pose_scale_mm, 1.0)
        weight_sum += cfg.pose_weight

    obj_color = obj.latest("SemanticColorAnnotation")
    hyp_color = by_type.get("SemanticColorAnnotation")
    if cfg.histogram_weight > 0 and obj_color is not None and hyp_color is not None:
        total += cfg.histogram_weight * _histogram_distance(
            obj_color.get("histogram", ()), hyp_color.get("histogram", ())
        )
        weight_sum += cfg.histogram_weight

    obj_class = obj.latest("ClassificationAnnotation")
    hyp_class = by_type.get("ClassificationAnnotation")
    if cfg.class_weight > 0 and obj_class is not None and hyp_class is not None:
        mismatch = 0.0 if obj_class.get("classLabel") == hyp_class.get("classLabel") else 1.0
        total += cfg.class_weight * mismatch
        weight_sum += cfg.class_weight

    obj_shape = obj.latest("ShapeAnnotation")
    hyp_shape = by_type.get("ShapeAnnotation")
    if cfg.shape_weight > 0 and obj_shape is not None and hyp_shape is not None:
        mismatch = 0.0 if obj_shape.get("shape") == hyp_shape.get("shape") else 1.0
        total += cfg.shape_weight * mismatch
        weight_sum += cfg.shape_weight

    if weight_sum == 0.0:
        return None
    return total / weight_sum


def _promotable(hyp: Hypothesis) -> bool:
    """Belief objects must carry a pose or a location."""
    return any(
        ann.type_name in ("PoseAnnotation", "LocationAnnotation")
        for ann in hyp.annotations
    )


def resolve_identity(
    hypotheses,
    belief: BeliefState,
    cfg: MatchConfig,
    filters: FilterConfig,
    meta: FrameMeta,
    prev_pose: Pose | None = None,
    prev_depth: np.ndarray | None = None,
):
    """Match one frame's hypotheses into the belief state.

    Returns (belief, skip_reason); when the frame-level filters reject
    the frame the belief is returned untouched.
    """
    cfg.validate()
    reason = frame_filter_reason(filters, meta, prev_pose, prev_depth)
    if reason is not None:
        return belief, reason

    candidates = [h for h in hypotheses if _inside_task_regions(h, filters, meta)]

    pairs = []
    for hyp in candidates:
        for obj in belief.objects():
            d = hypothesis_distance(obj, hyp, cfg)
            if d is not None and d <= cfg.threshold:
                pairs.append((d, obj.id, hyp.id))
    pairs.sort()

    matched_objects: set = set()
    matched_hyps: set = set()
    assignment = {}
    for d, obj_id, hyp_id in pairs:
        if obj_id in matched_objects or hyp_id in matched_hyps:
            continue
        matched_objects.add(obj_id)
        matched_hyps.add(hyp_id)
        assignment[hyp_id] = obj_id

    for hyp in candidates:
        if hyp.id in assignment:
            belief.get(assignment[hyp.id]).absorb(hyp, meta.tick)
        elif _promotable(hyp):
            belief.create(hyp, meta.tick)
    return belief, None
