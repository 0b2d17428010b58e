"""The per-cycle blackboard: one observation plus an evolving hypothesis set.

A Cas is created fresh for every observation, enriched by annotators
during one pipeline run, consumed into the belief state, and discarded.
Annotations are stored as typed property bundles validated against the
knowledge base; contradictory annotations are allowed to coexist, and
resolving them is exclusively the consumers' business.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidObservation,
    RegionOutOfBounds,
    TypeCheckError,
    UnknownHypothesis,
    UnknownType,
)
from .geometry import Pose
from .ontology import KnowledgeBase, value_conforms


@dataclass
class Observation:
    """One synthetic RGB-D frame.

    `color` is (height, width, 3) in [0, 1]; `depth` is (height, width)
    in millimeters with 0 meaning no valid return (background beyond
    range, or a transparent surface).
    """

    timestamp: int
    width: int
    height: int
    color: np.ndarray
    depth: np.ndarray
    camera_pose: Pose = Pose()
    blur_score: float = 0.0
    source_episode: str = ""

    def validate(self):
        if self.color.shape != (self.height, self.width, 3):
            raise InvalidObservation(
                f"color raster is {self.color.shape}, expected "
                f"{(self.height, self.width, 3)}"
            )
        if self.depth.shape != (self.height, self.width):
            raise InvalidObservation(
                f"depth raster is {self.depth.shape}, expected "
                f"{(self.height, self.width)}"
            )
        if not self.camera_pose.is_normalized():
            raise InvalidObservation("camera pose quaternion is not unit length")
        if self.blur_score < 0:
            raise InvalidObservation("blur score must be non-negative")

    def pixel_count(self) -> int:
        return self.width * self.height


def region_from_mask(mask: np.ndarray) -> frozenset:
    """Row-major pixel indices of the true entries of a (H, W) mask."""
    return frozenset(int(i) for i in np.flatnonzero(mask.ravel()))


def region_centroid(region: frozenset, width: int) -> tuple:
    """(x, y) centroid of a pixel-index region."""
    xs = [i % width for i in region]
    ys = [i // width for i in region]
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def region_bbox(region: frozenset, width: int) -> tuple:
    """(x0, y0, x1, y1) inclusive bounding box of a region."""
    xs = [i % width for i in region]
    ys = [i // width for i in region]
    return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class Annotation:
    """One typed annotation: a fragment individual attached to a hypothesis."""

    type_name: str
    properties: tuple = ()  # ((name, value), ...)

    @classmethod
    def make(cls, type_name: str, **properties) -> "Annotation":
        return cls(type_name, tuple(properties.items()))

    def get(self, prop: str, default=None):
        for name, value in self.properties:
            if name == prop:
                return value
        return default

    def as_dict(self) -> dict:
        return dict(self.properties)


@dataclass
class Hypothesis:
    id: str
    region: frozenset
    annotations: list = field(default_factory=list)

    def annotations_of(self, kb: KnowledgeBase, type_name: str) -> list:
        return [
            a
            for a in self.annotations
            if kb.tbox.has_class(a.type_name) and kb.is_subclass_of(a.type_name, type_name)
        ]


@dataclass
class Cas:
    observation: Observation
    hypotheses: list = field(default_factory=list)
    query: object = None
    scene_annotations: list = field(default_factory=list)
    _next_id: int = 0

    def hypothesis(self, hyp_id: str) -> Hypothesis:
        for hyp in self.hypotheses:
            if hyp.id == hyp_id:
                return hyp
        raise UnknownHypothesis(hyp_id)

    def annotation_types_present(self, kb: KnowledgeBase) -> set:
        present = {a.type_name for a in self.scene_annotations}
        for hyp in self.hypotheses:
            present.update(a.type_name for a in hyp.annotations)
        return present


def init_cas(obs: Observation) -> Cas:
    """Collection-reader step: a fresh blackboard with no hypotheses."""
    obs.validate()
    return Cas(observation=obs)


def add_hypothesis(cas: Cas, region) -> str:
    region = frozenset(int(i) for i in region)
    if not region:
        raise RegionOutOfBounds("a hypothesis region may not be empty")
    limit = cas.observation.pixel_count()
    bad = [i for i in region if i < 0 or i >= limit]
    if bad:
        raise RegionOutOfBounds(f"pixel indices {sorted(bad)[:4]} outside raster")
    hyp_id = f"h{cas._next_id}"
    cas._next_id += 1
    cas.hypotheses.append(Hypothesis(id=hyp_id, region=region))
    return hyp_id


def find_hypothesis_by_region(cas: Cas, region) -> str | None:
    region = frozenset(int(i) for i in region)
    for hyp in cas.hypotheses:
        if hyp.region == region:
            return hyp.id
    return None


def _check_annotation(kb: KnowledgeBase, annotation: Annotation):
    if not kb.tbox.has_class(annotation.type_name):
        raise TypeCheckError(
            f"annotation type '{annotation.type_name}' is not declared",
            property_name=annotation.type_name,
        )
    for prop_name, value in annotation.properties:
        prop = kb.tbox.properties.get(prop_name)
        if prop is None:
            raise TypeCheckError(
                f"property '{prop_name}' is not declared", property_name=prop_name
            )
        if not kb.is_subclass_of(annotation.type_name, prop.domain):
            raise TypeCheckError(
                f"property '{prop_name}' does not apply to {annotation.type_name}",
                property_name=prop_name,
            )
        if not value_conforms(kb.tbox, prop.range, value):
            raise TypeCheckError(
                f"value {value!r} does not fit range '{prop.range}' of "
                f"property '{prop_name}'",
                property_name=prop_name,
            )
    _check_cardinality(kb, annotation)


def _check_cardinality(kb: KnowledgeBase, annotation: Annotation):
    names = [n for n, _ in annotation.properties]
    for prop in kb.tbox.properties.values():
        if prop.cardinality is None:
            continue
        if not kb.is_subclass_of(annotation.type_name, prop.domain):
            continue
        kind, n = prop.cardinality
        count = names.count(prop.name)
        ok = (
            (kind == "exact" and count == n)
            or (kind == "min" and count >= n)
            or (kind == "max" and count <= n)
        )
        if not ok:
            raise TypeCheckError(
                f"{annotation.type_name} needs {kind} {n} '{prop.name}' "
                f"value(s), got {count}",
                property_name=prop.name,
            )


def annotate(cas: Cas, hyp_id: str, annotation, kb: KnowledgeBase):
    """Merge one annotation (or a list of them) into a hypothesis.

    Existing annotations are never touched; an annotation equal by value
    to one already present is dropped, so re-running an annotator cannot
    duplicate its results.
    """
    hyp = cas.hypothesis(hyp_id)
    items = annotation if isinstance(annotation, (list, tuple)) else [annotation]
    for item in items:
        _check_annotation(kb, item)
        if item not in hyp.annotations:
            hyp.annotations.append(item)


def annotate_scene(cas: Cas, annotation: Annotation, kb: KnowledgeBase):
    """Attach an observation-level annotation (plane, semantic map, ROI)."""
    _check_annotation(kb, annotation)
    if annotation not in cas.scene_annotations:
        cas.scene_annotations.append(annotation)


def query_annotations(cas: Cas, hyp_id: str, type_name: str, kb: KnowledgeBase) -> list:
    if not kb.tbox.has_class(type_name):
        raise UnknownType(type_name)
    return cas.hypothesis(hyp_id).annotations_of(kb, type_name)


def scene_annotations_of(cas: Cas, type_name: str, kb: KnowledgeBase) -> list:
    return [
        a
        for a in cas.scene_annotations
        if kb.tbox.has_class(a.type_name) and kb.is_subclass_of(a.type_name, type_name)
    ]


# --- dump format -----------------------------------------------------------------

def encode_value(value):
    if isinstance(value, Pose):
        return {"pose": list(value.as_tuple())}
    if isinstance(value, tuple):
        return {"vec": [float(v) for v in value]}
    return value


def decode_value(value):
    if isinstance(value, dict) and "pose" in value:
        return Pose.from_sequence(value["pose"])
    if isinstance(value, dict) and "vec" in value:
        return tuple(float(v) for v in value["vec"])
    return value


def _annotation_to_json(annotation: Annotation) -> dict:
    return {
        "type": annotation.type_name,
        "properties": [[n, encode_value(v)] for n, v in annotation.properties],
    }


def _annotation_from_json(data: dict) -> Annotation:
    return Annotation(
        data["type"],
        tuple((n, decode_value(v)) for n, v in data["properties"]),
    )


def cas_to_dict(cas: Cas) -> dict:
    obs = cas.observation
    return {
        "observation": {
            "timestamp": obs.timestamp,
            "width": obs.width,
            "height": obs.height,
            "color": [[float(c) for c in px] for px in obs.color.reshape(-1, 3)],
            "depth": [float(d) for d in obs.depth.ravel()],
            "cameraPose": list(obs.camera_pose.as_tuple()),
            "blurScore": float(obs.blur_score),
            "sourceEpisode": obs.source_episode,
        },
        "sceneAnnotations": [_annotation_to_json(a) for a in cas.scene_annotations],
        "hypotheses": [
            {
                "id": hyp.id,
                "region": sorted(hyp.region),
                "annotations": [_annotation_to_json(a) for a in hyp.annotations],
            }
            for hyp in cas.hypotheses
        ],
    }


def cas_from_dict(data: dict) -> Cas:
    od = data["observation"]
    obs = Observation(
        timestamp=od["timestamp"],
        width=od["width"],
        height=od["height"],
        color=np.array(od["color"], dtype=float).reshape(od["height"], od["width"], 3),
        depth=np.array(od["depth"], dtype=float).reshape(od["height"], od["width"]),
        camera_pose=Pose.from_sequence(od["cameraPose"]),
        blur_score=od["blurScore"],
        source_episode=od["sourceEpisode"],
    )
    cas = init_cas(obs)
    for ann in data.get("sceneAnnotations", []):
        cas.scene_annotations.append(_annotation_from_json(ann))
    for hd in data["hypotheses"]:
        hyp = Hypothesis(
            id=hd["id"],
            region=frozenset(hd["region"]),
            annotations=[_annotation_from_json(a) for a in hd["annotations"]],
        )
        cas.hypotheses.append(hyp)
    numbers = [int(h.id[1:]) for h in cas.hypotheses if h.id[1:].isdigit()]
    cas._next_id = max(numbers, default=-1) + 1
    return cas


def dump_cas(cas: Cas) -> str:
    return json.dumps(cas_to_dict(cas), indent=2)


def load_cas(text: str) -> Cas:
    return cas_from_dict(json.loads(text))


def cas_equal(a: Cas, b: Cas) -> bool:
    return cas_to_dict(a) == cas_to_dict(b)
