"""Synthetic scene ground truth and the sensor model that renders it.

A scene document lists supporting planes, objects with simple footprint
primitives, and the semantic region map of the environment. Rendering
produces a registered RGB-D raster: plane pixels at plane depth, object
pixels raised by their height, transparent objects as invalid (zero)
depth, plus seeded Gaussian color noise. Pixels outside any plane carry
no depth return.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Pose

DEFAULT_MM_PER_PIXEL = 5.0
DEFAULT_NOISE_SIGMA = 4.0 / 255.0

#: semantic color vocabulary used by scenes and by the color annotator
PALETTE = {
    "red": (0.80, 0.10, 0.10),
    "green": (0.10, 0.60, 0.15),
    "blue": (0.15, 0.20, 0.70),
    "yellow": (0.85, 0.80, 0.10),
    "black": (0.05, 0.05, 0.05),
    "white": (0.95, 0.95, 0.95),
    "gray": (0.45, 0.45, 0.45),
    "orange": (0.90, 0.50, 0.10),
    "magenta": (0.80, 0.10, 0.70),
    "brown": (0.45, 0.30, 0.15),
}

BACKGROUND_COLOR = (0.20, 0.20, 0.22)
PLANE_COLOR = (0.65, 0.65, 0.65)


@dataclass(frozen=True)
class PlaneSpec:
    label: str
    region: tuple  # (x, y, w, h) in pixels
    depth_mm: float


@dataclass(frozen=True)
class SceneObject:
    id: str
    class_label: str
    shape: str  # box | round | flat
    color_label: str
    footprint: tuple  # (kind, x, y, w, h) with kind rect | ellipse
    height_mm: float
    transparent: bool = False
    location_label: str = ""
    placed_on: str | None = None


@dataclass(frozen=True)
class RegionSpec:
    label: str
    rect: tuple  # (x, y, w, h)

    @property
    def kind(self) -> str:
        """The region family, e.g. drawer#1 -> drawer."""
        return self.label.split("#")[0]

    def contains(self, x: float, y: float) -> bool:
        rx, ry, rw, rh = self.rect
        return rx <= x < rx + rw and ry <= y < ry + rh


@dataclass
class SceneDocument:
    width: int
    height: int
    mm_per_pixel: float = DEFAULT_MM_PER_PIXEL
    planes: list = field(default_factory=list)
    objects: list = field(default_factory=list)
    semantic_regions: list = field(default_factory=list)

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def validate(self):
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise ValueError(f"duplicate scene object id '{obj.id}'")
            seen.add(obj.id)
            mask = footprint_mask(obj, self.height, self.width)
            if not mask.any():
                raise ValueError(f"object '{obj.id}' has an empty footprint")
            kind, x, y, w, h = obj.footprint
            if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
                raise ValueError(f"object '{obj.id}' footprint leaves the raster")


def _rect_mask(height, width, rect) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    x, y, w, h = rect
    mask[int(y):int(y + h), int(x):int(x + w)] = True
    return mask


def footprint_mask(obj: SceneObject, height: int, width: int) -> np.ndarray:
    kind, x, y, w, h = obj.footprint
    if kind == "rect":
        return _rect_mask(height, width, (x, y, w, h))
    if kind == "ellipse":
        cx = x + w / 2.0 - 0.5
        cy = y + h / 2.0 - 0.5
        rx = max(w / 2.0, 0.5)
        ry = max(h / 2.0, 0.5)
        ys, xs = np.mgrid[0:height, 0:width]
        return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    raise ValueError(f"unknown footprint kind '{kind}'")


def footprint_region(obj: SceneObject, height: int, width: int) -> frozenset:
    return frozenset(int(i) for i in np.flatnonzero(footprint_mask(obj, height, width).ravel()))


def plane_under(scene: SceneDocument, obj: SceneObject) -> PlaneSpec:
    for plane in scene.planes:
        if plane.label == obj.location_label:
            return plane
    kind, x, y, w, h = obj.footprint
    cx, cy = x + w / 2.0, y + h / 2.0
    for plane in scene.planes:
        px, py, pw, ph = plane.region
        if px <= cx < px + pw and py <= cy < py + ph:
            return plane
    if not scene.planes:
        raise ValueError("scene has no supporting plane")
    return max(scene.planes, key=lambda p: p.region[2] * p.region[3])


def surface_depth(scene: SceneDocument, obj: SceneObject) -> float:
    """Depth of the top surface of an object, stacking included."""
    base = plane_under(scene, obj).depth_mm
    if obj.placed_on:
        under = scene.object_by_id(obj.placed_on)
        base = surface_depth(scene, under)
    return base - obj.height_mm


def render_observation(
    scene: SceneDocument,
    camera_pose: Pose = Pose(),
    blur_score: float = 0.0,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    seed: int = 0,
    timestamp: int = 0,
    source_episode: str = "",
):
    """Deterministic synthetic RGB-D frame of a scene.

    The same scene, pose and seed always produce identical rasters.
    Depth carries no noise; color receives per-channel Gaussian noise of
    the given sigma (clipped to [0, 1]).
    """
    from .cas import Observation  # local import to avoid a module cycle

    h, w = scene.height, scene.width
    color = np.tile(np.array(BACKGROUND_COLOR), (h, w, 1))
    depth = np.zeros((h, w), dtype=float)

    for plane in scene.planes:
        mask = _rect_mask(h, w, plane.region)
        depth[mask] = plane.depth_mm
        color[mask] = PLANE_COLOR

    for obj in scene.objects:
        mask = footprint_mask(obj, h, w)
        color[mask] = PALETTE[obj.color_label]
        depth[mask] = 0.0 if obj.transparent else surface_depth(scene, obj)

    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        color = color + rng.normal(0.0, noise_sigma, size=color.shape)
        color = np.clip(color, 0.0, 1.0)

    obs = Observation(
        timestamp=timestamp,
        width=w,
        height=h,
        color=color,
        depth=depth,
        camera_pose=camera_pose,
        blur_score=blur_score,
        source_episode=source_episode,
    )
    obs.validate()
    return obs


def ground_truth_at(scene: SceneDocument, region: frozenset) -> SceneObject | None:
    """The scene object whose footprint overlaps the region most."""
    best, best_overlap = None, 0
    for obj in scene.objects:
        overlap = len(footprint_region(obj, scene.height, scene.width) & region)
        if overlap > best_overlap:
            best, best_overlap = obj, overlap
    return best


# --- episode ---------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    scene: SceneDocument
    camera_pose: Pose
    blur_score: float
    tick: int


@dataclass
class Episode:
    name: str
    frames: list = field(default_factory=list)
    task_regions: list = field(default_factory=list)

    def validate(self):
        ticks = [f.tick for f in self.frames]
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise ValueError("episode ticks must be strictly increasing")


# --- JSON files --------------------------------------------------------------------

def scene_to_dict(scene: SceneDocument) -> dict:
    return {
        "width": scene.width,
        "height": scene.height,
        "millimetersPerPixel": scene.mm_per_pixel,
        "supportingPlanes": [
            {"label": p.label, "region": list(p.region), "depthMillimeters": p.depth_mm}
            for p in scene.planes
        ],
        "objects": [
            {
                "id": o.id,
                "classLabel": o.class_label,
                "shapePrimitive": o.shape,
                "colorLabel": o.color_label,
                "footprint": {
                    "kind": o.footprint[0],
                    "x": o.footprint[1],
                    "y": o.footprint[2],
                    "w": o.footprint[3],
                    "h": o.footprint[4],
                },
                "heightMillimeters": o.height_mm,
                "transparent": o.transparent,
                "locationLabel": o.location_label,
                **({"placedOn": o.placed_on} if o.placed_on else {}),
            }
            for o in scene.objects
        ],
        "semanticRegions": [
            {"label": r.label, "rect": list(r.rect)} for r in scene.semantic_regions
        ],
    }


def scene_from_dict(data: dict) -> SceneDocument:
    scene = SceneDocument(
        width=data["width"],
        height=data["height"],
        mm_per_pixel=data.get("millimetersPerPixel", DEFAULT_MM_PER_PIXEL),
        planes=[
            PlaneSpec(p["label"], tuple(p["region"]), p["depthMillimeters"])
            for p in data.get("supportingPlanes", [])
        ],
        objects=[
            SceneObject(
                id=o["id"],
                class_label=o["classLabel"],
                shape=o["shapePrimitive"],
                color_label=o["colorLabel"],
                footprint=(
                    o["footprint"]["kind"],
                    o["footprint"]["x"],
                    o["footprint"]["y"],
                    o["footprint"]["w"],
                    o["footprint"]["h"],
                ),
                height_mm=o["heightMillimeters"],
                transparent=o.get("transparent", False),
                location_label=o.get("locationLabel", ""),
                placed_on=o.get("placedOn"),
            )
            for o in data.get("objects", [])
        ],
        semantic_regions=[
            RegionSpec(r["label"], tuple(r["rect"])) for r in data.get("semanticRegions", [])
        ],
    )
    scene.validate()
    return scene


def load_scene(path) -> SceneDocument:
    return scene_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def episode_to_dict(episode: Episode) -> dict:
    return {
        "name": episode.name,
        "taskRegions": list(episode.task_regions),
        "frames": [
            {
                "scene": scene_to_dict(f.scene),
                "cameraPose": list(f.camera_pose.as_tuple()),
                "blurScore": f.blur_score,
                "tick": f.tick,
            }
            for f in episode.frames
        ],
    }


def episode_from_dict(data: dict, base_dir: Path | None = None) -> Episode:
    frames = []
    scene_cache: dict[str, SceneDocument] = {}
    for fd in data.get("frames", []):
        ref = fd["scene"]
        if isinstance(ref, str):
            path = (base_dir / ref) if base_dir else Path(ref)
            key = str(path)
            if key not in scene_cache:
                scene_cache[key] = load_scene(path)
            scene = scene_cache[key]
        else:
            scene = scene_from_dict(ref)
        frames.append(
            Frame(
                scene=scene,
                camera_pose=Pose.from_sequence(fd["cameraPose"]),
                blur_score=fd["blurScore"],
                tick=fd["tick"],
            )
        )
    episode = Episode(
        name=data.get("name", ""),
        frames=frames,
        task_regions=list(data.get("taskRegions", [])),
    )
    episode.validate()
    return episode


def load_episode(path) -> Episode:
    path = Path(path)
    return episode_from_dict(
        json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent
    )
