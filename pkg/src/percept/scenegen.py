"""Authoring of the shipped synthetic scenes and episodes.

Everything here is deterministic: the kitchen and retail demo scenes are
laid out by hand, and the pick-and-place episodes for identity-resolution
experiments are generated from a seed. Run `python -m percept.scenegen`
to rewrite the JSON files under percept/data/.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import Pose
from .scene import (
    Episode,
    Frame,
    PlaneSpec,
    RegionSpec,
    SceneDocument,
    SceneObject,
    episode_to_dict,
    scene_to_dict,
)

DATA_DIR = Path(__file__).parent / "data"


def _obj(oid, cls, shape, color, footprint, height, location, transparent=False, placed_on=None):
    return SceneObject(
        id=oid,
        class_label=cls,
        shape=shape,
        color_label=color,
        footprint=footprint,
        height_mm=height,
        transparent=transparent,
        location_label=location,
        placed_on=placed_on,
    )


# --- kitchen -------------------------------------------------------------------------

def kitchen_scene() -> SceneDocument:
    """Breakfast counter: nine objects with mixed perceptual character.

    The knife is too flat for depth clustering and the glass gives no
    depth return at all, so no single segmentation recovers everything.
    """
    counter = "counter_top#1"
    scene = SceneDocument(
        width=128,
        height=96,
        planes=[PlaneSpec(counter, (4, 12, 120, 72), 1000.0)],
        objects=[
            _obj("cereal_box_1", "KnusperHonig", "box", "green", ("rect", 10, 20, 14, 18), 220.0, counter),
            _obj("cup_1", "Cup", "round", "red", ("ellipse", 34, 20, 12, 12), 90.0, counter),
            _obj("cup_2", "Cup", "round", "red", ("ellipse", 56, 20, 12, 12), 95.0, counter),
            _obj("pot_1", "Pot", "round", "gray", ("ellipse", 76, 18, 16, 16), 120.0, counter),
            _obj("plate_1", "Plate", "round", "white", ("ellipse", 100, 20, 20, 20), 25.0, counter),
            _obj("bowl_1", "Bowl", "round", "blue", ("ellipse", 12, 48, 14, 14), 60.0, counter),
            _obj("spatula_1", "Spatula", "flat", "blue", ("rect", 36, 52, 20, 4), 18.0, counter),
            _obj("knife_1", "Knife", "flat", "black", ("rect", 66, 52, 18, 3), 6.0, counter),
            _obj("glass_1", "DrinkingGlass", "round", "gray", ("ellipse", 96, 50, 10, 10), 110.0, counter, transparent=True),
        ],
        semantic_regions=[RegionSpec(counter, (4, 12, 120, 72))],
    )
    scene.validate()
    return scene


def kitchen_drawer_scene() -> SceneDocument:
    """Drawer front with two protruding handles."""
    front = "drawer_front#1"
    scene = SceneDocument(
        width=128,
        height=96,
        planes=[PlaneSpec(front, (30, 20, 68, 56), 800.0)],
        objects=[
            _obj("handle_1", "Handle", "box", "black", ("rect", 44, 38, 2, 10), 25.0, front),
            _obj("handle_2", "Handle", "box", "black", ("rect", 80, 38, 2, 10), 25.0, front),
        ],
        semantic_regions=[RegionSpec("drawer#1", (30, 20, 68, 56))],
    )
    scene.validate()
    return scene


def kitchen_episode() -> Episode:
    """Two counter views, then the camera turns to the drawer front."""
    counter = kitchen_scene()
    drawer = kitchen_drawer_scene()
    episode = Episode(
        name="kitchen",
        frames=[
            Frame(counter, Pose(), 5.0, 0),
            Frame(counter, Pose(), 5.0, 1),
            Frame(drawer, Pose(x=0.6, qz=0.3826834323650898, qw=0.9238795325112867), 5.0, 2),
        ],
        task_regions=["counter_top#1", "drawer#1"],
    )
    episode.validate()
    return episode


# --- chemistry lab -------------------------------------------------------------------

def chemlab_scene() -> SceneDocument:
    bench = "lab_bench#1"
    scene = SceneDocument(
        width=128,
        height=96,
        planes=[PlaneSpec(bench, (4, 12, 120, 72), 900.0)],
        objects=[
            _obj("pipette_1", "Pipette", "flat", "blue", ("rect", 10, 20, 20, 4), 8.0, bench),
            _obj("tip_box_1", "PipetteTipBox", "box", "yellow", ("rect", 40, 18, 14, 10), 40.0, bench),
            _obj("bottle_1", "ReagentBottle", "round", "green", ("ellipse", 64, 16, 14, 14), 200.0, bench),
            _obj("rack_1", "TubeRack", "box", "brown", ("rect", 88, 18, 24, 12), 80.0, bench),
            _obj("tube_1", "Tube", "round", "white", ("ellipse", 90, 40, 4, 4), 45.0, bench),
            _obj("tube_2", "Tube", "round", "white", ("ellipse", 98, 40, 4, 4), 45.0, bench),
            _obj("flask_1", "Flask", "round", "gray", ("ellipse", 14, 50, 12, 12), 95.0, bench, transparent=True),
            _obj("trash_1", "TrashBox", "box", "black", ("rect", 40, 48, 16, 12), 100.0, bench),
            _obj("heater_1", "Heater", "box", "orange", ("rect", 70, 48, 14, 10), 60.0, bench),
        ],
        semantic_regions=[RegionSpec(bench, (4, 12, 120, 72))],
    )
    scene.validate()
    return scene


# --- retail --------------------------------------------------------------------------

def retail_scene() -> SceneDocument:
    """Frontal shelf view: three shelf floors, product facings, separators.

    Facing widths are authored in pixels so that the metric extents come
    out at 0.25 m (ANXXXX) and 0.24 m (BNYYYY) with 5 mm per pixel.
    """
    shelf = "shelf#1"
    scene = SceneDocument(
        width=128,
        height=192,
        planes=[PlaneSpec("shelf_back#1", (4, 8, 120, 170), 1200.0)],
        objects=[
            _obj("floor_1", "ShelfFloor", "box", "white", ("rect", 4, 20, 120, 5), 400.0, shelf),
            _obj("floor_2", "ShelfFloor", "box", "white", ("rect", 4, 90, 120, 5), 400.0, shelf),
            _obj("floor_3", "ShelfFloor", "box", "white", ("rect", 4, 160, 120, 5), 400.0, shelf),
            _obj("facing_a", "ANXXXX", "box", "yellow", ("rect", 10, 30, 50, 14), 180.0, shelf),
            _obj("sep_1", "Separator", "box", "gray", ("rect", 64, 30, 1, 14), 350.0, shelf),
            _obj("facing_b", "BNYYYY", "box", "red", ("rect", 70, 100, 48, 14), 180.0, shelf),
            _obj("sep_2", "Separator", "box", "gray", ("rect", 44, 100, 1, 14), 350.0, shelf),
            _obj("facing_c", "CNZZZZ", "box", "blue", ("rect", 10, 100, 30, 14), 180.0, shelf),
        ],
        semantic_regions=[RegionSpec(shelf, (4, 8, 120, 170))],
    )
    scene.validate()
    return scene


def retail_scan_episode() -> Episode:
    """Ten frames of the shelf with slight camera jitter."""
    scene = retail_scene()
    frames = [
        Frame(scene, Pose(x=round(0.002 * (tick % 3), 6)), 5.0, tick)
        for tick in range(10)
    ]
    episode = Episode(name="retail_scan", frames=frames, task_regions=["shelf#1"])
    episode.validate()
    return episode


# --- pick-and-place episodes for identity resolution -----------------------------------

#: appearance cycle for generated objects: (class, shape, color, height)
_APPEARANCES = [
    ("Cup", "round", "red", 90.0),
    ("KnusperHonig", "box", "green", 220.0),
    ("Bowl", "round", "blue", 60.0),
    ("Pot", "round", "gray", 120.0),
    ("Plate", "round", "white", 25.0),
    ("Spatula", "flat", "blue", 18.0),
    ("Spoon", "flat", "orange", 16.0),
    ("MondaminPancakeMix", "box", "yellow", 180.0),
]

_TRANSIT_COLORS = ["magenta", "orange", "brown", "black", "white", "yellow", "green", "blue", "red", "gray"]

_GRID_COLS = 8
_GRID_ROWS = 4
_SLOT_SIZE = 8
_COUNTER = ("counter_top#1", (4, 12, 120, 72))
_SIDE = ("side_table#1", (4, 86, 56, 9))


def _slot_rect(slot: int) -> tuple:
    col, row = slot % _GRID_COLS, slot // _GRID_COLS
    return (8 + 14 * col, 16 + 14 * row, _SLOT_SIZE, _SLOT_SIZE)


def _pick_place_scene(positions: dict, transit=None) -> SceneDocument:
    """positions: object id -> (appearance index, slot)."""
    counter_label, counter_rect = _COUNTER
    side_label, side_rect = _SIDE
    objects = []
    for oid, (look, slot) in positions.items():
        cls, shape, color, height = _APPEARANCES[look % len(_APPEARANCES)]
        x, y, w, h = _slot_rect(slot)
        kind = "rect" if shape in ("box", "flat") else "ellipse"
        objects.append(_obj(oid, cls, shape, color, (kind, x, y, w, h), height, counter_label))
    objects.append(
        _obj("fixture_1", "Pot", "round", "gray", ("ellipse", 10, 86, 8, 8), 80.0, side_label)
    )
    if transit is not None:
        x, color = transit
        objects.append(
            _obj("carried_blob", "Unknown", "box", color, ("rect", x, 70, 20, 8), 140.0, counter_label)
        )
    scene = SceneDocument(
        width=128,
        height=96,
        planes=[
            PlaneSpec(counter_label, counter_rect, 1000.0),
            PlaneSpec(side_label, side_rect, 1000.0),
        ],
        objects=objects,
        semantic_regions=[RegionSpec(counter_label, counter_rect), RegionSpec(side_label, side_rect)],
    )
    scene.validate()
    return scene


def pick_place_episode(n_objects: int, n_moves: int, seed: int = 7) -> Episode:
    """A tabletop episode with `n_moves` pick-and-place relocations.

    Frames during a move are degraded (blurred, or taken while the camera
    travels) and show a smeared carried blob, so processing them without
    the knowledge filters inflates the belief state. A fixture outside
    the task regions does the same for the ROI filter.
    """
    # each move frees its source slot, so one spare slot suffices
    if n_objects >= _GRID_COLS * _GRID_ROWS:
        raise ValueError("not enough grid slots for the requested object count")
    rng = np.random.default_rng(seed)
    positions = {f"item_{i}": (i, i) for i in range(n_objects)}
    free_slots = list(range(n_objects, _GRID_COLS * _GRID_ROWS))

    base_pose = Pose()
    away_pose = Pose(x=0.35)
    frames = []
    tick = 0

    def emit(scene, pose=base_pose, blur=5.0, transit=None):
        nonlocal tick
        frames.append(Frame(scene if transit is None else scene, pose, blur, tick))
        tick += 1

    current = _pick_place_scene(positions)
    emit(current)
    emit(current)

    movable = [f"item_{i}" for i in range(n_objects)]
    for move in range(n_moves):
        mover = movable[int(rng.integers(0, len(movable)))]
        target = free_slots.pop(int(rng.integers(0, len(free_slots))))
        look, old_slot = positions[mover]
        free_slots.append(old_slot)

        in_transit = dict(positions)
        del in_transit[mover]
        transit_x = 14 + (move * 23) % 90
        transit_scene = _pick_place_scene(
            in_transit, transit=(transit_x, _TRANSIT_COLORS[move % len(_TRANSIT_COLORS)])
        )
        if move % 2 == 0:
            emit(transit_scene, pose=base_pose, blur=250.0)
        else:
            emit(transit_scene, pose=away_pose, blur=5.0)

        positions[mover] = (look, target)
        current = _pick_place_scene(positions)
        emit(current)
        emit(current)

    episode = Episode(
        name=f"pick_place_{n_objects:02d}",
        frames=frames,
        task_regions=[_COUNTER[0]],
    )
    episode.validate()
    return episode


PICK_PLACE_SPECS = [(9, 3), (15, 4), (20, 6), (25, 10)]


# --- file emission ----------------------------------------------------------------------

def write_all(data_dir: Path = DATA_DIR) -> list:
    data_dir = Path(data_dir)
    written = []

    def emit(name, payload):
        path = data_dir / name
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        written.append(path)

    emit("kitchen.scene.json", scene_to_dict(kitchen_scene()))
    emit("kitchen_drawer.scene.json", scene_to_dict(kitchen_drawer_scene()))
    emit("chemlab.scene.json", scene_to_dict(chemlab_scene()))
    emit("retail.scene.json", scene_to_dict(retail_scene()))
    emit("kitchen.episode.json", episode_to_dict(kitchen_episode()))
    emit("retail_scan.episode.json", episode_to_dict(retail_scan_episode()))
    for n_objects, n_moves in PICK_PLACE_SPECS:
        emit(
            f"pick_place_{n_objects:02d}.episode.json",
            episode_to_dict(pick_place_episode(n_objects, n_moves)),
        )
    return written


if __name__ == "__main__":
    for path in write_all():
        print(path)
