"""Access to the data files shipped inside the package."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    """Resolve a shipped data file by name or return the path unchanged.

    Accepts real paths, bare names (`kitchen.onto`, `robots/pr2.onto`) and
    a few convenient shorthands (`kitchen` for the ontology, `pr2` for the
    robot profile).
    """
    candidate = Path(name)
    if candidate.exists():
        return candidate
    for relative in (name, f"{name}.onto", f"robots/{name}.onto", f"{name}.scene.json", f"{name}.episode.json"):
        path = DATA_DIR / relative
        if path.exists():
            return path
    raise FileNotFoundError(f"no such file or shipped resource: {name}")
