"""Example networks shipped with the package."""
from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    """Filesystem path of a bundled file such as ``"eight_agent_uniform.json"``."""
    path = Path(str(resources.files("beliefcontrol") / "data" / name))
    if not path.exists():
        raise FileNotFoundError(f"no bundled file {name!r}; see list_bundled()")
    return path


def list_bundled() -> list[str]:
    return sorted(p.name for p in Path(str(resources.files("beliefcontrol") / "data")).iterdir()
                  if p.suffix in (".json", ".csv"))
