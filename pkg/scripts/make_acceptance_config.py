"""Regenerate the shipped acceptance campaign from the grid definitions."""
import json
from pathlib import Path

from duality_lab.grid import acceptance_config

OUT = Path(__file__).resolve().parents[1] / "src" / "duality_lab" / "data" / "acceptance.json"

if __name__ == "__main__":
    OUT.write_text(json.dumps(acceptance_config(), indent=1) + "\n")
    print(f"wrote {OUT} ({len(acceptance_config()['tasks'])} tasks)")
