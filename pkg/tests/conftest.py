import xml.etree.ElementTree as ET
from pathlib import Path

from genbound.cli import main

SVG = "{http://www.w3.org/2000/svg}"


def write_config(directory: Path, text: str, name: str = "config.toml") -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(text.strip() + "\n")
    return path


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def gid_counts(svg_path: Path) -> dict:
    """For every element carrying one of our gids: number of <use> markers and <path> strokes inside it."""
    root = ET.parse(svg_path).getroot()
    out = {}
    for g in root.iter():
        gid = g.get("id")
        if gid and g.tag == SVG + "g" and not gid.startswith(("figure", "axes", "patch", "line2d", "text", "legend", "matplotlib")):
            out[gid] = {
                "use": sum(1 for _ in g.iter(SVG + "use")),
                "path": sum(1 for _ in g.iter(SVG + "path")),
            }
    return out
