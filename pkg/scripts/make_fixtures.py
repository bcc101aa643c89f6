"""Regenerate the JSON fixtures under tests/fixtures/."""

import argparse
from pathlib import Path

from arrival_povm.families import two_point_family
from arrival_povm.time_distributions import TimeGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "tests" / "fixtures", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    fam = two_point_family(TimeGrid(0.0, 1.0, 10), 3, 7)
    path = args.out / "two_point_family.json"
    fam.save(path, {"command": "fixture", "inputs": [], "outputs": [path.name], "seed": None})
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
