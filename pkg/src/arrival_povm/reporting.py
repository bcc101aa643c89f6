"""Plot-ready CSV output.

Every CSV starts with ``#``-prefixed metadata lines (manifest, grid,
directions as JSON) followed by a header row. Floats are written with
``repr`` so the histogram file round-trips exactly.

histograms.csv  bin, t_left, t_right, P[<n>]... and fit[<n>]... when a fit is
                given; ``bin_count`` rows plus a final ``censored`` row.
pair_sums.csv   bin, t_left, t_right, S[<n>]... with S = P_n + P_{-n}, one
                column per antipodal pair; same rows as above.
defects.csv     kind, n, m, value: one ``pair`` row per pair of antipodal
                pairs, then the scalar defects (delta, lower_bound, axial,
                chiral, chiral_hypothesis, inversion).
errors.csv      direction, lower_bound and, when a fit is given, fit_error
                and minimax_error; fit columns are omitted otherwise.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .measurability import CheckReport, full_report, pair_sums
from .povm_fit import FitResult
from .spin_algebra import Direction
from .time_distributions import DirectionFamily, TimeGrid

CSV_NAMES = ("histograms.csv", "pair_sums.csv", "defects.csv", "errors.csv")


def _meta_lines(manifest: dict | None, **extra) -> list[str]:
    lines = []
    if manifest is not None:
        lines.append("# manifest: " + json.dumps(manifest, sort_keys=True))
    for key, value in extra.items():
        lines.append(f"# {key}: " + json.dumps(value, sort_keys=True))
    return lines


def _write(path: Path, meta: list[str], header: list[str], rows: list[list]):
    with open(path, "w", newline="") as fh:
        for line in meta:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _bin_rows(grid: TimeGrid, columns: np.ndarray) -> list[list]:
    """columns has shape (bin_count + 1, ncols); last row is the censored mass."""
    edges = grid.edges
    rows = [[k, float(edges[k]), float(edges[k + 1]), *map(float, columns[k])] for k in range(grid.bin_count)]
    rows.append(["censored", "", "", *map(float, columns[-1])])
    return rows


def write_report(
    family: DirectionFamily,
    outdir,
    check: CheckReport | None = None,
    fit: FitResult | None = None,
    manifest: dict | None = None,
) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if check is None:
        check = full_report(family)
    grid = family.grid
    labels = [n.label() for n in family.directions]
    fit_flag = "present" if fit is not None else "absent"
    meta = _meta_lines(
        manifest,
        grid=grid.to_dict(),
        directions=[n.as_list() for n in family.directions],
        axis=family.axis.as_list() if family.axis is not None else None,
        fit=fit_flag,
    )

    cols = family.matrix().T
    header = ["bin", "t_left", "t_right"] + [f"P[{lab}]" for lab in labels]
    if fit is not None:
        cols = np.hstack([cols, fit.povm.predict_matrix(family.directions).T])
        header += [f"fit[{lab}]" for lab in labels]
    paths = [outdir / name for name in CSV_NAMES]
    _write(paths[0], meta, header, _bin_rows(grid, cols))

    pairs, sums = pair_sums(family)
    _write(
        paths[1],
        meta,
        ["bin", "t_left", "t_right"] + [f"S[{labels[i]}]" for i, _ in pairs],
        _bin_rows(grid, sums.T),
    )

    rows = [["pair", n.label(), m.label(), float(v)] for (n, m), v in check.per_pair_table]
    for kind, value in (
        ("delta", check.delta),
        ("lower_bound", check.lower_bound),
        ("axial", check.axial_defect),
        ("chiral", check.chiral_defect),
        ("chiral_hypothesis", check.chiral_hypothesis_gap),
        ("inversion", check.inversion_defect),
    ):
        rows.append([kind, "", "", "" if value is None else float(value)])
    _write(paths[2], meta, ["kind", "n", "m", "value"], rows)

    if fit is not None:
        errs = dict((n.label(), e) for n, e in fit.per_direction_error)
        header = ["direction", "lower_bound", "fit_error", "minimax_error"]
        rows = [[lab, float(check.lower_bound), float(errs[lab]), float(fit.minimax_error)] for lab in labels]
    else:
        header = ["direction", "lower_bound"]
        rows = [[lab, float(check.lower_bound)] for lab in labels]
    _write(paths[3], meta, header, rows)
    return paths


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Metadata dict, header, and data rows of a report CSV."""
    meta, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def read_histograms_csv(path) -> DirectionFamily:
    """Rebuild the input family from histograms.csv."""
    meta, header, rows = read_csv(path)
    grid = TimeGrid.from_dict(meta["grid"])
    directions = [Direction.from_vector(v) for v in meta["directions"]]
    pcols = [i for i, h in enumerate(header) if h.startswith("P[")]
    matrix = np.array([[float(r[i]) for r in rows] for i in pcols])
    axis = Direction.from_vector(meta["axis"]) if meta.get("axis") is not None else None
    return DirectionFamily.from_matrix(grid, directions, matrix, axis=axis)
