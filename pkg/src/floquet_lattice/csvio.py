"""CSV writers with byte-stable, round-trip-safe number formatting.

All data files use the shortest decimal representation that parses back to
the exact float (Python's repr), LF newlines, and no timestamps, so two runs
of the same configuration produce byte-identical files on any platform.
"""

from __future__ import annotations

import numpy as np


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float (ints stay integral)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def write_trajectory(path, times, amplitudes, comment: str | None = None) -> None:
    """Trajectory CSV: header t,re_a1,im_a1,...,re_aN,im_aN, one row per sample."""
    n = amplitudes.shape[1]
    header = "t," + ",".join(f"re_a{j},im_a{j}" for j in range(1, n + 1))
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(header)
    for t, row in zip(times, amplitudes):
        cells = [fmt(t)]
        for z in row:
            cells.append(fmt(z.real))
            cells.append(fmt(z.imag))
        lines.append(",".join(cells))
    _write_lines(path, lines)


def write_population_series(path, times, values, comment: str | None = None) -> None:
    """Two-column series CSV: t,p1."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("t,p1")
    for t, v in zip(times, values):
        lines.append(f"{fmt(t)},{fmt(v)}")
    _write_lines(path, lines)


def write_min_p1_scan(path, ratios, min_p1) -> None:
    lines = ["a2_over_omega,min_p1"]
    for r, m in zip(ratios, min_p1):
        lines.append(f"{fmt(r)},{fmt(m)}")
    _write_lines(path, lines)


def write_spectrum(path, ratios, branches, include_residual: bool = False) -> None:
    """Branch CSV: a2_over_omega,branch_id,quasienergy,avg_p1..avg_pN[,residual]."""
    n = branches[0].avg_populations.shape[1]
    header = "a2_over_omega,branch_id,quasienergy," + ",".join(
        f"avg_p{j}" for j in range(1, n + 1)
    )
    if include_residual:
        header += ",residual"
    lines = [header]
    for i, r in enumerate(ratios):
        for br in branches:
            cells = [fmt(r), str(br.branch_id), fmt(br.quasienergies[i])]
            cells.extend(fmt(v) for v in br.avg_populations[i])
            if include_residual:
                cells.append(fmt(br.residuals[i]))
            lines.append(",".join(cells))
    _write_lines(path, lines)


def write_modes(path, param, modes) -> None:
    """Single-point mode CSV: param,branch_id,quasienergy,avg_p*,residual."""
    n = modes[0].avg_populations.size
    header = "param,branch_id,quasienergy," + ",".join(
        f"avg_p{j}" for j in range(1, n + 1)
    ) + ",residual"
    lines = [header]
    for b, mode in enumerate(modes):
        cells = [fmt(param), str(b), fmt(mode.quasienergy)]
        cells.extend(fmt(v) for v in mode.avg_populations)
        cells.append(fmt(mode.eigen_residual))
        lines.append(",".join(cells))
    _write_lines(path, lines)


def write_monodromy(path, matrix) -> None:
    """Debug dump of U: row-major, interleaved real/imag columns."""
    n = matrix.shape[0]
    header = ",".join(f"re_c{j},im_c{j}" for j in range(1, n + 1))
    lines = [header]
    for row in matrix:
        cells = []
        for z in row:
            cells.append(fmt(z.real))
            cells.append(fmt(z.imag))
        lines.append(",".join(cells))
    _write_lines(path, lines)


def write_heatmap(path, times, a2_values, p1_grid, comment: str | None = None) -> None:
    """Long-form heatmap CSV (t, a2, p1); p1_grid is (len(a2_values), len(times))."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("t,a2,p1")
    for i, a2 in enumerate(a2_values):
        for k, t in enumerate(times):
            lines.append(f"{fmt(t)},{fmt(a2)},{fmt(p1_grid[i, k])}")
    _write_lines(path, lines)
