"""Comma-separated tables consumed by plotting scripts and the audit subcommands.

All numbers are written with 17 significant digits so that a write/read
round trip is lossless. Files are written atomically (temp file + rename).
"""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .integrator import StateTrajectory
from .pmp import Costates

TRAJECTORY_HEADER = ["Time", "alpha1", "alpha2", "u1", "u2", "x", "y", "theta"]
PHASE_HEADER = ["Time", "alpha1", "alpha2", "x", "y", "theta"]
CONTROLS_HEADER = ["u1", "u2"]
COSTATE_HEADER = ["k", "zeta_vx", "zeta_vy", "zeta_omega", "rho_vx", "rho_vy", "rho_omega", "xi1", "xi2"]

# columns holding angles or angular rates, converted when exporting in degrees
_ANGULAR = {"alpha1", "alpha2", "u1", "u2", "theta"}


class TableError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format(header, rows, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _read(path, header):
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TableError(f"cannot read {path}: {exc}") from exc
    comments = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not body:
        raise TableError(f"{path}: empty table")
    found = [c.strip() for c in body[0].split(",")]
    if found != header:
        raise TableError(f"{path}: expected header {','.join(header)}, found {body[0]}")
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]], dtype=float)
    except ValueError as exc:
        raise TableError(f"{path}: {exc}") from exc
    data = data.reshape(-1, len(header))
    return data, comments


def _angular_scale(header, units):
    if units not in ("rad", "deg"):
        raise TableError(f"units must be 'rad' or 'deg', got {units!r}")
    factor = 180.0 / np.pi if units == "deg" else 1.0
    return np.array([factor if name in _ANGULAR else 1.0 for name in header])


def trajectory_rows(traj: StateTrajectory, units: str = "deg") -> np.ndarray:
    """N+1 rows; the final row repeats the last control so the columns align."""
    controls = np.vstack([traj.controls, traj.controls[-1:]])
    rows = np.column_stack([traj.times, traj.alphas, controls, traj.poses])
    return rows * _angular_scale(TRAJECTORY_HEADER, units)


def write_trajectory(path, traj: StateTrajectory, units: str = "deg") -> None:
    atomic_write(path, _format(TRAJECTORY_HEADER, trajectory_rows(traj, units)))


def read_trajectory(path, units: str = "deg") -> StateTrajectory:
    data, _ = _read(path, TRAJECTORY_HEADER)
    if len(data) < 2:
        raise TableError(f"{path}: a trajectory needs at least two rows")
    data = data / _angular_scale(TRAJECTORY_HEADER, units)
    h = float(data[1, 0] - data[0, 0])
    return StateTrajectory(alphas=data[:, 1:3], poses=data[:, 5:8], controls=data[:-1, 3:5], h=h)


def phase_rows(traj: StateTrajectory, interval: float, units: str = "deg") -> np.ndarray:
    stride = max(1, int(round(interval / traj.h)))
    idx = np.arange(0, traj.N + 1, stride)
    if idx[-1] != traj.N:
        idx = np.append(idx, traj.N)
    rows = np.column_stack([traj.times[idx], traj.alphas[idx], traj.poses[idx]])
    return rows * _angular_scale(PHASE_HEADER, units)


def write_phase_portrait(path, traj: StateTrajectory, interval: float = 5.0, units: str = "deg") -> None:
    atomic_write(path, _format(PHASE_HEADER, phase_rows(traj, interval, units)))


def write_controls(path, controls) -> None:
    """Controls in rad/s, one row per step."""
    atomic_write(path, _format(CONTROLS_HEADER, np.asarray(controls, dtype=float).reshape(-1, 2)))


def read_controls(path) -> np.ndarray:
    data, _ = _read(path, CONTROLS_HEADER)
    return data


def write_costates(path, costates: Costates) -> None:
    rows = np.column_stack([np.arange(costates.N), costates.zeta, costates.rho, costates.xi])
    atomic_write(path, _format(COSTATE_HEADER, rows, comments=[f"nu = {costates.nu:g}"]))


def read_costates(path) -> Costates:
    data, comments = _read(path, COSTATE_HEADER)
    nu = -1.0
    for c in comments:
        key, _, value = c.partition("=")
        if key.strip() == "nu":
            try:
                nu = float(value)
            except ValueError as exc:
                raise TableError(f"{path}: bad nu value {value!r}") from exc
    try:
        return Costates(zeta=data[:, 1:4], rho=data[:, 4:7], xi=data[:, 7:9], nu=nu)
    except ValueError as exc:
        raise TableError(f"{path}: {exc}") from exc
