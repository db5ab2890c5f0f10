"""Trajectory file parsing, resampling, windowing, splits, and features.

Input files are whitespace-separated ``frame ped_id x y`` rows in world
meters, one file per scene, '#' starting a comment line. Frames are
resampled onto a stride grid anchored at the earliest frame, then sliced
into observation+prediction windows containing only pedestrians present
at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DuplicateRecordError,
    ParseError,
)
from .tensor import Tensor


@dataclass(frozen=True)
class RawRecord:
    frame: int
    ped_id: int
    x: float
    y: float


@dataclass
class SequenceWindow:
    """One scene slice: N pedestrians over T_obs+T_pred resampled steps."""

    scene_name: str
    start_frame: int
    positions: np.ndarray  # [N, T_total, 2] float64, world meters
    ped_ids: list

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 3 or self.positions.shape[2] != 2:
            raise ContractError(f"window positions must be [N, T, 2], got {self.positions.shape}")
        if self.positions.shape[0] != len(self.ped_ids) or self.positions.shape[0] < 1:
            raise ContractError(
                f"{self.positions.shape[0]} position rows for {len(self.ped_ids)} pedestrians"
            )

    @property
    def n_peds(self) -> int:
        return self.positions.shape[0]

    @property
    def t_total(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class Split:
    train_scenes: tuple
    test_scene: str


def _parse_int_field(token: str, what: str, line_no: int):
    # Public ETH/UCY dumps write frame/ped ids as floats ("840.0"); accept
    # those only when they carry an integral value.
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"line {line_no}: {what} {token!r} is not numeric") from None
    if not value.is_integer():
        raise ParseError(f"line {line_no}: {what} {token!r} is not an integer")
    if value < 0:
        raise ParseError(f"line {line_no}: {what} must be non-negative, got {token}")
    return int(value)


def parse_trajectory_file(path) -> list[RawRecord]:
    """Read one scene file into records, preserving line order."""
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) < 4:
                raise ParseError(f"line {line_no}: expected 4 fields, got {len(parts)}")
            frame = _parse_int_field(parts[0], "frame", line_no)
            ped_id = _parse_int_field(parts[1], "ped_id", line_no)
            try:
                x, y = float(parts[2]), float(parts[3])
            except ValueError:
                raise ParseError(f"line {line_no}: bad coordinate in {parts[2:4]!r}") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError(f"line {line_no}: non-finite coordinate")
            key = (frame, ped_id)
            if key in seen:
                raise DuplicateRecordError(
                    f"line {line_no}: duplicate record for frame {frame}, pedestrian {ped_id}"
                )
            seen.add(key)
            records.append(RawRecord(frame, ped_id, x, y))
    return records


def resample_frames(records: list, frame_step: int) -> list:
    """Keep records on the stride grid anchored at the earliest frame."""
    if frame_step < 1:
        raise ContractError(f"frame_step must be >= 1, got {frame_step}")
    if not records or frame_step == 1:
        return list(records)
    base = min(r.frame for r in records)
    return [r for r in records if (r.frame - base) % frame_step == 0]


def _grid_step(frames: list) -> int:
    gaps = [b - a for a, b in zip(frames, frames[1:]) if b > a]
    return min(gaps) if gaps else 1


def extract_windows(
    records: list,
    t_obs: int,
    t_pred: int,
    stride: int = 1,
    scene_name: str = "",
) -> list:
    """Slide a T_obs+T_pred window over the resampled frame grid.

    The grid spacing is inferred as the smallest gap between occupied
    frames. A pedestrian joins a window only if recorded at every one of
    its frames; windows where nobody qualifies are dropped, so gaps where
    the scene is empty produce no windows.
    """
    if t_obs < 1 or t_pred < 1 or stride < 1:
        raise ContractError(f"t_obs={t_obs}, t_pred={t_pred}, stride={stride} must all be >= 1")
    if not records:
        return []
    by_frame: dict = {}
    for r in records:
        by_frame.setdefault(r.frame, {})[r.ped_id] = (r.x, r.y)
    frames = sorted(by_frame)
    step = _grid_step(frames)
    grid = list(range(frames[0], frames[-1] + 1, step))
    t_total = t_obs + t_pred

    windows = []
    for start in range(0, len(grid) - t_total + 1, stride):
        win_frames = grid[start : start + t_total]
        present = None
        for f in win_frames:
            here = set(by_frame.get(f, ()))
            present = here if present is None else (present & here)
            if not present:
                break
        if not present:
            continue
        ped_ids = sorted(present)
        positions = np.empty((len(ped_ids), t_total, 2), dtype=np.float64)
        for i, pid in enumerate(ped_ids):
            for t, f in enumerate(win_frames):
                positions[i, t] = by_frame[f][pid]
        windows.append(
            SequenceWindow(
                scene_name=scene_name,
                start_frame=win_frames[0],
                positions=positions,
                ped_ids=ped_ids,
            )
        )
    return windows


def make_splits(scene_names: list) -> list:
    """Leave-one-out: one split per scene, that scene held out for test."""
    names = list(scene_names)
    if len(names) < 2:
        raise ConfigError(f"leave-one-out needs at least 2 scenes, got {len(names)}")
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate scene names in {names}")
    return [
        Split(train_scenes=tuple(n for n in names if n != test), test_scene=test)
        for test in names
    ]


def build_features(window: SequenceWindow, t_obs: int) -> Tensor:
    """Per-pedestrian observed features: (x, y, dx, dy) per step.

    The displacement columns hold the step-over-step difference, zero at
    the first step.
    """
    if t_obs < 1 or t_obs > window.t_total:
        raise ContractError(f"t_obs={t_obs} outside window of {window.t_total} steps")
    obs = window.positions[:, :t_obs, :]
    feats = np.zeros((window.n_peds, t_obs, 4), dtype=np.float64)
    feats[:, :, :2] = obs
    feats[:, 1:, 2:] = obs[:, 1:, :] - obs[:, :-1, :]
    return Tensor(feats)


def discover_scenes(data_dir) -> list:
    """Scene names are the sorted stems of *.txt files in the directory."""
    root = Path(data_dir)
    if not root.is_dir():
        raise DataError(f"data directory not found: {root}")
    names = sorted(p.stem for p in root.glob("*.txt"))
    if not names:
        raise DataError(f"no *.txt scene files in {root}")
    return names


def load_scene_windows(data_dir, scene: str, t_obs: int, t_pred: int,
                       stride: int = 1, frame_step: int = 10) -> list:
    """Parse, resample, and window a single scene file."""
    path = Path(data_dir) / f"{scene}.txt"
    if not path.is_file():
        raise DataError(f"scene file not found: {path}")
    records = resample_frames(parse_trajectory_file(path), frame_step)
    return extract_windows(records, t_obs, t_pred, stride=stride, scene_name=scene)


def load_windows(data_dir, scenes, t_obs: int, t_pred: int,
                 stride: int = 1, frame_step: int = 10) -> list:
    """Windows for several scenes, concatenated in scene order."""
    out = []
    for scene in scenes:
        out.extend(
            load_scene_windows(data_dir, scene, t_obs, t_pred, stride=stride, frame_step=frame_step)
        )
    return out
