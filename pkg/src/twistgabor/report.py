"""Flat JSON analysis reports."""
from __future__ import annotations

import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

TIMING_KEY = "wall_time_s"


def _scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them readable and stable
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (complex, np.complexfloating)):
        raise TypeError("split complex values into _re/_im entries before reporting")
    if isinstance(v, str):
        return v
    raise TypeError(f"unsupported report value {type(v).__name__}")


@dataclass
class AnalysisReport:
    command: str
    grid: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    version: str = __version__
    started: float = field(default_factory=time.perf_counter)
    wall_time: float | None = None

    def add(self, label: str, value) -> None:
        if isinstance(value, (complex, np.complexfloating)):
            self.results[f"{label}_re"] = float(value.real)
            self.results[f"{label}_im"] = float(value.imag)
        else:
            self.results[label] = value

    def update(self, mapping: dict, prefix: str = "") -> None:
        for k, v in mapping.items():
            if isinstance(v, (dict, list, tuple)):
                continue
            if k == "pass" or k.startswith("pass_"):
                self.flag(f"{prefix}{k}" if prefix else k, v)
            else:
                self.add(f"{prefix}{k}", v)

    def flag(self, label: str, ok) -> None:
        self.flags[label] = bool(ok)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def finish(self) -> "AnalysisReport":
        self.wall_time = time.perf_counter() - self.started
        return self

    def payload(self, timing: bool = True) -> dict:
        out = {"version": self.version, "command": self.command}
        for k, v in self.grid.items():
            out[f"grid_{k}"] = _scalar(v)
        for k, v in self.results.items():
            out[k] = _scalar(v)
        for k, v in self.flags.items():
            out[k if k.startswith("pass") else f"pass_{k}"] = bool(v)
        out["pass"] = self.passed
        if timing and self.wall_time is not None:
            out[TIMING_KEY] = self.wall_time
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.payload(timing), sort_keys=True, indent=1) + "\n"

    def write(self, path, timing: bool = True) -> None:
        write_atomic(path, self.to_json(timing))


def write_atomic(path, text: str) -> None:
    path = Path(path)
    d = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=d, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
