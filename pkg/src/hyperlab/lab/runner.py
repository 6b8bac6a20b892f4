"""Output staging and run records."""
import json
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TOOL = "hyperlab"
VERSION = "0.1.0"
STAGING = ".staging"


def dumps(obj):
    """Deterministic JSON text: sorted keys, floats rounded to 12 significant
    digits (below the solver tolerance, above round-off), trailing newline."""
    return json.dumps(rounded(obj), indent=1, sort_keys=True, default=_default) + "\n"


def rounded(obj, digits=12):
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{digits}g}") if np.isfinite(x) else None
    if isinstance(obj, dict):
        return {k: rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist(), digits)
    return obj


def _default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


class Output:
    """Files are written into a staging directory and moved into place by
    ``flush``; a failed run flushes whatever was completed."""

    def __init__(self, root):
        self.root = Path(root)
        self.stage = self.root / STAGING
        self.names = []

    def path(self, name):
        self.stage.mkdir(parents=True, exist_ok=True)
        if name not in self.names:
            self.names.append(name)
        return self.stage / name

    def text(self, name, s):
        self.path(name).write_text(s)

    def json(self, name, obj):
        self.text(name, dumps(obj))

    def flush(self):
        moved = []
        for name in self.names:
            src = self.stage / name
            if src.exists():
                os.replace(src, self.root / name)
                moved.append(name)
        if self.stage.exists():
            shutil.rmtree(self.stage)
        return sorted(moved)


@dataclass
class RunRecord:
    scenario: str
    config_hash: str
    seed: int
    timings: dict = field(default_factory=dict)
    meshes: list = field(default_factory=list)
    residual_max: float = 0.0
    files: list = field(default_factory=list)
    status: str = "running"
    error: str = None
    tool: str = TOOL
    version: str = VERSION

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def add_mesh(self, m, label=""):
        ang = np.degrees(m.angles()).min()
        self.meshes.append({"label": label, "n_vertices": int(m.n_vertices),
                            "n_triangles": int(len(m.triangles)), "h": float(m.h),
                            "min_angle_deg": round(float(ang), 6)})

    def add_residuals(self, res):
        if len(res):
            self.residual_max = max(self.residual_max, float(np.max(res)))

    def to_dict(self):
        return {"tool": self.tool, "version": self.version, "scenario": self.scenario,
                "config_hash": self.config_hash, "seed": self.seed, "status": self.status,
                "error": self.error, "timings": {k: round(v, 6) for k, v in self.timings.items()},
                "meshes": self.meshes, "residual_max": self.residual_max,
                "files": self.files}
