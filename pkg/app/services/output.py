from __future__ import annotations

import hashlib
from importlib import metadata
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
import structlog

from app import __version__
from app.config import settings
from app.models import CirculationLevel, EigenResult, FilamentRecord, FilamentState, NonlinearRun
from app.spectral.levels import PeakHistogram

logger = structlog.get_logger()

MANIFEST_PACKAGES = ("numpy", "scipy", "pandas", "pydantic")


def config_digest(path: Optional[Path]) -> str:
    if path is None:
        return "none"
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {"vortex-levels": __version__}
    for name in MANIFEST_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def dispersion_frame(ns: Iterable[int], omegas: Iterable[float]) -> pd.DataFrame:
    return pd.DataFrame({"n": list(ns), "omega": list(omegas)}, columns=["n", "omega"])


def eigen_frame(eig: EigenResult) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "m": np.arange(1, len(eig) + 1),
            "lambda_sq": eig.lambda_sq,
            "lambda": eig.lambdas,
            "error_estimate": eig.error_estimate,
            "multiplicity": eig.multiplicity,
        }
    )


LEVEL_COLUMNS = [
    "n", "m", "k", "lambda", "gamma_exact", "gamma_series", "base", "form_factor",
    "fine_structure", "residual", "level_index", "sector", "multiplicity",
]


def levels_frame(levels: List[CirculationLevel]) -> pd.DataFrame:
    rows = [
        {
            "n": lv.qn.n,
            "m": lv.qn.m,
            "k": lv.qn.k,
            "lambda": lv.lam,
            "gamma_exact": lv.gamma_exact,
            "gamma_series": lv.gamma_series,
            "base": lv.base,
            "form_factor": lv.form_factor,
            "fine_structure": lv.fine_structure,
            "residual": lv.residual,
            "level_index": lv.level_index,
            "sector": lv.sector,
            "multiplicity": lv.multiplicity,
        }
        for lv in levels
    ]
    return pd.DataFrame(rows, columns=LEVEL_COLUMNS)


def histogram_frame(hist: PeakHistogram) -> pd.DataFrame:
    return pd.DataFrame(
        {"bin_center": hist.bin_center, "count": hist.count, "states": hist.states}
    )


def diagnostics_frame(run: NonlinearRun) -> pd.DataFrame:
    impulses = np.array(run.impulses).reshape(-1, 3)
    centroids = np.array(run.centroids).reshape(-1, 3)
    lengths = np.array(run.lengths)
    return pd.DataFrame(
        {
            "tau": run.times,
            "length": lengths,
            "length_drift": np.abs(lengths - lengths[0]) / lengths[0] if len(lengths) else lengths,
            "f_x": impulses[:, 0],
            "f_y": impulses[:, 1],
            "f_z": impulses[:, 2],
            "centroid_x": centroids[:, 0],
            "centroid_y": centroids[:, 1],
            "centroid_z": centroids[:, 2],
        }
    )


def deviation_frame(rows: np.ndarray) -> pd.DataFrame:
    """Linearized run: (tau, max deviation from the exact propagator, max |sj|)."""
    return pd.DataFrame(rows, columns=["tau", "max_deviation", "amplitude"])


def curve_frame(xi: np.ndarray, points: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"xi": xi, "x": points[:, 0], "y": points[:, 1], "z": points[:, 2]})


class OutputWriter:
    """Writes the tables of one command into a directory and keeps the file
    list for the MANIFEST."""

    def __init__(
        self,
        directory: Path,
        config_path: Optional[Path] = None,
        float_format: Optional[str] = None,
    ):
        self.directory = Path(directory)
        self.config_path = config_path
        self.float_format = float_format or settings.float_format
        self.files: List[str] = []

    def _path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.directory / name

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=self.float_format, lineterminator="\n")
        logger.info("table_written", file=name, rows=len(frame))
        return path

    def gnuplot(self, name: str, frame: pd.DataFrame) -> Path:
        """Whitespace-separated columns with a commented header line."""
        path = self._path(name)
        body = frame.to_csv(
            sep=" ", index=False, header=False, float_format=self.float_format,
            lineterminator="\n",
        )
        path.write_text("# " + " ".join(frame.columns) + "\n" + body, encoding="utf-8")
        return path

    def state(self, name: str, state: FilamentState) -> Path:
        path = self._path(name)
        path.write_text(FilamentRecord.from_state(state).model_dump_json(indent=2) + "\n",
                        encoding="utf-8")
        return path

    def text(self, name: str, content: str) -> Path:
        path = self._path(name)
        path.write_text(content, encoding="utf-8")
        return path

    def manifest(self, command: str, note: str = "") -> Path:
        lines = [
            f"command: {command}",
            f"config_sha256: {config_digest(self.config_path)}",
        ]
        lines += [f"version {name}: {v}" for name, v in package_versions().items()]
        lines += [f"file: {name}" for name in sorted(set(self.files))]
        if note:
            lines.append(f"note: {note}")
        path = self.directory / "MANIFEST"
        self.directory.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info("manifest_written", directory=str(self.directory), files=len(self.files))
        return path
