"""Memorability-scoring oracles: score stores, an external-process protocol,
and a deterministic built-in stub.

Wire protocol for external predictors: the parent writes one absolute file
path per line to the child's stdin and closes it; the child writes
``<path><TAB><score>`` per line to stdout in the same order and exits 0.
Anything else (missing/extra lines, reordered paths, unparsable or
out-of-range scores, nonzero exit) is a protocol error.

Image ids are file stems (name without directory or extension), so an edited
copy of ``faces/a.png`` written elsewhere keeps id ``a``.
"""

from __future__ import annotations

import enum
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import imagecore, metrics
from .errors import (
    ContractError,
    ProtocolError,
    ScoreLookupError,
    ScoreValidationError,
)
from .imagecore import Image

ScoreTable = dict[str, float]


class PredictorKind(enum.Enum):
    SCORE_STORE = "store"
    EXTERNAL_COMMAND = "cmd"
    STUB = "stub"


@dataclass(frozen=True)
class PredictorHandle:
    kind: PredictorKind
    source: Optional[str] = None

    def __post_init__(self):
        if self.kind is PredictorKind.SCORE_STORE:
            if not self.source or not Path(self.source).is_file():
                raise ContractError(f"score store not found: {self.source}")
        elif self.kind is PredictorKind.EXTERNAL_COMMAND:
            if not self.source or not self.source.strip():
                raise ContractError("external predictor command is empty")

    @classmethod
    def stub(cls) -> "PredictorHandle":
        return cls(kind=PredictorKind.STUB)

    @classmethod
    def store(cls, path) -> "PredictorHandle":
        return cls(kind=PredictorKind.SCORE_STORE, source=str(path))

    @classmethod
    def command(cls, cmd: str) -> "PredictorHandle":
        return cls(kind=PredictorKind.EXTERNAL_COMMAND, source=cmd)


def parse_handle(spec: str) -> PredictorHandle:
    """CLI syntax: ``stub``, ``store:<csv path>`` or ``cmd:<command line>``."""
    if spec == "stub":
        return PredictorHandle.stub()
    if spec.startswith("store:"):
        return PredictorHandle.store(spec[len("store:"):])
    if spec.startswith("cmd:"):
        return PredictorHandle.command(spec[len("cmd:"):])
    raise ContractError(f"unknown predictor spec {spec!r}")


def image_id_for(path) -> str:
    return Path(path).stem


# stub coefficients are arbitrary but fixed; they make the documented
# monotone-metric edits move scores in intuitive directions
_STUB_BASE = 0.15
_STUB_GRAD_GAIN = 0.5
_STUB_GRAD_SCALE = 40.0
_STUB_STD_GAIN = 0.35
_STUB_STD_SCALE = 80.0


def stub_score(img: Image) -> float:
    """Deterministic toy score from luma gradient and spread.

    score = clamp(0.15 + 0.5*min(mean_grad/40, 1) + 0.35*min(std/80, 1)).
    This is a test oracle, not a model of human memorability; all math is
    float64 so identical images score identically everywhere.
    """
    g = min(metrics.mean_gradient(img) / _STUB_GRAD_SCALE, 1.0)
    _, std = metrics.intensity_stats(img)
    s = min(std / _STUB_STD_SCALE, 1.0)
    return float(np.clip(_STUB_BASE + _STUB_GRAD_GAIN * g + _STUB_STD_GAIN * s,
                         0.0, 1.0))


def _predict_stub(paths: Sequence) -> ScoreTable:
    out: ScoreTable = {}
    for p in paths:
        out[image_id_for(p)] = stub_score(imagecore.decode_image(p))
    return out


def _predict_store(handle: PredictorHandle, paths: Sequence) -> ScoreTable:
    table = load_score_csv(handle.source)
    missing = [image_id_for(p) for p in paths if image_id_for(p) not in table]
    if missing:
        raise ScoreLookupError(f"ids missing from score store: {sorted(set(missing))}")
    return {image_id_for(p): table[image_id_for(p)] for p in paths}


def _predict_command(handle: PredictorHandle, paths: Sequence) -> ScoreTable:
    abs_paths = [str(Path(p).resolve()) for p in paths]
    proc = subprocess.run(
        shlex.split(handle.source),
        input="".join(p + "\n" for p in abs_paths),
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ProtocolError(
            f"predictor exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    lines = proc.stdout.splitlines()
    if len(lines) != len(abs_paths):
        raise ProtocolError(
            f"predictor returned {len(lines)} lines for {len(abs_paths)} paths"
        )
    out: ScoreTable = {}
    for requested, line in zip(abs_paths, lines):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ProtocolError(f"malformed predictor line: {line!r}")
        path_part, score_part = parts
        if path_part != requested:
            raise ProtocolError(
                f"out-of-order response: expected {requested!r}, got {path_part!r}"
            )
        try:
            score = float(score_part)
        except ValueError:
            raise ProtocolError(f"unparsable score in line: {line!r}") from None
        if not 0.0 <= score <= 1.0:
            raise ScoreValidationError(f"score {score} outside [0, 1] for {path_part}")
        out[image_id_for(path_part)] = score
    return out


def predict_batch(handle: PredictorHandle, paths: Sequence) -> ScoreTable:
    """One score per input path, keyed by image id, every score in [0, 1]."""
    if not paths:
        return {}
    if handle.kind is PredictorKind.STUB:
        return _predict_stub(paths)
    if handle.kind is PredictorKind.SCORE_STORE:
        return _predict_store(handle, paths)
    return _predict_command(handle, paths)


SCORE_CSV_HEADER = "image_id,score"


def load_score_csv(path) -> ScoreTable:
    """Read ``image_id,score`` rows; scores validated into [0, 1]."""
    out: ScoreTable = {}
    with open(path, "r", encoding="utf-8") as fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != SCORE_CSV_HEADER:
                    raise ProtocolError(
                        f"{path}:{lineno}: expected header {SCORE_CSV_HEADER!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2 or not parts[0]:
                raise ProtocolError(f"{path}:{lineno}: malformed row {line!r}")
            try:
                score = float(parts[1])
            except ValueError:
                raise ProtocolError(
                    f"{path}:{lineno}: unparsable score {parts[1]!r}"
                ) from None
            if not 0.0 <= score <= 1.0:
                raise ScoreValidationError(
                    f"{path}:{lineno}: score {score} outside [0, 1]"
                )
            out[parts[0]] = score
        if not header_seen:
            raise ProtocolError(f"{path}: missing header row")
    return out


def save_score_csv(table: ScoreTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCORE_CSV_HEADER + "\n")
        for image_id in sorted(table):
            fh.write(f"{image_id},{float(table[image_id])!r}\n")
