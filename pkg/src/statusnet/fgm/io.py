"""Model file: parameters, feature metadata and inference settings as JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ModelVersionError
from ..features import FEATURE_VERSION
from .inference import LBPConfig
from .model import Theta

MODEL_FORMAT = "statusnet-fgm/1"


@dataclass(frozen=True)
class SavedModel:
    theta: Theta
    raw_names: list[str]
    feature_names: list[str]
    bin_edges: list[list[float]]
    lbp: LBPConfig
    train_config: dict
    extra: dict

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        doc = {
            "format": MODEL_FORMAT,
            "feature_version": FEATURE_VERSION,
            "node_weights": [float(v) for v in self.theta.node_weights],
            "triangle_weights": [float(v) for v in self.theta.triangle_weights],
            "l2_lambda": float(self.theta.l2_lambda),
            "raw_names": list(self.raw_names),
            "feature_names": list(self.feature_names),
            "bin_edges": [[float(c) for c in e] for e in self.bin_edges],
            "lbp": {"max_iters": self.lbp.max_iters, "damping": self.lbp.damping, "tol": self.lbp.tol},
            "train_config": self.train_config,
            "extra": self.extra,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, source="model") -> "SavedModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelVersionError(f"{source}: not valid JSON ({exc.msg})") from None
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise ModelVersionError(f"{source}: unknown model format")
        if doc.get("feature_version") != FEATURE_VERSION:
            raise ModelVersionError(
                f"{source}: feature version {doc.get('feature_version')!r}, expected {FEATURE_VERSION!r}"
            )
        try:
            nw = np.asarray(doc["node_weights"], dtype=np.float64)
            tw = np.asarray(doc["triangle_weights"], dtype=np.float64)
            theta = Theta(nw, tw, float(doc["l2_lambda"]))
            lbp = LBPConfig(**doc["lbp"])
            model = cls(
                theta=theta,
                raw_names=list(doc["raw_names"]),
                feature_names=list(doc["feature_names"]),
                bin_edges=[list(map(float, e)) for e in doc["bin_edges"]],
                lbp=lbp,
                train_config=dict(doc.get("train_config", {})),
                extra=dict(doc.get("extra", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelVersionError(f"{source}: corrupted model ({exc})") from None
        if tw.shape != (4,) or nw.ndim != 1 or len(nw) != len(model.feature_names):
            raise ModelVersionError(f"{source}: parameter shapes do not match feature metadata")
        if len(model.bin_edges) != len(model.raw_names):
            raise ModelVersionError(f"{source}: bin edges do not match raw attribute names")
        if not (np.isfinite(nw).all() and np.isfinite(tw).all()):
            raise ModelVersionError(f"{source}: non-finite parameters")
        return model


def save_model(model: SavedModel, path) -> None:
    Path(path).write_text(model.to_json())


def load_model(path) -> SavedModel:
    p = Path(path)
    return SavedModel.from_json(p.read_text(), source=str(p))
