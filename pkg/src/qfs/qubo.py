"""QUBO construction from a feature record.

Pipeline per record: gradient importance (global average pooling of the
gradient), strict positive filtering, absolute cosine similarity between
the surviving maps, then the beta-weighted energy function

    E(z) = (1-beta) * 1/2 * sum_{p!=q} J_pq z_p z_q - beta * sum_p h_p z_p

over z in {0,1}^d.  The linear term enters with a minus sign so that
beta=1 selects every positively contributing map and beta=0 selects none;
see README for the sign discussion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import FeatureRecord


class EmptySelection(Exception):
    """No feature map contributes positively; the record carries no QUBO."""


@dataclass
class ImportanceVector:
    alpha: np.ndarray  # length N_f
    filtered_indices: np.ndarray  # original FM indices with alpha > 0, ascending
    alpha_filtered: np.ndarray  # length d, all > 0
    h: np.ndarray  # alpha_filtered / max(alpha_filtered), in (0, 1]


@dataclass
class QuboInstance:
    d: int
    J: np.ndarray  # symmetric d x d, zero diagonal, entries in [0, 1]
    h: np.ndarray  # length d
    beta: float
    index_map: np.ndarray  # length d, original FM indices
    image_id: str = ""
    class_label: int = -1

    def validate(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta={self.beta} outside [0, 1]")
        if not (self.d == self.h.shape[0] == self.J.shape[0] == self.J.shape[1] == self.index_map.shape[0]):
            raise ValueError("inconsistent QUBO shapes")

    def to_dict(self) -> dict:
        iu = np.triu_indices(self.d, k=1)
        return {
            "image_id": self.image_id,
            "class": int(self.class_label),
            "d": self.d,
            "beta": self.beta,
            "index_map": [int(i) for i in self.index_map],
            "h": [float(x) for x in self.h],
            "J_upper": [float(x) for x in self.J[iu]],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QuboInstance":
        d = int(doc["d"])
        J = np.zeros((d, d))
        iu = np.triu_indices(d, k=1)
        J[iu] = doc["J_upper"]
        J += J.T
        inst = cls(
            d=d,
            J=J,
            h=np.asarray(doc["h"], dtype=float),
            beta=float(doc["beta"]),
            index_map=np.asarray(doc["index_map"], dtype=int),
            image_id=doc.get("image_id", ""),
            class_label=int(doc.get("class", -1)),
        )
        inst.validate()
        return inst


def importance(record: FeatureRecord) -> np.ndarray:
    """Per-map importance: spatial mean of the gradient channel."""
    return record.gradients.reshape(record.gradients.shape[0], -1).mean(axis=1)


def filter_positive(record: FeatureRecord, alpha: np.ndarray) -> tuple[np.ndarray, ImportanceVector]:
    """Keep the maps with strictly positive importance.

    Returns the filtered activations (d, H_f, W_f) and the completed
    importance vector.  Raises EmptySelection when nothing survives.
    """
    keep = np.flatnonzero(alpha > 0.0)
    if keep.size == 0:
        raise EmptySelection(f"record {record.image_id}: no positively contributing feature map")
    alpha_f = alpha[keep]
    imp = ImportanceVector(
        alpha=alpha,
        filtered_indices=keep,
        alpha_filtered=alpha_f,
        h=alpha_f / alpha_f.max(),
    )
    return record.activations[keep], imp


def cosine_matrix(filtered_activations: np.ndarray) -> np.ndarray:
    """Absolute cosine similarity between flattened filtered maps.

    Zero diagonal; a zero-norm map has similarity 0 to everything.
    """
    flat = filtered_activations.reshape(filtered_activations.shape[0], -1).astype(float)
    norms = np.linalg.norm(flat, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = flat / safe[:, None]
    J = np.abs(unit @ unit.T)
    J[norms == 0.0, :] = 0.0
    J[:, norms == 0.0] = 0.0
    np.fill_diagonal(J, 0.0)
    return np.clip(J, 0.0, 1.0)


def assemble_qubo(
    J: np.ndarray,
    h: np.ndarray,
    beta: float,
    index_map: np.ndarray,
    image_id: str = "",
    class_label: int = -1,
) -> QuboInstance:
    inst = QuboInstance(
        d=h.shape[0],
        J=np.asarray(J, dtype=float),
        h=np.asarray(h, dtype=float),
        beta=float(beta),
        index_map=np.asarray(index_map, dtype=int),
        image_id=image_id,
        class_label=class_label,
    )
    inst.validate()
    return inst


def build_instance(record: FeatureRecord, beta: float) -> QuboInstance:
    """Full record -> QUBO pipeline (may raise EmptySelection)."""
    alpha = importance(record)
    filtered, imp = filter_positive(record, alpha)
    J = cosine_matrix(filtered)
    return assemble_qubo(
        J, imp.h, beta, imp.filtered_indices, image_id=record.image_id, class_label=record.class_label
    )


def energy(instance: QuboInstance, bits) -> float:
    """Classical energy E(z) of one bitstring (string or 0/1 array)."""
    if isinstance(bits, str):
        z = np.array([int(c) for c in bits], dtype=float)
    else:
        z = np.asarray(bits, dtype=float)
    if z.shape[0] != instance.d:
        raise ValueError(f"bitstring length {z.shape[0]} != d={instance.d}")
    quad = 0.5 * z @ instance.J @ z
    lin = instance.h @ z
    return float((1.0 - instance.beta) * quad - instance.beta * lin)


def write_instances(instances: list[QuboInstance], path: str | Path) -> None:
    """One JSON document per record, JSON-lines layout."""
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_dict()) + "\n")


def read_instances(path: str | Path) -> list[QuboInstance]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(QuboInstance.from_dict(json.loads(line)))
    return out
