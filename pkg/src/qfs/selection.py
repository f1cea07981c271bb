"""Selection results shared by the quantum, simulated-annealing and exact solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class SelectionResult:
    image_id: str
    class_label: int
    bitstring: str  # z_0 z_1 ... z_{d-1}
    selected_fm_indices: list[int]  # original FM indices with z_p = 1
    energy: float
    method: str  # qa | sa | exact
    n_shots: int = 0
    histogram: dict[str, int] = field(default_factory=dict)
    degeneracy: int = 1

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "class": self.class_label,
            "bitstring": self.bitstring,
            "selected_fm_indices": self.selected_fm_indices,
            "energy": self.energy,
            "method": self.method,
            "n_shots": self.n_shots,
            "histogram": self.histogram,
            "degeneracy": self.degeneracy,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SelectionResult":
        return cls(
            image_id=doc["image_id"],
            class_label=int(doc["class"]),
            bitstring=doc["bitstring"],
            selected_fm_indices=[int(i) for i in doc["selected_fm_indices"]],
            energy=float(doc["energy"]),
            method=doc["method"],
            n_shots=int(doc.get("n_shots", 0)),
            histogram={k: int(v) for k, v in doc.get("histogram", {}).items()},
            degeneracy=int(doc.get("degeneracy", 1)),
        )


def selected_indices(bitstring: str, index_map) -> list[int]:
    return [int(index_map[p]) for p, c in enumerate(bitstring) if c == "1"]


def write_selections(results: list[SelectionResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for res in results:
            f.write(json.dumps(res.to_dict()) + "\n")


def read_selections(path: str | Path) -> list[SelectionResult]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(SelectionResult.from_dict(json.loads(line)))
    return out
