"""JSON documents for network and cost specifications.

Complex matrices and vectors are encoded as nested lists of [re, im] pairs;
each perceptron records its unitary source so that parameterized gates survive
a round trip intact.
"""
from __future__ import annotations

import numpy as np

from .dqnn import (
    BrickV1,
    CostSpec,
    NetworkSpec,
    Perceptron,
    RpqcGate,
    RpqcUnitary,
    ShiftGate,
    TrainingPair,
)


def _encode_array(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _decode_array(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _encode_unitary(u) -> dict:
    if isinstance(u, np.ndarray):
        return {"type": "matrix", "value": _encode_array(u)}
    if isinstance(u, ShiftGate):
        return {
            "type": "shift-gate",
            "gamma": _encode_array(u.gamma),
            "theta": u.theta,
            "left": None if u.left is None else _encode_array(u.left),
            "right": None if u.right is None else _encode_array(u.right),
        }
    if isinstance(u, BrickV1):
        return {
            "type": "brick",
            "swap_local": u.swap_local,
            "wblock": _encode_unitary(u.wblock),
        }
    if isinstance(u, RpqcUnitary):
        return {
            "type": "gate-sequence",
            "gates": [
                {"w": _encode_array(g.w), "gamma": _encode_array(g.gamma), "theta": g.theta}
                for g in u.gates
            ],
        }
    raise TypeError(f"cannot serialize unitary source {type(u)!r}")


def _decode_unitary(doc: dict):
    kind = doc["type"]
    if kind == "matrix":
        return _decode_array(doc["value"])
    if kind == "shift-gate":
        return ShiftGate(
            gamma=_decode_array(doc["gamma"]),
            theta=float(doc["theta"]),
            left=None if doc["left"] is None else _decode_array(doc["left"]),
            right=None if doc["right"] is None else _decode_array(doc["right"]),
        )
    if kind == "brick":
        return BrickV1(wblock=_decode_unitary(doc["wblock"]), swap_local=int(doc["swap_local"]))
    if kind == "gate-sequence":
        return RpqcUnitary(
            tuple(
                RpqcGate(
                    w=_decode_array(g["w"]),
                    gamma=_decode_array(g["gamma"]),
                    theta=float(g["theta"]),
                )
                for g in doc["gates"]
            )
        )
    raise ValueError(f"unknown unitary source type {kind!r}")


def network_to_json(spec: NetworkSpec) -> dict:
    return {
        "layer_widths": list(spec.layer_widths),
        "family": spec.family,
        "perceptrons": [
            {
                "layer": p.layer,
                "out_index": p.out_index,
                "in_targets": list(p.in_targets),
                "unitary": _encode_unitary(p.unitary),
            }
            for p in spec.perceptrons
        ],
    }


def network_from_json(doc: dict) -> NetworkSpec:
    ps = tuple(
        Perceptron(
            layer=int(p["layer"]),
            out_index=int(p["out_index"]),
            in_targets=tuple(int(t) for t in p["in_targets"]),
            unitary=_decode_unitary(p["unitary"]),
        )
        for p in doc["perceptrons"]
    )
    return NetworkSpec(
        layer_widths=tuple(int(w) for w in doc["layer_widths"]),
        perceptrons=ps,
        family=doc.get("family", "custom"),
    )


def cost_spec_to_json(cspec: CostSpec) -> dict:
    pairs = []
    for p in cspec.pairs:
        pairs.append(
            {
                "input": _encode_array(p.input_vector),
                "target_qubit_states": None
                if p.target_qubit_states is None
                else [_encode_array(s) for s in p.target_qubit_states],
                "target": None if p.target_vector is None else _encode_array(p.target_vector),
            }
        )
    return {"kind": cspec.kind, "pairs": pairs}


def cost_spec_from_json(doc: dict) -> CostSpec:
    pairs = []
    for p in doc["pairs"]:
        if p["target_qubit_states"] is not None:
            pair = TrainingPair.from_product(
                _decode_array(p["input"]),
                [_decode_array(s) for s in p["target_qubit_states"]],
            )
        else:
            pair = TrainingPair(
                input_vector=_decode_array(p["input"]),
                target_vector=_decode_array(p["target"]),
            )
        pairs.append(pair)
    return CostSpec(kind=doc["kind"], pairs=tuple(pairs))
