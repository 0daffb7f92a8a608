"""Dense encoder + two projection heads with hand-written backward pass.

Parameters live in a flat ``{name: ndarray}`` dict (f64)::

    encoder.w1 (D, H)   encoder.b1 (H,)     flatten -> dense H -> ReLU
    encoder.w2 (H, F)   encoder.b2 (F,)     -> dense F  = backbone feature
    head_obj.w1 (F, P)  head_obj.b1 (P,)    -> dense P -> ReLU
    head_obj.w2 (P, E)  head_obj.b2 (E,)    -> dense E -> L2 normalise
    head_ctx.*          same shapes as head_obj
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from OCL.errors import TrainingError
from OCL.imgcore import Rng

Params = Dict[str, np.ndarray]

HEAD_OBJ = "head_obj"
HEAD_CTX = "head_ctx"
HEADS = (HEAD_OBJ, HEAD_CTX)


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    hidden: int = 512
    feature_dim: int = 256
    head_hidden: int = 256
    embed_dim: int = 64

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes = {
            "encoder.w1": (self.input_dim, self.hidden),
            "encoder.b1": (self.hidden,),
            "encoder.w2": (self.hidden, self.feature_dim),
            "encoder.b2": (self.feature_dim,),
        }
        for head in HEADS:
            shapes[f"{head}.w1"] = (self.feature_dim, self.head_hidden)
            shapes[f"{head}.b1"] = (self.head_hidden,)
            shapes[f"{head}.w2"] = (self.head_hidden, self.embed_dim)
            shapes[f"{head}.b2"] = (self.embed_dim,)
        return shapes


def init_params(arch: Architecture, rng: Rng) -> Params:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases; drawn in sorted-name order."""
    params: Params = {}
    for name, shape in sorted(arch.shapes().items()):
        if name.endswith(("b1", "b2")):
            params[name] = np.zeros(shape)
        else:
            limit = 1.0 / np.sqrt(shape[0])
            params[name] = np.asarray(rng.uniform(-limit, limit, shape), dtype=np.float64)
    return params


def copy_params(params: Params) -> Params:
    return {k: v.copy() for k, v in params.items()}


@dataclass
class HeadTape:
    rows: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray
    z: np.ndarray
    norm: np.ndarray


@dataclass
class Tape:
    x: np.ndarray
    pre1: np.ndarray
    h1: np.ndarray
    features: np.ndarray
    embeddings: np.ndarray
    heads: Dict[str, HeadTape] = field(default_factory=dict)


def encode(params: Params, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    w1 = params["encoder.w1"]
    if x.ndim != 2 or x.shape[1] != w1.shape[0]:
        raise TrainingError(
            f"encoder expects (batch, {w1.shape[0]}) inputs, got {tuple(x.shape)}", code="INPUT_SHAPE"
        )
    pre1 = x @ w1 + params["encoder.b1"]
    h1 = np.maximum(pre1, 0.0)
    features = h1 @ params["encoder.w2"] + params["encoder.b2"]
    return pre1, h1, features


def forward(params: Params, x: np.ndarray, heads: Sequence[str]) -> Tuple[np.ndarray, np.ndarray, Tape]:
    """Backbone features, unit-norm embeddings via the per-row head, and the activation tape."""
    x = np.asarray(x, dtype=np.float64)
    pre1, h1, features = encode(params, x)
    if len(heads) != x.shape[0]:
        raise TrainingError(f"{len(heads)} head labels for a batch of {x.shape[0]}", code="INPUT_SHAPE")
    embed_dim = params[f"{HEAD_OBJ}.w2"].shape[1]
    embeddings = np.zeros((x.shape[0], embed_dim))
    tape = Tape(x=x, pre1=pre1, h1=h1, features=features, embeddings=embeddings)
    labels = np.asarray(heads)
    for head in HEADS:
        rows = np.flatnonzero(labels == head)
        if rows.size == 0:
            continue
        pre = features[rows] @ params[f"{head}.w1"] + params[f"{head}.b1"]
        hidden = np.maximum(pre, 0.0)
        z = hidden @ params[f"{head}.w2"] + params[f"{head}.b2"]
        norm = np.linalg.norm(z, axis=1, keepdims=True)
        if np.any(norm <= 0.0):
            raise TrainingError("projection output has zero length; cannot normalise", code="ZERO_NORM")
        embeddings[rows] = z / norm
        tape.heads[head] = HeadTape(rows=rows, pre=pre, hidden=hidden, z=z, norm=norm)
    unknown = set(labels.tolist()) - set(HEADS)
    if unknown:
        raise TrainingError(f"unknown projection head(s) {sorted(unknown)}", code="UNKNOWN_HEAD")
    return features, embeddings, tape


def backward(params: Params, tape: Tape, grad_embeddings: np.ndarray) -> Params:
    """Gradients of a scalar loss w.r.t. every parameter, given dL/d(embeddings)."""
    grads: Params = {k: np.zeros_like(v) for k, v in params.items()}
    grad_features = np.zeros_like(tape.features)
    for head, ht in tape.heads.items():
        e = tape.embeddings[ht.rows]
        de = grad_embeddings[ht.rows]
        # d(z/|z|) = (I - e e^T) / |z|
        dz = (de - e * np.sum(e * de, axis=1, keepdims=True)) / ht.norm
        grads[f"{head}.w2"] = ht.hidden.T @ dz
        grads[f"{head}.b2"] = dz.sum(axis=0)
        dhidden = dz @ params[f"{head}.w2"].T
        dpre = dhidden * (ht.pre > 0)
        grads[f"{head}.w1"] = tape.features[ht.rows].T @ dpre
        grads[f"{head}.b1"] = dpre.sum(axis=0)
        grad_features[ht.rows] += dpre @ params[f"{head}.w1"].T
    grads["encoder.w2"] = tape.h1.T @ grad_features
    grads["encoder.b2"] = grad_features.sum(axis=0)
    dh1 = grad_features @ params["encoder.w2"].T
    dpre1 = dh1 * (tape.pre1 > 0)
    grads["encoder.w1"] = tape.x.T @ dpre1
    grads["encoder.b1"] = dpre1.sum(axis=0)
    return grads


def momentum_update(key: Params, query: Params, m: float) -> Params:
    """theta_k <- m * theta_k + (1 - m) * theta_q, in place; returns ``key``."""
    if set(key) != set(query):
        raise TrainingError("key and query parameter sets differ", code="SHAPE_MISMATCH")
    for name, q in query.items():
        k = key[name]
        if k.shape != q.shape:
            raise TrainingError(f"{name}: key shape {k.shape} != query shape {q.shape}", code="SHAPE_MISMATCH")
        if m == 1.0:
            continue
        if m == 0.0:
            k[...] = q
        else:
            k *= m
            k += (1.0 - m) * q
    return key


def route_heads(roles_a: List[str], roles_b: List[str], dual_heads: bool) -> Tuple[List[str], List[str]]:
    """Per-row heads: object crops use head_obj, context crops head_ctx, same-role pairs share head_obj."""
    heads_a, heads_b = [], []
    for ra, rb in zip(roles_a, roles_b):
        if not dual_heads or ra == rb:
            heads_a.append(HEAD_OBJ)
            heads_b.append(HEAD_OBJ)
        else:
            heads_a.append(HEAD_OBJ if ra == "object" else HEAD_CTX)
            heads_b.append(HEAD_OBJ if rb == "object" else HEAD_CTX)
    return heads_a, heads_b
