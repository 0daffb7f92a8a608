"""InfoNCE with exp(cosine / tau) scores; keys and negatives are stop-gradient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from OCL.errors import TrainingError


def _logsumexp(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    top = np.max(logits, axis=axis, keepdims=True)
    return np.squeeze(top, axis=axis) + np.log(np.sum(np.exp(logits - top), axis=axis))


def _check_nonzero(name: str, v: np.ndarray) -> None:
    norms = np.linalg.norm(np.atleast_2d(v), axis=-1)
    if np.any(norms == 0.0):
        raise TrainingError(f"{name} contains a zero-length vector; normalise first", code="ZERO_NORM")


def info_nce(q: np.ndarray, k_pos: np.ndarray, negatives: np.ndarray, tau: float) -> Tuple[float, np.ndarray]:
    """Loss -log(e^{q.k/tau} / (e^{q.k/tau} + sum_j e^{q.n_j/tau})) and its gradient w.r.t. q."""
    if tau <= 0:
        raise TrainingError(f"temperature must be positive, got {tau}")
    q = np.asarray(q, dtype=np.float64)
    k_pos = np.asarray(k_pos, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, q.shape[0])
    _check_nonzero("q", q)
    _check_nonzero("k_pos", k_pos)
    if negatives.size:
        _check_nonzero("negatives", negatives)
    keys = np.vstack([k_pos[None, :], negatives])
    logits = keys @ q / tau
    loss = float(_logsumexp(logits) - logits[0])
    p = np.exp(logits - np.max(logits))
    p /= p.sum()
    grad = (p @ keys - k_pos) / tau
    return loss, grad


@dataclass
class BatchLoss:
    loss: float
    grad_q: np.ndarray
    pos_sim: np.ndarray
    neg_sim_sum: float
    neg_count: int


def info_nce_batch(q: np.ndarray, k_pos: np.ndarray, negatives: np.ndarray, tau: float) -> BatchLoss:
    """Mean InfoNCE over rows of q; grad_q already carries the 1/B of the mean."""
    if tau <= 0:
        raise TrainingError(f"temperature must be positive, got {tau}")
    batch = q.shape[0]
    pos = np.sum(q * k_pos, axis=1)
    if negatives.size:
        neg = q @ negatives.T
        logits = np.concatenate([pos[:, None], neg], axis=1) / tau
    else:
        neg = np.zeros((batch, 0))
        logits = pos[:, None] / tau
    losses = _logsumexp(logits, axis=1) - logits[:, 0]
    p = np.exp(logits - np.max(logits, axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    grad = p[:, :1] * k_pos - k_pos
    if negatives.size:
        grad = grad + p[:, 1:] @ negatives
    grad /= tau * batch
    return BatchLoss(
        loss=float(np.mean(losses)),
        grad_q=grad,
        pos_sim=pos,
        neg_sim_sum=float(neg.sum()),
        neg_count=int(neg.size),
    )
