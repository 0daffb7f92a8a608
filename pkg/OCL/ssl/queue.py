"""FIFO ring of key embeddings used as negatives, with per-entry sample tags."""

from __future__ import annotations

import numpy as np

from OCL.errors import TrainingError


class NegativeQueue:
    def __init__(self, capacity: int, dim: int):
        if capacity < 0:
            raise TrainingError(f"queue capacity must be >= 0, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self.data = np.zeros((capacity, dim))
        self.tags = np.full(capacity, -1, dtype=np.int64)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def negatives(self) -> np.ndarray:
        return self.data[: self.size] if self.size < self.capacity else self.data

    def ordered_tags(self) -> np.ndarray:
        """Tags oldest first."""
        if self.size < self.capacity:
            return self.tags[: self.size].copy()
        return np.roll(self.tags, -self.ptr)

    def enqueue(self, keys: np.ndarray, tags: np.ndarray) -> None:
        """Overwrite the oldest rows; the batch never straddles the ring end when capacity % batch == 0."""
        if self.capacity == 0:
            return
        keys = np.asarray(keys, dtype=np.float64)
        tags = np.asarray(tags, dtype=np.int64)
        if keys.shape[1] != self.dim or keys.shape[0] != tags.shape[0]:
            raise TrainingError(f"cannot enqueue keys {keys.shape} with {tags.shape[0]} tags", code="SHAPE_MISMATCH")
        for row, tag in zip(keys, tags):
            self.data[self.ptr] = row
            self.tags[self.ptr] = tag
            self.ptr = (self.ptr + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def load(self, data: np.ndarray, tags: np.ndarray, ptr: int, size: int) -> "NegativeQueue":
        if data.shape != (self.capacity, self.dim) or tags.shape != (self.capacity,):
            raise TrainingError("queue tensors do not match capacity", code="SHAPE_MISMATCH")
        self.data = np.array(data, dtype=np.float64)
        self.tags = np.asarray(tags).astype(np.int64)
        self.ptr = int(ptr)
        self.size = int(size)
        return self
