"""Normed-gradient objectness: features, model file, training, proposals and their cache."""

from OCL.objectness.cache import ProposalCache, cache_read, cache_write
from OCL.objectness.evaluate import proposal_recall, random_baseline, random_box_proposals
from OCL.objectness.features import NgMap, WindowGrid, normed_gradient, window_grid
from OCL.objectness.model import BingModel, quantize_size, quantized_sizes
from OCL.objectness.proposer import Proposal, ProposalConfig, nms, propose, score_candidates
from OCL.objectness.sources import (
    BingProposalSource,
    CachedProposalSource,
    GroundTruthSource,
    ProposalSource,
    get_proposal_source,
    register_source,
    source_kinds,
)
from OCL.objectness.trainer import BingTrainConfig, train

__all__ = [
    "BingModel",
    "BingProposalSource",
    "BingTrainConfig",
    "CachedProposalSource",
    "GroundTruthSource",
    "NgMap",
    "Proposal",
    "ProposalCache",
    "ProposalConfig",
    "ProposalSource",
    "WindowGrid",
    "cache_read",
    "cache_write",
    "get_proposal_source",
    "nms",
    "normed_gradient",
    "propose",
    "proposal_recall",
    "quantize_size",
    "quantized_sizes",
    "random_baseline",
    "random_box_proposals",
    "register_source",
    "score_candidates",
    "source_kinds",
    "train",
    "window_grid",
]
