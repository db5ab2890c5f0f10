"""Pedestrian trajectory prediction with per-step graph attention over
edge features, gated causal temporal convolutions, and multimodal decoding,
built on a self-contained float64 reverse-mode autodiff core."""

__version__ = "0.1.0"
