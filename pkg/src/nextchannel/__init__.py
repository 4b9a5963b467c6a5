"""Segmentation-free cell phenotyping for multiplex imaging.

Cell-centered patches go through a grouped-convolution encoder that keeps
each imaging channel's features separate up to an interpretability stage,
trained with multi-view contrastive learning; embeddings are clustered on a
Jaccard-weighted kNN graph and clusters are phenotyped from per-channel
activation profiles.
"""

__version__ = "0.1.0"
