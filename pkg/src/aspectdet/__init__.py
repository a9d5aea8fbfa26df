"""Unsupervised aspect detection toolkit.

Pipeline: corpus preprocessing -> skip-gram word embeddings -> contrastive
teacher with smooth attention -> human aspect mapping -> distilled student
classifier -> segment-level evaluation.
"""

__version__ = "0.1.0"
