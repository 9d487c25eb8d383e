"""Deterministic generator and evaluation workbench for visually grounded
size-adjective datasets: symbolic scenes, rendered images, template
sentences with vague-threshold ground truth, and baseline strategies."""

__version__ = "0.1.0"
