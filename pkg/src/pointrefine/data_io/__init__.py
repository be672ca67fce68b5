"""Annotation, prediction and image files, and the synthetic dataset."""

from .dataset import load_dataset, write_dataset
from .images import read_image, write_image
from .predictions import load_predictions, save_predictions
from .synthetic import SynthConfig, generate_synthetic, image_features, split_counts
from .via import AnnotationSet, ImageInfo, export_via, load_via, parse_via

__all__ = [
    "AnnotationSet",
    "ImageInfo",
    "SynthConfig",
    "export_via",
    "generate_synthetic",
    "image_features",
    "load_dataset",
    "load_predictions",
    "load_via",
    "parse_via",
    "read_image",
    "save_predictions",
    "split_counts",
    "write_dataset",
    "write_image",
]
