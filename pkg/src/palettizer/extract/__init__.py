"""Raster-to-features pipeline: data-element removal, color segmentation,
shape classification, tree construction, and feature vectors."""

from .features import FeatureLayout, FeatureVector, featurize, strip_spatial
from .raster import AnnotationSet, DataElement, RasterImage, annotations_from_json, load_annotations
from .removal import remove_data_elements
from .segment import Segment, merge_gradient_segments, segment_image, segment_regions
from .shapes import classify_shape
from .tree import build_tree

__all__ = [
    "AnnotationSet",
    "DataElement",
    "FeatureLayout",
    "FeatureVector",
    "RasterImage",
    "Segment",
    "annotations_from_json",
    "build_tree",
    "classify_shape",
    "extract_document",
    "featurize",
    "load_annotations",
    "merge_gradient_segments",
    "remove_data_elements",
    "segment_image",
    "segment_regions",
    "strip_spatial",
]


def extract_document(img: RasterImage, ann: AnnotationSet, max_nodes: int | None = None):
    """End-to-end: cleaned image -> segments -> document tree."""
    from ..model import MAX_NODES

    cleaned = remove_data_elements(img, ann)
    segs = segment_image(cleaned)
    return build_tree(img, ann, segs, max_nodes=max_nodes or MAX_NODES)
