import numpy as np

from palettizer import kernels
from palettizer.extract import (
    AnnotationSet,
    DataElement,
    RasterImage,
    classify_shape,
    merge_gradient_segments,
    remove_data_elements,
    segment_regions,
)
from palettizer.extract.segment import Segment, segments_label_map
from palettizer.synth import (
    flat_card,
    gradient_card,
    rotated_shape_suite,
    shape_mask,
    three_shape_card,
)


def solid(width, height, rgb):
    px = np.empty((height, width, 3), dtype=np.uint8)
    px[:, :] = rgb
    return RasterImage(px)


def test_removal_flat_canvas():
    img = solid(60, 40, (10, 20, 200))
    ann = AnnotationSet(data_elements=(DataElement((10, 10, 20, 12), "text"),))
    out = remove_data_elements(img, ann)
    assert (out.pixels == np.array([10, 20, 200], dtype=np.uint8)).all()


def test_removal_takes_surrounding_shape_color():
    img = solid(100, 80, (240, 240, 240))
    circle = shape_mask("circle", 100, 80, 50, 40, 30)
    img.pixels[circle] = (200, 30, 30)
    ann = AnnotationSet(data_elements=(DataElement((42, 34, 16, 12), "text"),))
    img.pixels[34:46, 42:58] = (255, 255, 255)  # the "text"
    out = remove_data_elements(img, ann)
    assert (out.pixels[34:46, 42:58] == np.array([200, 30, 30], dtype=np.uint8)).all()


def test_removal_empty_annotations_identity():
    img = solid(30, 30, (1, 2, 3))
    out = remove_data_elements(img, AnnotationSet())
    assert np.array_equal(out.pixels, img.pixels)


def test_segment_two_halves():
    img = solid(80, 40, (250, 250, 250))
    img.pixels[:, 40:] = (30, 30, 160)
    segs = segment_regions(img)
    assert len(segs) == 2


def test_segment_uniform():
    segs = segment_regions(solid(50, 50, (77, 88, 99)))
    assert len(segs) == 1


def test_segment_three_shape_card_exact_masks():
    card = three_shape_card()
    segs = segment_regions(card.image)
    assert len(segs) == len(card.masks) == 4
    for truth in card.masks:
        match = [s for s in segs if np.array_equal(s.mask, truth)]
        assert len(match) == 1


def test_segment_partition_property():
    rng = np.random.default_rng(99)
    for _ in range(5):
        card = flat_card(rng)
        segs = segment_regions(card.image)
        counts = np.zeros(card.image.pixels.shape[:2], dtype=int)
        for s in segs:
            counts += s.mask.astype(int)
        assert (counts == 1).all()


def test_merge_identical_hue_gradient():
    g = gradient_card(np.random.default_rng(4))
    pre = segment_regions(g.image)
    assert len(pre) > 2  # the gradient fragments
    post = merge_gradient_segments(pre)
    assert len(post) == 2
    shape_seg = [s for s in post if np.array_equal(s.mask, g.masks[1])]
    assert len(shape_seg) == 1


def test_merge_keeps_distinct_hues():
    img = solid(80, 40, (200, 40, 40))
    img.pixels[:, 40:] = (40, 60, 200)
    segs = segment_regions(img)
    merged = merge_gradient_segments(segs)
    assert len(merged) == 2


def test_merge_single_segment_identity():
    segs = segment_regions(solid(40, 40, (9, 9, 9)))
    merged = merge_gradient_segments(segs)
    assert len(merged) == 1


def test_merge_idempotent_and_nonincreasing():
    rng = np.random.default_rng(31)
    card = flat_card(rng)
    segs = segment_regions(card.image)
    once = merge_gradient_segments(segs)
    twice = merge_gradient_segments(once)
    assert len(once) <= len(segs)
    assert len(twice) == len(once)
    m1 = segments_label_map(once)
    m2 = segments_label_map(twice)
    assert np.array_equal(m1, m2)


def test_merge_achromatic_by_lightness():
    img = solid(60, 60, (128, 128, 128))
    img.pixels[:30, :] = (131, 131, 131)  # near-identical gray, split by exact color
    segs = segment_regions(img)
    merged = merge_gradient_segments(segs)
    assert len(merged) == 1


def make_segment(mask):
    return Segment(id=0, mask=mask, mean_lab=np.zeros(3), bbox=(0, 0, 1, 1), area=int(mask.sum()))


def test_classify_canonical_shapes():
    assert classify_shape(make_segment(shape_mask("triangle", 160, 160, 80, 80, 55))) == "triangle"
    assert classify_shape(make_segment(shape_mask("circle", 160, 160, 80, 80, 55))) == "circle"
    assert classify_shape(make_segment(shape_mask("square", 160, 160, 80, 80, 55))) == "square"
    assert classify_shape(make_segment(shape_mask("rectangle", 160, 160, 80, 80, 60))) == "rectangle"
    assert classify_shape(make_segment(shape_mask("pentagon", 160, 160, 80, 80, 55))) == "pentagon"


def test_classify_rotation_sweep():
    wrong = [
        (shape, rot)
        for shape, rot, mask in rotated_shape_suite()
        if classify_shape(make_segment(mask)) != shape
    ]
    assert len(wrong) <= 6  # >= 95% of 120


def test_segment_means_are_lab():
    img = solid(40, 40, (255, 0, 0))
    seg = segment_regions(img)[0]
    red = kernels.srgb_to_lab(np.array([[255.0, 0.0, 0.0]]))[0]
    assert np.allclose(seg.mean_lab, red, atol=1e-9)
