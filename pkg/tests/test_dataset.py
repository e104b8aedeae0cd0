import hashlib
import os

import numpy as np
import pytest

from gitseg import dataset as ds
from gitseg.core import ORGANS, BinaryMask, ClassLabels, OrganClass, SliceImage, SliceKey
from gitseg.errors import DuplicateSliceError, GitSegError, MalformedRLEError, ParseError, ShapeMismatchError, UnknownClassError
from gitseg.overlay import ALPHA, CLASS_COLORS, grayscale_base, render_overlay
from gitseg.rle import decode_rle


def put_slice(root, case, day, number, w=4, h=3, sx="1.50", value=100):
    scans = root / f"case{case}" / f"case{case}_day{day}" / "scans"
    scans.mkdir(parents=True, exist_ok=True)
    path = scans / f"slice_{number:04d}_{w}_{h}_{sx}_{sx}.png"
    ds.write_png(path, np.full((h, w), value, np.uint16))
    return path


@pytest.mark.parametrize(
    "name, expected",
    [
        ("slice_0001_266_266_1.50_1.50.png", (1, 266, 266, 1.5, 1.5)),
        ("slice_0042_360_310_1.63_1.63.png", (42, 360, 310, 1.63, 1.63)),
        ("slice_0144_234_234_1.5_1.5.png", (144, 234, 234, 1.5, 1.5)),
    ],
)
def test_parse_slice_filename(name, expected):
    assert ds.parse_slice_filename(name) == expected


@pytest.mark.parametrize(
    "name, segment",
    [
        ("scan_01.png", "scan"),
        ("slice_01_266_266_1.50_1.50.png", "01"),
        ("slice_0001_266_x_1.50_1.50.png", "x"),
        ("slice_0001_266_266_-1_1.50.png", "-1"),
        ("slice_0001_0_266_1.50_1.50.png", "'0'"),
        ("slice_0001_266_266_1.50_1.50.jpg", ".jpg"),
    ],
)
def test_parse_slice_filename_names_segment(name, segment):
    with pytest.raises(ParseError, match=segment.strip("'") if "'" not in segment else segment):
        ds.parse_slice_filename(name)
    with pytest.raises(ParseError):
        ds.parse_slice_filename("slice_0001_266_266_1.50.png")


def test_scan_dataset_empty_and_missing(tmp_path):
    assert len(ds.scan_dataset(tmp_path)) == 0
    with pytest.raises(FileNotFoundError):
        ds.scan_dataset(tmp_path / "nope")


def test_scan_dataset_one_volume(tmp_path):
    for n in (3, 1, 2):
        put_slice(tmp_path, 9, 4, n)
    (tmp_path / "README.txt").write_text("ignored")
    idx = ds.scan_dataset(tmp_path)
    assert list(idx.volumes) == [("case9", 4)]
    assert idx.shape("case9", 4) == (3, 3, 4)
    assert idx.spacing("case9", 4) == (1.5, 1.5, 3.0)
    assert [r.key.slice_index for r in idx.records()] == [0, 1, 2]
    assert idx.find(SliceKey("case9", 4, 2)).path.name.startswith("slice_0003")
    with pytest.raises(KeyError):
        idx.find(SliceKey("case9", 4, 3))


def test_scan_dataset_sorted_regardless_of_creation_order(tmp_path):
    for case, day in [(2, 1), (10, 3), (1, 7), (1, 2)]:
        put_slice(tmp_path, case, day, 1)
    vids = list(ds.scan_dataset(tmp_path).volumes)
    assert vids == sorted(vids)


def test_scan_dataset_errors(tmp_path):
    put_slice(tmp_path, 1, 1, 1)
    put_slice(tmp_path, 1, 1, 1, sx="1.60")
    with pytest.raises(DuplicateSliceError):
        ds.scan_dataset(tmp_path)
    for p in (tmp_path / "case1" / "case1_day1" / "scans").iterdir():
        p.unlink()
    put_slice(tmp_path, 1, 1, 1)
    put_slice(tmp_path, 1, 1, 2, w=5)
    with pytest.raises(ShapeMismatchError):
        ds.scan_dataset(tmp_path)
    put_slice(tmp_path, 2, 1, 1)
    put_slice(tmp_path, 2, 1, 3)
    os.remove(tmp_path / "case1" / "case1_day1" / "scans" / "slice_0002_5_3_1.50_1.50.png")
    with pytest.raises(ParseError, match="missing"):
        ds.scan_dataset(tmp_path)


def test_read_slice(tmp_path):
    p = put_slice(tmp_path, 1, 1, 1, value=40000)
    img = ds.read_slice(p)
    assert img.pixels.dtype == np.uint16 and int(img.pixels[0, 0]) == 40000
    p8 = tmp_path / "eight.png"
    ds.write_png(p8, np.full((2, 2), 255, np.uint8))
    assert int(ds.read_slice(p8).pixels[0, 0]) == 65535
    rgb = tmp_path / "rgb.png"
    ds.write_png(rgb, np.zeros((2, 2, 3), np.uint8))
    with pytest.raises(GitSegError):
        ds.read_slice(rgb)
    with pytest.raises(OSError):
        ds.read_slice(tmp_path / "missing.png")


def write_csv(path, text):
    path.write_text(text, encoding="utf-8", newline="")
    return path


def test_load_annotations(tmp_path):
    p = write_csv(
        tmp_path / "a.csv",
        "id,class,segmentation\ncase123_day20_slice_0001,stomach,1 3\ncase123_day20_slice_0001,large_bowel,\n",
    )
    rows = ds.load_annotations(p)
    assert rows[0] == ds.AnnotationRow(SliceKey("case123", 20, 0), OrganClass.STOMACH, "1 3")
    assert rows[0].key.to_id() == "case123_day20_slice_0001"
    assert rows[1].segmentation == "" and decode_rle(rows[1].segmentation, 3, 2).count == 0


def test_load_annotations_errors(tmp_path):
    head = "id,class,segmentation\n"
    with pytest.raises(UnknownClassError, match="line 2"):
        ds.load_annotations(write_csv(tmp_path / "a.csv", head + "case1_day1_slice_0001,liver,\n"))
    with pytest.raises(ParseError, match="line 1"):
        ds.load_annotations(write_csv(tmp_path / "b.csv", "id,organ,rle\n"))
    with pytest.raises(ParseError, match="line 3"):
        ds.load_annotations(write_csv(tmp_path / "c.csv", head + "case1_day1_slice_0001,stomach,\nx,stomach\n"))
    with pytest.raises(ParseError, match="line 2"):
        ds.load_annotations(write_csv(tmp_path / "d.csv", head + "patient1_slice_1,stomach,\n"))
    with pytest.raises(MalformedRLEError, match="line 2"):
        ds.load_annotations(write_csv(tmp_path / "e.csv", head + "case1_day1_slice_0001,stomach,1 2 3\n"))
    with pytest.raises(ParseError):
        ds.load_annotations(write_csv(tmp_path / "f.csv", ""))


def test_write_predictions(tmp_path):
    p = tmp_path / "p.csv"
    ds.write_predictions([], p)
    assert p.read_bytes() == b"id,class,segmentation\n"
    rows = [
        (SliceKey("case2", 1, 0), OrganClass.STOMACH, "5 2"),
        (SliceKey("case10", 1, 0), OrganClass.LARGE_BOWEL, ""),
        (SliceKey("case2", 1, 0), OrganClass.LARGE_BOWEL, "1 1"),
        (SliceKey("case2", 1, 11), OrganClass.SMALL_BOWEL, "3 4 9 1"),
    ]
    ds.write_predictions(rows, p)
    text = p.read_bytes().decode()
    assert "\r" not in text
    assert text.splitlines()[1:] == [
        "case10_day1_slice_0001,large_bowel,",
        "case2_day1_slice_0001,large_bowel,1 1",
        "case2_day1_slice_0001,stomach,5 2",
        "case2_day1_slice_0012,small_bowel,3 4 9 1",
    ]
    back = ds.load_annotations(p)
    assert sorted(back, key=ds.AnnotationRow.sort_key) == sorted(
        (ds.AnnotationRow(*r) for r in rows), key=ds.AnnotationRow.sort_key
    )
    p2 = tmp_path / "q.csv"
    ds.write_predictions(back[::-1], p2)
    assert p2.read_bytes() == p.read_bytes()


def test_custom_labels_round_trip(tmp_path):
    labels = ClassLabels("LB", "SB", "ST")
    p = tmp_path / "p.csv"
    ds.write_predictions([(SliceKey("case1", 1, 0), OrganClass.SMALL_BOWEL, "1 2")], p, labels)
    assert "SB" in p.read_text()
    assert ds.load_annotations(p, labels)[0].organ is OrganClass.SMALL_BOWEL


def test_slice_masks_missing_is_blank(tmp_path):
    put_slice(tmp_path, 1, 1, 1, w=4, h=3)
    idx = ds.scan_dataset(tmp_path)
    rec = idx.records()[0]
    masks = ds.slice_masks({(rec.key, OrganClass.STOMACH): "2 3"}, rec)
    assert masks[OrganClass.STOMACH].flat() == [0, 1, 1, 1] + [0] * 8
    assert masks[OrganClass.LARGE_BOWEL].count == 0
    with pytest.raises(MalformedRLEError, match="STOMACH"):
        ds.slice_masks({(rec.key, OrganClass.STOMACH): "12 2"}, rec)
    vols = ds.volume_masks({(rec.key, OrganClass.STOMACH): "2 3"}, idx, "case1", 1)
    assert vols[OrganClass.STOMACH].shape == (1, 3, 4) and vols[OrganClass.STOMACH].count == 3


def test_annotation_table_duplicates():
    row = ds.AnnotationRow(SliceKey("case1", 1, 0), OrganClass.STOMACH, "")
    with pytest.raises(DuplicateSliceError):
        ds.annotation_table([row, row])


def ramp_image(w=6, h=4):
    return SliceImage(np.arange(w * h, dtype=np.uint16).reshape(h, w) * 1000)


def blank(w=6, h=4):
    return {o: BinaryMask(np.zeros((h, w), bool)) for o in ORGANS}


def test_overlay_blank_is_grayscale():
    img = ramp_image()
    out = render_overlay(img, blank())
    base = grayscale_base(img)
    assert out.dtype == np.uint8 and out.shape == (4, 6, 3)
    assert all(np.array_equal(out[..., c], base) for c in range(3))
    assert base.min() == 0 and base.max() == 255


def test_overlay_full_stomach_blend():
    img = ramp_image()
    masks = blank()
    masks[OrganClass.STOMACH] = BinaryMask(np.ones((4, 6), bool))
    out = render_overlay(img, masks).astype(int)
    base = grayscale_base(img).astype(float)
    for c, color in enumerate(CLASS_COLORS[OrganClass.STOMACH]):
        assert np.array_equal(out[..., c], np.rint(0.6 * base + 0.4 * color).astype(int))


def test_overlay_order_and_outside_pixels():
    img = SliceImage(np.array([[0, 65535, 65535]], np.uint16))
    masks = {
        OrganClass.LARGE_BOWEL: BinaryMask(np.array([[0, 1, 0]], bool)),
        OrganClass.SMALL_BOWEL: BinaryMask(np.array([[0, 1, 0]], bool)),
        OrganClass.STOMACH: BinaryMask(np.array([[0, 0, 0]], bool)),
    }
    out = render_overlay(img, masks)
    # 255 -> red at 0.4 -> green at 0.4
    r = 0.6 * (0.6 * 255 + 0.4 * 255)
    g = 0.6 * (0.6 * 255) + 0.4 * 255
    b = 0.6 * (0.6 * 255)
    assert out[0, 1].tolist() == [round(r), round(g), round(b)]
    assert out[0, 0].tolist() == [0, 0, 0] and out[0, 2].tolist() == [255, 255, 255]
    assert ALPHA == 0.4
    with pytest.raises(ShapeMismatchError):
        render_overlay(img, blank())


def test_overlay_golden(tmp_path):
    h, w = 48, 64
    yy, xx = np.mgrid[0:h, 0:w]
    img = SliceImage(((xx * 700 + yy * 300) % 65536).astype(np.uint16))
    masks = {
        OrganClass.LARGE_BOWEL: BinaryMask((yy - 20) ** 2 + (xx - 20) ** 2 < 150),
        OrganClass.SMALL_BOWEL: BinaryMask((yy - 25) ** 2 + (xx - 35) ** 2 < 150),
        OrganClass.STOMACH: BinaryMask((xx > 40) & (yy > 30)),
    }
    out = render_overlay(img, masks)
    p = tmp_path / "overlay.png"
    ds.write_png(p, out)
    assert np.array_equal(ds.read_png(p), out)
    digest = hashlib.sha256(out.tobytes()).hexdigest()
    assert digest == GOLDEN_OVERLAY


# visually checked: red, green, blue translucent fills over a diagonal ramp
GOLDEN_OVERLAY = "0c9c285d252fc13eb139dfc1c9dcb7cd7c71238f262b1160bd8c6fe77d493bcf"
