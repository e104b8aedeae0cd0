import numpy as np
import pytest
from hypothesis import given, strategies as st

from gitseg.core import ORGANS, BinaryMask, NormalizedImage, OrganClass, ProbMap, SliceKey
from gitseg.ensemble import (
    ClassPresence,
    ConstantStub,
    FileBacked,
    OracleFromTruth,
    binarize,
    combine,
    gate,
    predict_slice,
    read_probmaps,
    write_probmaps,
)
from gitseg.errors import GitSegError, PredictorError, ShapeMismatchError
from gitseg.preprocess import stack_25d

KEY = SliceKey("case2", 5, 0)


def inputs(w=6, h=4):
    img = NormalizedImage(np.random.default_rng(0).random((h, w)))
    return stack_25d([img], 0), img


def test_gate_examples():
    p = ClassPresence({OrganClass.LARGE_BOWEL: 0.2, OrganClass.SMALL_BOWEL: 0.5, OrganClass.STOMACH: 0.9})
    assert gate(p, 0.5) == {OrganClass.LARGE_BOWEL: False, OrganClass.SMALL_BOWEL: True, OrganClass.STOMACH: True}
    assert not any(gate(ClassPresence.uniform(0.0), 0.5).values())
    with pytest.raises(GitSegError):
        gate(p, 1.0)
    with pytest.raises(ValueError):
        ClassPresence.uniform(1.2)
    with pytest.raises(ValueError):
        ClassPresence({OrganClass.STOMACH: 1.0})


def test_combine_examples():
    a = ProbMap(np.array([[0.2, 1.0]]))
    b = ProbMap(np.array([[0.4, 0.0]]))
    assert combine([a, b]).values.tolist() == [[pytest.approx(0.3), 0.5]]
    assert combine([a]) == a
    with pytest.raises(GitSegError):
        combine([])
    with pytest.raises(ShapeMismatchError):
        combine([a, ProbMap(np.zeros((2, 1)))])


@given(st.lists(st.lists(st.floats(0, 1), min_size=4, max_size=4), min_size=1, max_size=5))
def test_combine_bounded_and_order_free(rows):
    maps = [ProbMap(np.array(r).reshape(2, 2)) for r in rows]
    out = combine(maps).values
    stacked = np.stack([m.values for m in maps])
    assert np.all(out >= stacked.min(axis=0)) and np.all(out <= stacked.max(axis=0))
    assert np.array_equal(combine(maps[::-1]).values, out)


def test_binarize():
    m = ProbMap(np.array([[0.49, 0.5, 0.51]]))
    assert binarize(m, 0.5).flat() == [0, 1, 1]
    assert binarize(ProbMap.constant(3, 2, 0.0)).count == 0


def test_predict_slice_constant_pathways():
    s25, gray = inputs()
    out = predict_slice(s25, gray, ConstantStub(presence=1.0), ConstantStub(0.9), ConstantStub(0.3), 0.5, 0.5)
    # mean 0.6 >= 0.5 everywhere
    assert all(out[o].count == 24 for o in ORGANS)
    out = predict_slice(s25, gray, ConstantStub(presence=1.0), ConstantStub(0.6), ConstantStub(0.3), 0.5, 0.5)
    assert all(out[o].count == 0 for o in ORGANS)


def test_predict_slice_oracle_round_trip():
    s25, gray = inputs(8, 5)
    rng = np.random.default_rng(3)
    truth = {KEY: {o: BinaryMask(rng.random((5, 8)) < 0.4) for o in ORGANS}}
    oracle = OracleFromTruth(truth)
    out = predict_slice(s25, gray, ConstantStub(presence=1.0), oracle, oracle, key=KEY)
    assert out == truth[KEY]
    soft = OracleFromTruth(truth, confidence=0.8)
    assert predict_slice(s25, gray, soft, soft, soft, key=KEY) == truth[KEY]


class Exploding:
    def __init__(self):
        self.calls = 0

    def classify(self, image, key):
        raise RuntimeError("boom")

    def segment(self, image, key):
        self.calls += 1
        return {o: ProbMap.constant(image.width, image.height, 1.0) for o in ORGANS}


@pytest.mark.parametrize("p", [0.0, 0.1, 0.4999])
def test_gated_absent_is_always_blank(p):
    s25, gray = inputs()
    path = Exploding()
    out = predict_slice(s25, gray, ConstantStub(presence=p), path, path, key=KEY)
    assert all(out[o].count == 0 for o in ORGANS)
    assert path.calls == 0


def test_partial_gate():
    s25, gray = inputs()
    cls = FileBacked(presence={KEY: ClassPresence({OrganClass.LARGE_BOWEL: 1.0, OrganClass.SMALL_BOWEL: 0.0, OrganClass.STOMACH: 0.7})})
    out = predict_slice(s25, gray, cls, ConstantStub(1.0), ConstantStub(1.0), key=KEY)
    assert [out[o].count for o in ORGANS] == [24, 0, 24]


def test_predictor_errors_carry_slice_id():
    s25, gray = inputs()
    with pytest.raises(PredictorError, match="case2_day5_slice_0001.*boom"):
        predict_slice(s25, gray, Exploding(), ConstantStub(), ConstantStub(), key=KEY)

    class Wrong:
        def segment(self, image, key):
            return {o: ProbMap.constant(2, 2, 1.0) for o in ORGANS}

    with pytest.raises(PredictorError, match="2x2"):
        predict_slice(s25, gray, ConstantStub(), Wrong(), ConstantStub(), key=KEY)
    with pytest.raises(ShapeMismatchError):
        predict_slice(s25, inputs(5, 4)[1], ConstantStub(), ConstantStub(), ConstantStub())
    with pytest.raises(PredictorError, match="no ground truth"):
        o = OracleFromTruth({})
        predict_slice(s25, gray, o, o, o, key=KEY)


def test_probmap_file_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    maps = {o: ProbMap(rng.random((3, 5)).astype(np.float32).astype(float)) for o in ORGANS}
    path = tmp_path / f"{KEY.to_id()}.bin"
    write_probmaps(path, maps)
    raw = path.read_bytes()
    assert raw[:12] == (5).to_bytes(4, "little") + (3).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(raw) == 12 + 3 * 15 * 4
    assert read_probmaps(path) == maps
    assert FileBacked(tmp_path).segment(None, KEY) == maps


def test_probmap_file_errors(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"\x01\x00")
    with pytest.raises(GitSegError, match="truncated"):
        read_probmaps(p)
    p.write_bytes(np.array([2, 2, 2], "<u4").tobytes() + bytes(32))
    with pytest.raises(GitSegError, match="classes"):
        read_probmaps(p)
    p.write_bytes(np.array([2, 2, 3], "<u4").tobytes() + bytes(40))
    with pytest.raises(GitSegError, match="bytes"):
        read_probmaps(p)
    p.write_bytes(np.array([1, 1, 3], "<u4").tobytes() + np.array([0.5, 2.0, 0.1], "<f4").tobytes())
    with pytest.raises(GitSegError):
        read_probmaps(p)
    with pytest.raises(PredictorError):
        FileBacked().segment(None, KEY)
    with pytest.raises(PredictorError):
        FileBacked(tmp_path).classify(None, KEY)
