import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gitseg.core import BinaryMask
from gitseg.errors import MalformedRLEError
from gitseg.rle import decode_rle, encode_rle, foreground_count, is_canonical


@pytest.mark.parametrize(
    "rle, w, h, expected",
    [
        ("", 2, 2, [0, 0, 0, 0]),
        ("1 3", 2, 2, [1, 1, 1, 0]),
        ("1 2 5 1", 2, 3, [1, 1, 0, 0, 1, 0]),
    ],
)
def test_decode_examples(rle, w, h, expected):
    assert decode_rle(rle, w, h).flat() == expected


def test_decode_is_row_major():
    m = decode_rle("2 2", 3, 2)
    assert m.bits.tolist() == [[False, True, True], [False, False, False]]


@pytest.mark.parametrize(
    "rle, kind, token",
    [
        ("4 2", "out-of-bounds", 1),
        ("1", "odd-count", 0),
        ("1 2 3", "odd-count", 2),
        ("1 x", "not-integer", 1),
        ("1.0 2", "not-integer", 0),
        ("-1 2", "not-integer", 0),
        ("0 2", "non-positive", 0),
        ("1 0", "non-positive", 1),
        ("1 3 2 1", "overlap", 2),
        ("3 1 1 3", "overlap", 0),
    ],
)
def test_decode_errors(rle, kind, token):
    with pytest.raises(MalformedRLEError) as err:
        decode_rle(rle, 2, 2)
    assert err.value.kind == kind
    assert err.value.token == token


def test_encode_examples():
    assert encode_rle(BinaryMask(np.zeros((2, 2)))) == ""
    assert encode_rle(BinaryMask(np.ones((2, 2)))) == "1 4"
    assert encode_rle(BinaryMask.from_flat(2, 3, [1, 1, 0, 0, 1, 0])) == "1 2 5 1"


def test_adjacent_runs_are_merged():
    m = decode_rle("1 2 3 2", 2, 2)
    assert m.flat() == [1, 1, 1, 1]
    assert encode_rle(m) == "1 4"
    assert not is_canonical("1 2 3 2")
    assert is_canonical("1 4")


def test_is_canonical():
    for text in ("", "1 4", "1 2 5 1"):
        assert is_canonical(text)
    for text in (" 1 4", "1  4", "01 4", "5 1 1 2", "1 4 "):
        assert not is_canonical(text)


masks = st.integers(1, 24).flatmap(
    lambda w: st.integers(1, 24).flatmap(
        lambda h: st.lists(st.booleans(), min_size=w * h, max_size=w * h).map(
            lambda bits: BinaryMask(np.array(bits, dtype=bool).reshape(h, w))
        )
    )
)


@given(masks)
def test_round_trip_small(m):
    text = encode_rle(m)
    assert is_canonical(text)
    assert decode_rle(text, m.width, m.height) == m
    assert foreground_count(text) == m.count


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_round_trip_full_size(seed, density):
    rng = np.random.default_rng(seed)
    m = BinaryMask(rng.random((384, 320)) < density)
    text = encode_rle(m)
    assert decode_rle(text, 320, 384) == m
    assert is_canonical(text)


@given(
    st.lists(st.tuples(st.integers(0, 3), st.integers(1, 4)), min_size=0, max_size=6)
)
def test_noncanonical_inputs_canonicalize(gaps_and_lengths):
    # build non-overlapping runs that may touch (gap 0 = adjacent)
    runs, pos = [], 1
    for gap, length in gaps_and_lengths:
        pos += gap
        runs.append((pos, length))
        pos += length
    n = pos + 2
    text = " ".join(f"{s} {l}" for s, l in runs)
    m = decode_rle(text, n, 1)
    canon = encode_rle(m)
    assert is_canonical(canon)
    assert decode_rle(canon, n, 1) == m
    assert foreground_count(text) == m.count
