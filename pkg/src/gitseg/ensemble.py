"""Presence gating and two-pathway probability averaging.

A classifier decides, per organ, whether the organ is present in a slice.
Absent organs get a blank mask outright. For present organs the 2.5D
pathway and the grayscale pathway each produce a probability map; the maps
are averaged and thresholded.

Predictors are duck-typed: anything with ``classify(image, key)`` and/or
``segment(image, key)`` works. Network implementations live outside this
package; the stubs here cover testing and precomputed outputs.

Probability-map files (``<slice id>.bin``) are little-endian: three uint32
header words ``width, height, n_classes`` followed by ``n_classes`` planes
of row-major float32, in organ order large bowel, small bowel, stomach.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from .core import ORGANS, BinaryMask, NormalizedImage, OrganClass, ProbMap, SliceKey, blank_mask
from .errors import GitSegError, PredictorError, ShapeMismatchError
from .preprocess.pipeline import Stack25

DEFAULT_GATE_THRESHOLD = 0.5
DEFAULT_BIN_THRESHOLD = 0.5

_HEADER = struct.Struct("<III")

ModelInput = Union[NormalizedImage, Stack25]


@dataclass(frozen=True)
class ClassPresence:
    probabilities: Mapping[OrganClass, float]

    def __post_init__(self):
        if set(self.probabilities) != set(ORGANS):
            raise ValueError("presence needs one probability per organ class")
        for organ, p in self.probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{organ.name} presence {p!r} outside [0, 1]")

    @classmethod
    def uniform(cls, p: float) -> "ClassPresence":
        return cls({o: p for o in ORGANS})

    def __getitem__(self, organ: OrganClass) -> float:
        return self.probabilities[organ]


class Predictor(Protocol):
    def classify(self, image: ModelInput, key: SliceKey) -> ClassPresence: ...

    def segment(self, image: ModelInput, key: SliceKey) -> Mapping[OrganClass, ProbMap]: ...


def _check_threshold(thr: float) -> None:
    if not 0.0 < thr < 1.0:
        raise GitSegError(f"threshold must be in (0, 1), got {thr!r}")


def gate(presence: ClassPresence, threshold: float = DEFAULT_GATE_THRESHOLD) -> dict[OrganClass, bool]:
    """Organ is present iff its probability reaches ``threshold`` (ties pass)."""
    _check_threshold(threshold)
    return {o: presence[o] >= threshold for o in ORGANS}


def combine(maps: Sequence[ProbMap]) -> ProbMap:
    if len(maps) == 0:
        raise GitSegError("cannot combine an empty list of probability maps")
    shape = maps[0].shape
    for i, m in enumerate(maps):
        if m.shape != shape:
            raise ShapeMismatchError(f"probability map {i} has shape {m.shape}, expected {shape}")
    stacked = np.stack([m.values for m in maps])
    # a sorted sum makes the mean independent of list order
    total = np.sort(stacked, axis=0).sum(axis=0)
    mean = total / len(maps)
    return ProbMap(np.clip(mean, stacked.min(axis=0), stacked.max(axis=0)))


def binarize(prob: ProbMap, threshold: float = DEFAULT_BIN_THRESHOLD) -> BinaryMask:
    _check_threshold(threshold)
    return BinaryMask(prob.values >= threshold)


def _call(role: str, key: Optional[SliceKey], fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        where = key.to_id() if key is not None else "<unknown slice>"
        raise PredictorError(f"{where}: {role} predictor failed: {exc}") from exc


def _checked_maps(role, key, maps, width, height) -> Mapping[OrganClass, ProbMap]:
    where = key.to_id() if key is not None else "<unknown slice>"
    missing = set(ORGANS) - set(maps)
    if missing:
        raise PredictorError(f"{where}: {role} returned no map for {sorted(o.name for o in missing)}")
    for organ in ORGANS:
        m = maps[organ]
        if m.shape != (height, width):
            raise PredictorError(
                f"{where}: {role} map for {organ.name} is {m.width}x{m.height}, "
                f"input is {width}x{height}"
            )
    return maps


def predict_slice(
    input25: Stack25,
    input_gray: NormalizedImage,
    classifier: Predictor,
    path_a: Predictor,
    path_b: Predictor,
    gate_thr: float = DEFAULT_GATE_THRESHOLD,
    bin_thr: float = DEFAULT_BIN_THRESHOLD,
    key: Optional[SliceKey] = None,
) -> dict[OrganClass, BinaryMask]:
    """Gated, averaged and thresholded masks for one slice."""
    _check_threshold(gate_thr)
    _check_threshold(bin_thr)
    w, h = input_gray.width, input_gray.height
    if (input25.width, input25.height) != (w, h):
        raise ShapeMismatchError(
            f"2.5D input is {input25.width}x{input25.height}, grayscale input is {w}x{h}"
        )
    presence = _call("classifier", key, classifier.classify, input_gray, key)
    present = gate(presence, gate_thr)
    out = {o: blank_mask(w, h) for o in ORGANS}
    if not any(present.values()):
        return out
    maps_a = _checked_maps("pathway A", key, _call("pathway A", key, path_a.segment, input25, key), w, h)
    maps_b = _checked_maps("pathway B", key, _call("pathway B", key, path_b.segment, input_gray, key), w, h)
    for organ in ORGANS:
        if present[organ]:
            out[organ] = binarize(combine([maps_a[organ], maps_b[organ]]), bin_thr)
    return out


class ConstantStub:
    """Same probability everywhere, same presence for every organ."""

    def __init__(self, probability: float = 0.5, presence: float = 1.0):
        self.probability = probability
        self.presence = ClassPresence.uniform(presence)

    def classify(self, image, key=None) -> ClassPresence:
        return self.presence

    def segment(self, image, key=None) -> dict[OrganClass, ProbMap]:
        m = ProbMap.constant(image.width, image.height, self.probability)
        return {o: m for o in ORGANS}


class OracleFromTruth:
    """Answers from known ground truth, looked up by slice key.

    ``segment`` returns ``confidence`` on foreground and ``1 - confidence``
    on background; ``classify`` reports 1.0 for organs with any foreground.
    """

    def __init__(self, truth: Mapping[SliceKey, Mapping[OrganClass, BinaryMask]], confidence: float = 1.0):
        if not 0.5 < confidence <= 1.0:
            raise ValueError("oracle confidence must be in (0.5, 1]")
        self.truth = truth
        self.confidence = confidence

    def _lookup(self, key):
        try:
            return self.truth[key]
        except KeyError:
            raise KeyError(f"no ground truth for {key}") from None

    def classify(self, image, key) -> ClassPresence:
        masks = self._lookup(key)
        return ClassPresence({o: 1.0 if masks[o].bits.any() else 0.0 for o in ORGANS})

    def segment(self, image, key) -> dict[OrganClass, ProbMap]:
        masks = self._lookup(key)
        lo = 1.0 - self.confidence
        return {o: ProbMap(np.where(masks[o].bits, self.confidence, lo)) for o in ORGANS}


class FileBacked:
    """Precomputed outputs: probability maps from a directory of ``.bin``
    files and/or presence probabilities from a table keyed by slice."""

    def __init__(
        self,
        maps_dir=None,
        presence: Optional[Mapping[SliceKey, ClassPresence]] = None,
    ):
        self.maps_dir = Path(maps_dir) if maps_dir is not None else None
        self.presence = presence

    def classify(self, image, key) -> ClassPresence:
        if self.presence is None:
            raise PredictorError("no presence table configured")
        try:
            return self.presence[key]
        except KeyError:
            raise PredictorError(f"no presence entry for {key.to_id()}") from None

    def segment(self, image, key) -> dict[OrganClass, ProbMap]:
        if self.maps_dir is None:
            raise PredictorError("no probability-map directory configured")
        return read_probmaps(self.maps_dir / f"{key.to_id()}.bin")


def write_probmaps(path, maps: Mapping[OrganClass, ProbMap]) -> None:
    first = maps[ORGANS[0]]
    w, h = first.width, first.height
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(w, h, len(ORGANS)))
        for organ in ORGANS:
            m = maps[organ]
            if m.shape != (h, w):
                raise ShapeMismatchError(f"{organ.name} map shape {m.shape} differs from {(h, w)}")
            fh.write(m.values.astype("<f4").tobytes())


def read_probmaps(path) -> dict[OrganClass, ProbMap]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GitSegError(f"{path}: truncated probability-map header")
    w, h, n = _HEADER.unpack_from(raw)
    if n != len(ORGANS):
        raise GitSegError(f"{path}: expected {len(ORGANS)} classes, header says {n}")
    if w < 1 or h < 1:
        raise GitSegError(f"{path}: invalid map size {w}x{h}")
    expected = _HEADER.size + 4 * w * h * n
    if len(raw) != expected:
        raise GitSegError(f"{path}: expected {expected} bytes, found {len(raw)}")
    planes = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, h, w)
    try:
        return {o: ProbMap(planes[i].astype(np.float64)) for i, o in enumerate(ORGANS)}
    except ValueError as exc:
        raise GitSegError(f"{path}: {exc}") from None
