import csv

import pytest

from gitseg.core import ORGANS, ProbMap
from gitseg.ensemble import write_probmaps
from gitseg.synthetic import make_synthetic_dataset


def write_oracle_outputs(root, truth, present=True):
    """Probability maps equal to the truth at confidence 1.0, plus a presence CSV."""
    maps = root / "maps"
    maps.mkdir(exist_ok=True)
    for key, masks in truth.items():
        write_probmaps(maps / f"{key.to_id()}.bin", {o: ProbMap(masks[o].bits.astype(float)) for o in ORGANS})
    presence = root / "presence.csv"
    with open(presence, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "class", "probability"])
        for key in sorted(truth):
            for o in ORGANS:
                w.writerow([key.to_id(), o.name.lower(), 1.0 if present else 0.0])
    return maps, presence


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    truth = make_synthetic_dataset(root / "data", cases=2, days=1, depth=4, width=48, height=40, seed=3)
    return root, truth


CRITERIA: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
