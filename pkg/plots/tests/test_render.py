"""Render each figure script against its frozen reference CSV fixture.

The fixtures were produced by the simulator CLI (its documented CSV
schemas); the scripts must render them without error, must fail loudly when
a required column is removed, and must refuse empty input without creating
an output file.
"""

from pathlib import Path

import pytest

from stircount_plots import interference, levels, lz_sweep, spreading
from stircount_plots.common import EmptyInput, SchemaMismatch, Table

FIXTURES = Path(__file__).parent / "fixtures"

CASES = [
    (levels, "levels.csv", "followed"),
    (lz_sweep, "lz-sweep.csv", "p_numeric"),
    (interference, "interference.csv", "variance"),
    (spreading, "multi-cycle.csv", "std"),
]


@pytest.mark.parametrize("mod,fixture,_col", CASES, ids=[c[1] for c in CASES])
def test_renders_reference_fixture(tmp_path, mod, fixture, _col):
    out = tmp_path / "figure.png"
    rc = mod.main(["--in", str(FIXTURES / fixture), "--out", str(out)])
    assert rc == 0
    assert out.exists() and out.stat().st_size > 1000


@pytest.mark.parametrize("mod,fixture,col", CASES, ids=[c[1] for c in CASES])
def test_removed_column_fails_loudly(tmp_path, capsys, mod, fixture, col):
    src = (FIXTURES / fixture).read_text().splitlines()
    header = src[0].split(",")
    idx = [h.split("[")[0] for h in header].index(col)
    mutated = tmp_path / fixture
    mutated.write_text(
        "\n".join(
            ",".join(tok for i, tok in enumerate(line.split(",")) if i != idx)
            for line in src
        )
        + "\n"
    )
    out = tmp_path / "figure.png"
    rc = mod.main(["--in", str(mutated), "--out", str(out)])
    assert rc == 2
    assert col in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("mod,fixture,_col", CASES, ids=[c[1] for c in CASES])
def test_empty_input_writes_nothing(tmp_path, mod, fixture, _col):
    header_only = tmp_path / fixture
    header_only.write_text((FIXTURES / fixture).read_text().splitlines()[0] + "\n")
    out = tmp_path / "figure.png"
    rc = mod.main(["--in", str(header_only), "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_rerender_is_idempotent(tmp_path):
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    assert lz_sweep.main(["--in", str(FIXTURES / "lz-sweep.csv"), "--out", str(out1)]) == 0
    assert lz_sweep.main(["--in", str(FIXTURES / "lz-sweep.csv"), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_render_does_not_mutate_input(tmp_path):
    src = FIXTURES / "levels.csv"
    before = src.read_bytes()
    assert levels.main(["--in", str(src), "--out", str(tmp_path / "x.png")]) == 0
    assert src.read_bytes() == before


def test_table_parsing():
    t = Table(FIXTURES / "lz-sweep.csv")
    assert t.label("exponent") == "exponent[1]"
    assert len(t.col("p_numeric")) >= 2
    with pytest.raises(SchemaMismatch):
        t.col("nonexistent")


def test_missing_file_is_loud(tmp_path, capsys):
    rc = levels.main(["--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_empty_file_raises(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(EmptyInput):
        Table(empty)
