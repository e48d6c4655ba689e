import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import corrtw
from corrtw.storage import (
    COLUMNS_ARE_VARIABLES,
    DataFileError,
    build_provenance,
    csv_text,
    json_text,
    read_csv,
    read_data_matrix,
    write_csv,
    write_json,
)
from corrtw.utils import FileInfo, multihash_hex, resolve_seed, version_string
from tests import test_data

PROVENANCE = build_provenance({"p": 4, "n": 12, "dist": "gaussian"}, 7)


def test_provenance() -> None:
    assert PROVENANCE["version"] == f"v{corrtw.__version__}"
    assert PROVENANCE["version"] == version_string()
    assert PROVENANCE["seed"] == 7
    assert PROVENANCE["config"]["dist"] == "gaussian"


def test_csv_text_header_lines() -> None:
    frame = pd.DataFrame({"replica": [0, 1], "value": [0.1, 1 / 3]})
    lines = csv_text(frame, PROVENANCE).splitlines()
    assert lines[0] == f"# version: {version_string()}"
    assert lines[1] == "# seed: 7"
    assert lines[2] == '# config: {"dist":"gaussian","n":12,"p":4}'
    assert lines[3] == "replica,value"
    assert lines[5] == "1,0.33333333333333331"


def test_csv_round_trip(tmp_path: Path) -> None:
    values = np.random.default_rng(1).standard_normal(20)
    frame = pd.DataFrame({"replica": np.arange(20), "value": values})
    href = str(tmp_path / "values.csv")
    info = write_csv(frame, href, PROVENANCE)
    assert info.size == (tmp_path / "values.csv").stat().st_size
    read, found = read_csv(href)
    np.testing.assert_array_equal(read["value"].to_numpy(), values)
    assert found == PROVENANCE


def test_csv_written_twice_is_identical(tmp_path: Path) -> None:
    frame = pd.DataFrame({"value": [math.pi, math.e]})
    first = write_csv(frame, str(tmp_path / "a.csv"), PROVENANCE)
    second = write_csv(frame, str(tmp_path / "b.csv"), PROVENANCE)
    assert first == second
    assert first.checksum == multihash_hex((tmp_path / "a.csv").read_bytes())


def test_json_text() -> None:
    payload = {"ks": np.float64(0.25), "values": np.array([1.0, 2.0]), "se": math.nan}
    document = json.loads(json_text(payload, PROVENANCE))
    assert document["ks"] == 0.25
    assert document["values"] == [1.0, 2.0]
    assert document["se"] is None
    assert document["provenance"]["seed"] == 7
    assert json_text(payload, PROVENANCE).endswith("}\n")


def test_json_mirrors_csv_values(tmp_path: Path) -> None:
    values = np.random.default_rng(2).standard_normal(5)
    write_csv(pd.DataFrame({"value": values}), str(tmp_path / "v.csv"), PROVENANCE)
    write_json({"values": values}, str(tmp_path / "v.json"), PROVENANCE)
    read, _ = read_csv(str(tmp_path / "v.csv"))
    document = json.loads((tmp_path / "v.json").read_text())
    assert read["value"].tolist() == document["values"]


def test_file_info(tmp_path: Path) -> None:
    href = tmp_path / "data.bin"
    href.write_bytes(b"corrtw")
    info = FileInfo.read(str(href))
    assert info.size == 6
    assert info.checksum.startswith("1220")


def test_resolve_seed(monkeypatch: pytest.MonkeyPatch) -> None:
    assert resolve_seed(5) == 5
    monkeypatch.setenv("CORRTW_SEED", "11")
    assert resolve_seed(5) == 11
    monkeypatch.setenv("CORRTW_SEED", " ")
    assert resolve_seed(5) == 5
    monkeypatch.setenv("CORRTW_SEED", "x")
    with pytest.raises(ValueError):
        resolve_seed(5)


def test_read_rows() -> None:
    data = read_data_matrix(test_data.get_path("data-files/corrtw/rows.csv"))
    assert data.entries.shape == (3, 12)
    assert data.entries[0, 0] == 0.52
    assert data.entries[2, 11] == -0.99


def test_read_columns_with_header() -> None:
    data = read_data_matrix(
        test_data.get_path("data-files/corrtw/columns.csv"), COLUMNS_ARE_VARIABLES
    )
    assert data.entries.shape == (3, 12)
    assert data.entries.flags["C_CONTIGUOUS"]
    assert data.entries[1, 0] == -0.85


def test_read_missing_value() -> None:
    with pytest.raises(DataFileError):
        read_data_matrix(test_data.get_path("data-files/corrtw/missing.csv"))


def test_read_text_value() -> None:
    with pytest.raises(DataFileError):
        read_data_matrix(test_data.get_path("data-files/corrtw/text.csv"))


def test_read_empty_file(tmp_path: Path) -> None:
    href = tmp_path / "empty.csv"
    href.write_text("\n\n")
    with pytest.raises(DataFileError):
        read_data_matrix(str(href))


def test_read_invalid_orientation() -> None:
    with pytest.raises(ValueError):
        read_data_matrix(
            test_data.get_path("data-files/corrtw/rows.csv"), "diagonal"
        )
