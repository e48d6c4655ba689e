"""Reading and writing result tables and input data."""

import io
import json
import logging
import math
from typing import Any, Dict, Mapping, Optional, Tuple

import fsspec
import numpy as np
import pandas as pd

from corrtw.constants import FLOAT_FORMAT
from corrtw.ensembles import DataMatrix
from corrtw.utils import FileInfo, canonical_json, version_string

logger = logging.getLogger(__name__)

ROWS_ARE_VARIABLES = "rows_are_variables"
COLUMNS_ARE_VARIABLES = "columns_are_variables"


class DataFileError(ValueError):
    """An input data file cannot be parsed into a numeric matrix."""


def build_provenance(config: Mapping[str, Any], seed: Optional[int]) -> Dict[str, Any]:
    """The provenance block embedded in every output file."""
    return {"version": version_string(), "seed": seed, "config": dict(config)}


def csv_text(frame: pd.DataFrame, provenance: Mapping[str, Any]) -> str:
    """A table as CSV text, preceded by provenance comment lines."""
    buffer = io.StringIO()
    buffer.write(f"# version: {provenance['version']}\n")
    buffer.write(f"# seed: {json.dumps(provenance['seed'])}\n")
    buffer.write(f"# config: {canonical_json(_jsonable(provenance['config']))}\n")
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_csv(
    frame: pd.DataFrame, href: str, provenance: Mapping[str, Any]
) -> FileInfo:
    """Writes a table with provenance comment lines and 17 significant digits.

    Args:
        frame (pd.DataFrame): The table.
        href (str): Where to write it, any fsspec href.
        provenance (Mapping[str, Any]): Version, seed and resolved config.

    Returns:
        FileInfo: Checksum and size of the written file.
    """
    with fsspec.open(href, mode="w", newline="") as file:
        file.write(csv_text(frame, provenance))
    logger.info(f"Wrote {len(frame)} rows to {href}")
    return FileInfo.read(href)


def read_csv(href: str) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Reads a table written by `write_csv`, returning it and its provenance."""
    with fsspec.open(href, mode="r") as file:
        text = file.read()
    found: Dict[str, Any] = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition(": ")
        if key == "version":
            found[key] = value
        elif key in ("seed", "config"):
            found[key] = json.loads(value)
    frame = pd.read_csv(io.StringIO(text), comment="#", float_precision="round_trip")
    return frame, found


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def json_text(payload: Mapping[str, Any], provenance: Mapping[str, Any]) -> str:
    """A JSON document with a top-level ``provenance`` object.

    Non-finite floats are written as null.
    """
    document = _jsonable(dict(payload))
    document["provenance"] = _jsonable(dict(provenance))
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def write_json(
    payload: Mapping[str, Any], href: str, provenance: Mapping[str, Any]
) -> FileInfo:
    """Writes `json_text` to an href."""
    with fsspec.open(href, mode="w") as file:
        file.write(json_text(payload, provenance))
    logger.info(f"Wrote {href}")
    return FileInfo.read(href)


def _has_header(text: str) -> bool:
    for line in text.splitlines():
        if line.strip():
            for token in line.split(","):
                try:
                    float(token.strip().strip('"'))
                except ValueError:
                    return True
            return False
    raise DataFileError("Data file is empty")


def read_data_matrix(href: str, orientation: str = ROWS_ARE_VARIABLES) -> DataMatrix:
    """Reads a numeric CSV into a data matrix.

    A header is detected when the first non-empty line has a non-numeric
    field. Missing values are an error.

    Args:
        href (str): The CSV href.
        orientation (str): ``rows_are_variables`` (p×n file) or
            ``columns_are_variables`` (n×p file).

    Returns:
        DataMatrix: The p×n data.

    Raises:
        DataFileError: If the file is empty, has missing or non-numeric values.
    """
    if orientation not in (ROWS_ARE_VARIABLES, COLUMNS_ARE_VARIABLES):
        raise ValueError(f"Invalid orientation: {orientation}")
    with fsspec.open(href, mode="r") as file:
        text = file.read()
    header = 0 if _has_header(text) else None
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            header=header,
            skip_blank_lines=True,
            float_precision="round_trip",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise DataFileError(f"Malformed CSV {href}: {error}") from error
    if frame.isna().to_numpy().any():
        raise DataFileError(f"Missing values in {href}")
    try:
        values = frame.apply(pd.to_numeric).to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as error:
        raise DataFileError(f"Non-numeric values in {href}: {error}") from error
    if orientation == COLUMNS_ARE_VARIABLES:
        values = values.T
    return DataMatrix(entries=np.ascontiguousarray(values))
