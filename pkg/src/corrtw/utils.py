import hashlib
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Optional, cast

import fsspec
import multihash

import corrtw
from corrtw.constants import SEED_ENV_VAR

logger = logging.getLogger(__name__)


def version_string() -> str:
    """Returns a git-describe-style version string, e.g. ``v0.1.0``."""
    return f"v{corrtw.__version__}"


def resolve_seed(seed: Optional[int]) -> Optional[int]:
    """Applies the seed environment override.

    Args:
        seed (Optional[int]): The configured seed.

    Returns:
        Optional[int]: The value of the seed environment variable if it is set,
        else ``seed``.

    Raises:
        ValueError: If the environment variable is not an integer.
    """
    value = os.environ.get(SEED_ENV_VAR)
    if value is None or value.strip() == "":
        return seed
    try:
        override = int(value)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {value!r}")
    if seed is not None and override != seed:
        logger.info(f"Seed {seed} overridden by {SEED_ENV_VAR}={override}")
    return override


def multihash_hex(data: bytes) -> str:
    """Returns the hex-encoded sha2-256 multihash of some bytes."""
    m = hashlib.sha256()
    m.update(data)
    hash = multihash.encode(m.digest(), code="sha2-256", length=m.digest_size)
    return cast(str, multihash.to_hex_string(hash))


def canonical_json(value: Any) -> str:
    """Compact, key-sorted JSON used for hashing and provenance."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


@dataclass
class FileInfo:
    """Information about a written output file."""

    checksum: str
    """The file's multihash encoded digest."""

    size: int
    """The size of the file in bytes."""

    @classmethod
    def read(cls, href: str) -> "FileInfo":
        """Reads a file's information.

        Args:
            href (str): The file's href, to be read by fsspec.

        Returns:
            FileInfo: The file's information, including checksum and size.
        """
        with fsspec.open(href, mode="rb") as file:
            data = file.read()
        return FileInfo(checksum=multihash_hex(data), size=len(data))
