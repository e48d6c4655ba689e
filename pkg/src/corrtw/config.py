"""Run configuration: defaults, config files, the seed override and flags."""

import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Mapping, Optional, Tuple, get_args, get_type_hints

import fsspec

from corrtw.constants import TW_STEP, TW_T_MIN, TW_T_PLUS
from corrtw.ensembles import EntryDistribution, Form
from corrtw.experiments import ExperimentConfig, GreenComparisonConfig
from corrtw.storage import COLUMNS_ARE_VARIABLES, ROWS_ARE_VARIABLES
from corrtw.tracy_widom import PainleveConfig
from corrtw.utils import resolve_seed

logger = logging.getLogger(__name__)

SIMULATE = "simulate"
TW_TABLE = "tw-table"
MP_DENSITY = "mp-density"
VERIFY = "verify"
TEST_INDEPENDENCE = "test-independence"
GREEN_COMPARE = "green-compare"
DELOCALIZE = "delocalize"

_TABLE_KEYS = ("t_plus", "t_min", "step")

SUBCOMMAND_KEYS: Dict[str, Tuple[str, ...]] = {
    SIMULATE: (
        "p",
        "n",
        "dist",
        "form",
        "edge",
        "replicas",
        "seed",
        "workers",
        "scaling",
        "helmert",
        "output",
    )
    + _TABLE_KEYS,
    TW_TABLE: ("output",) + _TABLE_KEYS,
    MP_DENSITY: ("y", "p", "n", "points", "output", "format"),
    VERIFY: ("seed", "instances"),
    TEST_INDEPENDENCE: (
        "data",
        "orientation",
        "mean",
        "edge",
        "scaling",
        "output",
        "format",
    )
    + _TABLE_KEYS,
    GREEN_COMPARE: (
        "p",
        "n",
        "dist",
        "dist_w",
        "replicas",
        "seed",
        "workers",
        "energy",
        "epsilon",
        "coefficients",
        "statistic",
        "paired",
        "output",
        "format",
    ),
    DELOCALIZE: (
        "p",
        "n",
        "dist",
        "form",
        "replicas",
        "seed",
        "workers",
        "output",
        "format",
    ),
}

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


class ConfigError(ValueError):
    """A configuration has an unknown key, a mistyped value or violates a constraint."""


@dataclass(frozen=True)
class RunConfig:
    """The fully resolved configuration of one subcommand run."""

    subcommand: str
    p: Optional[int] = None
    n: Optional[int] = None
    dist: str = "gaussian"
    form: str = Form.W.value
    edge: str = "largest"
    replicas: int = 100
    seed: int = 0
    workers: int = 1
    scaling: str = "n"
    helmert: bool = False
    output: Optional[str] = None
    format: str = "csv"
    t_plus: float = TW_T_PLUS
    t_min: float = TW_T_MIN
    step: float = TW_STEP
    energy: Optional[float] = None
    epsilon: float = 0.05
    coefficients: str = "0,1"
    """The test polynomial coefficients, lowest degree first."""

    dist_w: str = "gaussian"
    paired: bool = False
    statistic: str = "point"
    y: Optional[float] = None
    points: int = 201
    data: Optional[str] = None
    orientation: str = ROWS_ARE_VARIABLES
    mean: str = "known_zero"
    instances: int = 100

    @property
    def keys(self) -> Tuple[str, ...]:
        return SUBCOMMAND_KEYS[self.subcommand]

    def to_dict(self) -> Dict[str, Any]:
        """The keys of this subcommand, spelled as flags."""
        return {key.replace("_", "-"): getattr(self, key) for key in self.keys}

    def provenance_config(self) -> Dict[str, Any]:
        """`to_dict` without the worker count, so outputs do not depend on it."""
        values = self.to_dict()
        values.pop("workers", None)
        return values

    def painleve_config(self) -> PainleveConfig:
        return PainleveConfig(t_plus=self.t_plus, t_min=self.t_min, step=self.step)

    def _dimensions(self) -> Tuple[int, int]:
        if self.p is None or self.n is None:
            raise ConfigError(f"{self.subcommand} needs both p and n")
        return self.p, self.n

    def experiment_config(self) -> ExperimentConfig:
        p, n = self._dimensions()
        return ExperimentConfig(
            p=p,
            n=n,
            dist=EntryDistribution.from_string(self.dist),
            form=Form.from_string(self.form),
            edge=self.edge,
            replicas=self.replicas,
            master_seed=self.seed,
            workers=self.workers,
            scaling=self.scaling,
            helmert=self.helmert,
        )

    def green_config(self) -> GreenComparisonConfig:
        p, n = self._dimensions()
        try:
            coefficients = tuple(float(c) for c in self.coefficients.split(","))
        except ValueError:
            raise ConfigError(f"Invalid coefficients: {self.coefficients!r}")
        return GreenComparisonConfig(
            p=p,
            n=n,
            dist_v=EntryDistribution.from_string(self.dist),
            dist_w=EntryDistribution.from_string(self.dist_w),
            replicas=self.replicas,
            master_seed=self.seed,
            epsilon=self.epsilon,
            E=self.energy,
            coefficients=coefficients,
            statistic=self.statistic,
            paired=self.paired,
            workers=self.workers,
        )

    def validate(self) -> "RunConfig":
        """Checks every constraint of the subcommand before anything runs.

        Raises:
            ConfigError: On the first violated constraint.
        """
        try:
            self._validate()
        except ConfigError:
            raise
        except ValueError as error:
            raise ConfigError(str(error)) from error
        return self

    def _validate(self) -> None:
        if self.format not in ("csv", "json"):
            raise ConfigError(f"Invalid format: {self.format}")
        if self.subcommand in (SIMULATE, TW_TABLE, TEST_INDEPENDENCE):
            self.painleve_config()
        if self.subcommand in (SIMULATE, DELOCALIZE):
            self.experiment_config()
            if self.subcommand == SIMULATE and self.output is None:
                raise ConfigError("simulate needs an output directory")
        elif self.subcommand == GREEN_COMPARE:
            self.green_config()
        elif self.subcommand == TW_TABLE:
            if self.output is None:
                raise ConfigError("tw-table needs an output file")
        elif self.subcommand == MP_DENSITY:
            if self.y is None:
                self._dimensions()
                if not 1 <= self.p < self.n:  # type: ignore[operator]
                    raise ConfigError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
            elif not 0 < self.y < 1:
                raise ConfigError(f"Aspect ratio must be in (0, 1): {self.y}")
            if self.points < 2:
                raise ConfigError(f"Need at least two points, got {self.points}")
        elif self.subcommand == VERIFY:
            if self.instances < 1:
                raise ConfigError(f"Need at least one instance, got {self.instances}")
        elif self.subcommand == TEST_INDEPENDENCE:
            if self.data is None:
                raise ConfigError("test-independence needs a data file")
            if self.orientation not in (ROWS_ARE_VARIABLES, COLUMNS_ARE_VARIABLES):
                raise ConfigError(f"Invalid orientation: {self.orientation}")
            if self.mean not in ("known_zero", "unknown"):
                raise ConfigError(f"Invalid mean: {self.mean}")
            if self.edge not in ("largest", "smallest"):
                raise ConfigError(f"Invalid edge: {self.edge}")
            if self.scaling not in ("n", "n_minus_1"):
                raise ConfigError(f"Invalid scaling: {self.scaling}")


_FIELD_TYPES: Dict[str, Any] = get_type_hints(RunConfig)


def _field_name(key: str, subcommand: str) -> str:
    name = key.strip().lstrip("-").replace("-", "_")
    if name not in SUBCOMMAND_KEYS[subcommand]:
        raise ConfigError(f"Unknown key for {subcommand}: {key!r}")
    return name


def _coerce(name: str, value: Any) -> Any:
    expected = _FIELD_TYPES[name]
    optional = type(None) in get_args(expected)
    if optional:
        expected = next(arg for arg in get_args(expected) if arg is not type(None))
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{name} cannot be null")
    if expected is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.strip().lower() in _TRUE + _FALSE:
            return value.strip().lower() in _TRUE
    elif expected is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, str):
            try:
                return int(value.strip())
            except ValueError:
                pass
    elif expected is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value.strip())
            except ValueError:
                pass
    elif expected is str:
        if isinstance(value, str):
            return value.strip()
    raise ConfigError(f"{name} expects {expected.__name__}, got {value!r}")


def read_config_file(href: str) -> Dict[str, Any]:
    """Reads a config file: JSON, or flat ``key=value`` lines.

    A JSON document with a ``provenance.config`` object, as written by the
    subcommands, yields that object, so a run can be replayed from its output.
    """
    with fsspec.open(href, mode="r") as file:
        text = file.read()
    if text.lstrip().startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as error:
            raise ConfigError(f"Invalid JSON config {href}: {error}") from error
        provenance = document.get("provenance")
        if isinstance(provenance, dict) and isinstance(provenance.get("config"), dict):
            document = provenance["config"]
        return dict(document)
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = line.partition("=")
        if not separator:
            raise ConfigError(f"{href}:{number}: expected key=value, got {line!r}")
        values[key.strip()] = value.strip()
    return values


def parse_config(
    subcommand: str,
    values: Mapping[str, Any],
    config_href: Optional[str] = None,
) -> RunConfig:
    """Resolves the configuration of a subcommand run.

    Precedence, lowest first: defaults, the config file, the seed environment
    variable, the explicitly given flags.

    Args:
        subcommand (str): The subcommand name.
        values (Mapping[str, Any]): The flags given on the command line, by
            field or flag name.
        config_href (Optional[str]): An optional config file.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        ConfigError: On unknown keys, mistyped values or violated constraints.
    """
    if subcommand not in SUBCOMMAND_KEYS:
        raise ConfigError(f"Unknown subcommand: {subcommand}")
    config = RunConfig(subcommand=subcommand)
    if config_href is not None:
        from_file = {
            _field_name(key, subcommand): value
            for key, value in read_config_file(config_href).items()
        }
        logger.debug(f"Config file {config_href}: {from_file}")
        config = _apply(config, from_file)
    if "seed" in config.keys:
        try:
            seed = resolve_seed(config.seed)
        except ValueError as error:
            raise ConfigError(str(error)) from error
        config = replace(config, seed=seed)
    flags = {_field_name(key, subcommand): value for key, value in values.items()}
    return _apply(config, flags).validate()


def _apply(config: RunConfig, values: Mapping[str, Any]) -> RunConfig:
    coerced = {name: _coerce(name, value) for name, value in values.items()}
    return replace(config, **coerced)

