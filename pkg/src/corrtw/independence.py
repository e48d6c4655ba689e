"""Testing complete independence of the variables of a data matrix."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, ClassVar, Dict, Optional, Union

from corrtw.ensembles import DataMatrix, build_R, build_W
from corrtw.experiments import Edge, Scaling, scaling_transform
from corrtw.spectra import symmetric_eigen
from corrtw.tracy_widom import TW1Table, load_or_solve, tw1_pvalue

logger = logging.getLogger(__name__)

KNOWN_ZERO = "known_zero"
UNKNOWN = "unknown"


@dataclass
class TestReport:
    """The outcome of an independence test."""

    __test__: ClassVar[bool] = False

    p: int
    n: int
    form: str
    edge: str
    lambda_extreme: float
    statistic: float
    """The scaled extreme eigenvalue, before reflection for the smallest edge."""

    p_value: float
    scaling: str
    table_provenance: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def run_independence_test(
    data: DataMatrix,
    mean: str = KNOWN_ZERO,
    edge: Union[Edge, str] = Edge.LARGEST,
    scaling: Union[Scaling, str] = Scaling.N,
    table: Optional[TW1Table] = None,
) -> TestReport:
    """Tests H₀: the p variables are independent with symmetric distributions.

    With a known zero mean the statistic comes from W, otherwise from the
    centered ℛ. A large scaled largest eigenvalue, or a small scaled
    smallest eigenvalue, is evidence against H₀.

    Args:
        data (DataMatrix): The p×n data, variables in rows.
        mean (str): ``known_zero`` or ``unknown``.
        edge (Union[Edge, str]): Which extreme eigenvalue to use.
        scaling (Union[Scaling, str]): Scale with n or with n − 1.
        table (Optional[TW1Table]): The TW₁ table. Defaults to the cached one.

    Returns:
        TestReport: The statistic and its TW₁ p-value.
    """
    edge = Edge(edge)
    scaling = Scaling(scaling)
    if mean == KNOWN_ZERO:
        form, (_, matrix) = "W_form", build_W(data)
    elif mean == UNKNOWN:
        form, (_, matrix) = "R_form", build_R(data)
    else:
        raise ValueError(f"Invalid mean: {mean}")
    n_eff = data.n - 1 if scaling == Scaling.N_MINUS_1 else data.n
    transform = scaling_transform(data.p, n_eff, edge)
    values = symmetric_eigen(matrix, want_vectors=False).values
    lambda_extreme = float(values[-1] if edge == Edge.LARGEST else values[0])
    statistic = float(transform.apply(lambda_extreme))
    if table is None:
        table = load_or_solve()
    p_value = tw1_pvalue(float(transform.oriented(statistic)), table)
    logger.info(
        f"Independence test on {data.p}x{data.n} {form}: {edge.value} eigenvalue "
        f"{lambda_extreme:.6g}, statistic {statistic:.6g}, p-value {p_value:.4g}"
    )
    return TestReport(
        p=data.p,
        n=data.n,
        form=form,
        edge=edge.value,
        lambda_extreme=lambda_extreme,
        statistic=statistic,
        p_value=p_value,
        scaling=scaling.value,
        table_provenance=table.provenance,
    )
