class ExploratoryEnsemble(UserWarning):
    """Raised when an R-form run uses entries other than gaussian."""

    def __init__(self, dist: str):
        """Creates a new exploratory ensemble warning for a distribution name."""
        super().__init__(
            f"R_form with {dist} entries is exploratory, "
            "the centered edge limit is only established for gaussian entries"
        )


class TableRangeWarning(UserWarning):
    """Raised when a TW1 value comes from tail asymptotics outside the table."""

    def __init__(self, t: float, t_min: float, t_max: float):
        """Creates a new warning for a point outside the tabulated range."""
        super().__init__(
            f"t={t:g} is outside the tabulated range [{t_min:g}, {t_max:g}], "
            "using tail asymptotics"
        )
