"""Summary estimate from one study: effect, standard error, optional size."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError


@dataclass(frozen=True)
class StudyEstimate:
    """One study's summary on the analysis (e.g. log hazard ratio) scale.

    Parameters
    ----------
    y : float
        Effect estimate.
    se : float
        Standard error of the estimate, > 0.
    n : int, optional
        Number of patients behind the estimate, >= 1 when given.
    label : str
        Free-text identifier used in reports and CSV round trips.
    """

    y: float
    se: float
    n: int | None = None
    label: str = ""

    def __post_init__(self):
        if not (isinstance(self.y, (int, float)) and math.isfinite(self.y)):
            raise InvalidParameterError(f"effect estimate must be finite, got {self.y!r}")
        if not (isinstance(self.se, (int, float)) and math.isfinite(self.se)
                and self.se > 0):
            raise InvalidParameterError(f"standard error must be > 0, got {self.se!r}")
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "se", float(self.se))
        if self.n is not None:
            if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
                raise InvalidParameterError(
                    f"patient count must be an integer >= 1, got {self.n!r}")

    @property
    def variance(self) -> float:
        return self.se ** 2
