"""Result records of the oracle and benchmark services."""

from dataclasses import asdict, dataclass, field


@dataclass
class AdmissibilityReport:
    """Outcome of checking (-1)^|J| det(K - 1_J) >= 0 over every J."""

    admissible: bool
    worst_subset: list[int]
    worst_value: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ChiSquareReport:
    """Pearson goodness-of-fit of observed subset counts against exact probabilities.

    ``impossible_observed`` counts draws of subsets whose exact probability is
    zero; any such draw fails the test.
    """

    statistic: float
    dof: int
    threshold: float
    p_value: float
    significance: float
    trials: int
    bins: int
    impossible_observed: int = 0
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.passed = self.impossible_observed == 0 and self.statistic <= self.threshold

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchmarkRow:
    variant: str
    n: int
    precision: int
    seconds: float
    gflops: float

    def as_csv_row(self) -> list[str]:
        return [self.variant, str(self.n), str(self.precision), f"{self.seconds:.6f}", f"{self.gflops:.3f}"]
