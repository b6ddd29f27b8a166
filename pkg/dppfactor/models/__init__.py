"""Models package."""

from dppfactor.models.kernel import FactoredKernel, MarginalKernel, ProjectionKernel, Symmetry
from dppfactor.models.rng import RngStream
from dppfactor.models.run_config import BlockingConfig, RunConfig, Variant
from dppfactor.models.report import AdmissibilityReport, BenchmarkRow, ChiSquareReport
from dppfactor.models.sample import ElementarySample, Sample, SubsetDistribution
from dppfactor.models.sparse import EliminationTree, SparseFactor, SparseKernel
from dppfactor.models.structures import (
    AztecDiamond,
    Orientation,
    SpanningTreeReport,
    TilingReport,
    UndirectedGraph,
)

__all__ = [
    "AdmissibilityReport",
    "AztecDiamond",
    "BenchmarkRow",
    "BlockingConfig",
    "ChiSquareReport",
    "ElementarySample",
    "EliminationTree",
    "FactoredKernel",
    "MarginalKernel",
    "Orientation",
    "ProjectionKernel",
    "RngStream",
    "RunConfig",
    "Sample",
    "SpanningTreeReport",
    "SparseFactor",
    "SparseKernel",
    "SubsetDistribution",
    "Symmetry",
    "TilingReport",
    "UndirectedGraph",
    "Variant",
]
