"""Wall-clock benchmarks of the tiled samplers against plain factorizations."""

import csv
import logging
import re
import time
from collections.abc import Callable, Iterable
from typing import TextIO

import numpy as np

from dppfactor import config
from dppfactor.models.kernel import MarginalKernel, Symmetry, symmetrize
from dppfactor.models.report import BenchmarkRow
from dppfactor.models.rng import RngStream
from dppfactor.models.run_config import BlockingConfig
from dppfactor.services import blocked_service, sampling_service

logger = logging.getLogger(__name__)

CSV_HEADER = ["variant", "n", "precision", "seconds", "gflops"]

# kind -> complex non-hermitian input
KINDS = {
    "hermitian": False,
    "ldl": False,
    "unblocked": False,
    "general": True,
    "lu": True,
}

_VARIANT = re.compile(r"^([a-z]+)-?(32|64)$")


def parse_variant(name: str) -> tuple[str, int]:
    """Split ``hermitian64`` or ``hermitian-64`` into kind and precision."""
    match = _VARIANT.match(name.strip())
    if match is None or match.group(1) not in KINDS:
        known = ", ".join(f"{kind}64" for kind in KINDS)
        raise ValueError(f"Unknown benchmark variant '{name}'; expected e.g. {known}.")
    return match.group(1), int(match.group(2))


def model_flops(n: int, is_complex: bool) -> float:
    """n^3 / 3 for hermitian input, 2/3 n^3 general; complex counted as 4 real flops each."""
    if is_complex:
        return 4.0 * (2.0 / 3.0) * n**3
    return n**3 / 3.0


def benchmark_kernel(n: int, rng: RngStream, precision: int, is_complex: bool) -> MarginalKernel:
    """Cheap admissible kernel 0.5 I + 0.4 H / ||H||_inf, spectrum inside [0.1, 0.9].

    The complex variant is a diagonal similarity with unit-modulus phases, so
    it is non-hermitian but has the same DPP.
    """
    gaussian = rng.standard_normal((n, n))
    h = symmetrize((gaussian + gaussian.T) / 2.0)
    bound = float(np.abs(h).sum(axis=1).max()) or 1.0
    entries = 0.5 * np.eye(n) + 0.4 * h / bound
    kernel = MarginalKernel(symmetrize(entries), Symmetry.HERMITIAN)
    if is_complex:
        kernel = kernel.similarity(np.exp(2j * np.pi * rng.uniforms(n)))
    return kernel.astype(precision)


def _runner(kind: str, cfg: BlockingConfig, tolerance: float) -> Callable[[MarginalKernel, RngStream], object]:
    if kind in ("hermitian", "general"):
        return lambda kernel, rng: blocked_service.sample_tiled_parallel(kernel, rng, cfg, tolerance)
    if kind == "ldl":
        return lambda kernel, rng: blocked_service.factor_tiled_ldl(kernel.entries, cfg)
    if kind == "lu":
        return lambda kernel, rng: blocked_service.factor_tiled_lu(kernel.entries, cfg)
    return lambda kernel, rng: sampling_service.sample_hermitian_unblocked(kernel, rng, tolerance)


def benchmark_suite(
    sizes: Iterable[int],
    variants: Iterable[str],
    reps: int = 3,
    seed: int = 0,
    cfg: BlockingConfig | None = None,
) -> list[BenchmarkRow]:
    """Median wall time over ``reps`` runs per (variant, n).

    Args:
        sizes: Kernel orders.
        variants: Names such as ``hermitian64``, ``ldl32`` or ``lu64``.
        reps: Repetitions per row.
        seed: Seed for kernel construction and sampling.
        cfg: Blocking configuration of the tiled runs.

    Returns:
        One row per (variant, n), in the order requested.
    """
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}.")
    cfg = cfg or BlockingConfig()
    parsed = [(name, *parse_variant(name)) for name in variants]
    rows = []

    for n in sizes:
        if n < 1:
            raise ValueError(f"Benchmark sizes must be positive, got {n}.")
        for name, kind, precision in parsed:
            is_complex = KINDS[kind]
            rng = RngStream(seed)
            kernel = benchmark_kernel(n, rng, precision, is_complex)
            run = _runner(kind, cfg, config.pivot_tolerance(precision))

            timings = []
            for _ in range(reps):
                start = time.perf_counter()
                run(kernel, rng)
                timings.append(time.perf_counter() - start)
            seconds = float(np.median(timings))
            gflops = model_flops(n, is_complex) / seconds / 1e9
            logger.debug("%s n=%d: %.4fs (%.2f GFlop/s)", name, n, seconds, gflops)
            rows.append(BenchmarkRow(f"{kind}{precision}", n, precision, seconds, gflops))
    return rows


def write_benchmark_csv(rows: Iterable[BenchmarkRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv_row())
