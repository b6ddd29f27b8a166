"""dppfactor - command-line sampling of determinantal point processes"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from dppfactor import config
from dppfactor.components.images import tiling_image, tree_image
from dppfactor.errors import DPPError, InvalidKernel
from dppfactor.models.kernel import MarginalKernel, ProjectionKernel, dtype_for
from dppfactor.models.rng import RngStream
from dppfactor.models.run_config import BlockingConfig, RunConfig, Variant
from dppfactor.models.sample import ElementarySample, Sample
from dppfactor.models.sparse import SparseKernel
from dppfactor.services import (
    bench_service,
    blocked_service,
    builder_service,
    elementary_service,
    io_service,
    kernel_service,
    oracle_service,
    sampling_service,
    sparse_service,
)
from dppfactor.services.builder_service import BuiltKernel

logger = logging.getLogger(__name__)
console = Console()

# Exit codes
EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_INPUT = 2
EXIT_SAMPLER = 3
EXIT_STRUCTURE = 4

Sampler = Callable[[RngStream], Sample | ElementarySample]


class InputError(Exception):
    """Wraps anything that went wrong before sampling started (exit 2)."""


# ARGUMENTS


def _blocking_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--block-size", type=int, default=None)
    parent.add_argument("--tile-size", type=int, default=config.DEFAULT_TILE_SIZE)
    parent.add_argument("--threads", default="all", help="thread count or 'all'")
    return parent


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=0)
    parent.add_argument("--precision", type=int, choices=(32, 64), default=64)
    parent.add_argument("--out", type=Path, default=None)
    parent.add_argument("--verbose", action="store_true")
    return parent


def _kernel_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    source = parent.add_mutually_exclusive_group()
    source.add_argument("--builder", help="e.g. aztec:10, grid:40x40, laplacian2d:200x200:0.72")
    source.add_argument("--kernel", type=Path, help="Matrix Market kernel file")
    parent.add_argument(
        "--ordering",
        choices=sparse_service.ORDERINGS,
        default=None,
        help="default: nested-dissection for grid builders, natural otherwise",
    )
    return parent


def _variant_parent(default: Variant) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--variant", choices=[v.value for v in Variant], default=default.value
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dppfactor", description="Exact DPP sampling by modified matrix factorization."
    )
    commands = parser.add_subparsers(dest="command", required=True)
    common, kernel, blocking = _common_parent(), _kernel_parent(), _blocking_parent()
    sampled = _variant_parent(Variant.UNBLOCKED)

    commands.add_parser("sample", parents=[common, kernel, blocking, sampled], help="draw one sample")

    ust = commands.add_parser(
        "ust", parents=[common, blocking, sampled], help="uniform spanning tree of grid:WxH or hex:d"
    )
    ust.add_argument("graph")
    ust.add_argument("--image", type=Path, default=None)
    ust.add_argument("--cell", type=int, default=config.CELL_PIXELS)

    aztec = commands.add_parser(
        "aztec", parents=[common, blocking, sampled], help="random domino tiling of an Aztec diamond"
    )
    aztec.add_argument("order", type=int)
    aztec.add_argument("--image", type=Path, default=None)
    aztec.add_argument("--cell", type=int, default=config.CELL_PIXELS)

    validate = commands.add_parser(
        "validate", parents=[common, kernel, blocking, sampled], help="chi-square test of a sampler"
    )
    validate.add_argument("--trials", type=int, default=200_000)
    validate.add_argument("--significance", type=float, default=config.CHI_SQUARE_SIGNIFICANCE)
    validate.add_argument("--streams", type=int, default=1)

    bench = commands.add_parser("bench", parents=[common, blocking], help="benchmark CSV")
    bench.add_argument("--sizes", default="512,1024")
    bench.add_argument("--variant", default="hermitian64", help="comma-separated, e.g. hermitian64,ldl64")
    bench.add_argument("--reps", type=int, default=3)

    commands.add_parser(
        "map", parents=[common, kernel, blocking, _variant_parent(Variant.MAP)], help="greedy MAP subset"
    )
    commands.add_parser("export", parents=[common, kernel], help="write a built kernel as Matrix Market")
    commands.add_parser("analyze", parents=[common, kernel], help="sparse symbolic statistics")
    return parser


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def run_config_from(args: argparse.Namespace) -> RunConfig:
    """Translate parsed flags into a RunConfig."""
    threads = getattr(args, "threads", "all")
    blocking = BlockingConfig(
        block_size=getattr(args, "block_size", None),
        tile_size=getattr(args, "tile_size", config.DEFAULT_TILE_SIZE),
        thread_count=threads if threads == "all" else int(threads),
    )
    # bench reuses --variant for benchmark names
    variant = Variant.UNBLOCKED if args.command == "bench" else getattr(args, "variant", "unblocked")
    return RunConfig(
        command=args.command,
        seed=args.seed,
        precision=args.precision,
        variant=variant,
        blocking=blocking,
        builder=getattr(args, "builder", None),
        kernel_path=getattr(args, "kernel", None),
        out=args.out,
        image=getattr(args, "image", None),
        ordering=getattr(args, "ordering", None),
        trials=getattr(args, "trials", 200_000),
        significance=getattr(args, "significance", config.CHI_SQUARE_SIGNIFICANCE),
    )


# KERNELS


def _at_precision(kernel: MarginalKernel | SparseKernel, precision: int) -> MarginalKernel | SparseKernel:
    if isinstance(kernel, SparseKernel):
        dtype = dtype_for(precision, bool(kernel.lower.dtype.kind == "c"))
        return SparseKernel(kernel.lower.astype(dtype))
    return kernel.astype(precision)


def load_kernel(run: RunConfig) -> BuiltKernel:
    """Kernel from ``--builder`` or ``--kernel``.

    Random builders draw from a child stream of the seed, so the sample stream
    itself starts fresh.

    Raises:
        InputError: On any I/O, parse or kernel validation failure.
    """
    try:
        if run.builder:
            kernel_rng = RngStream(run.seed).spawn(1)[0]
            return builder_service.build(run.builder, kernel_rng, run.precision)
        if run.kernel_path:
            kernel = io_service.read_kernel(run.kernel_path)
            return BuiltKernel(str(run.kernel_path), _at_precision(kernel, run.precision))
    except (OSError, ValueError) as error:
        raise InputError(str(error)) from error
    raise InputError("One of --builder or --kernel is required.")


def as_dense(kernel: MarginalKernel | SparseKernel) -> MarginalKernel:
    return kernel.to_dense() if isinstance(kernel, SparseKernel) else kernel


def as_sparse(kernel: MarginalKernel | SparseKernel) -> SparseKernel:
    if isinstance(kernel, SparseKernel):
        return kernel
    if not kernel.is_hermitian:
        raise InvalidKernel("Sparse elimination requires a hermitian kernel.")
    return SparseKernel.from_dense(kernel.entries)


def is_hermitian(kernel: MarginalKernel | SparseKernel) -> bool:
    return isinstance(kernel, SparseKernel) or kernel.is_hermitian


def make_sampler(run: RunConfig, built: BuiltKernel) -> Sampler:
    """Closure drawing one sample with the configured variant.

    Symbolic analysis and projection checks happen once, here.

    Raises:
        ValueError: If the variant does not accept the kernel.
    """
    run.check_symmetry(is_hermitian(built.kernel))
    tolerance = config.pivot_tolerance(run.precision)
    variant = run.variant

    if variant is Variant.SPARSE or (variant is Variant.MAP and isinstance(built.kernel, SparseKernel)):
        sparse = as_sparse(built.kernel)
        perm = sparse_service.ordering_permutation(sparse, run.resolved_ordering(built.grid), built.grid)
        tree = sparse_service.symbolic_analyze(sparse, perm)
        logger.info("Symbolic analysis: nnz(L)=%d, flops=%.3g", tree.factor_nnz, tree.flops)
        if variant is Variant.MAP:
            return lambda rng: sparse_service.greedy_map_sparse(sparse, tree, tolerance)[0]
        return lambda rng: sparse_service.sample_sparse_hermitian(sparse, tree, rng, tolerance)[0]

    dense = as_dense(built.kernel)
    if variant is Variant.UNBLOCKED:
        if dense.is_hermitian:
            return lambda rng: sampling_service.sample_hermitian_unblocked(dense, rng, tolerance)[0]
        return lambda rng: sampling_service.sample_nonhermitian_unblocked(dense, rng, tolerance)[0]
    if variant is Variant.BLOCKED:
        return lambda rng: blocked_service.sample_blocked(dense, rng, run.blocking, tolerance)[0]
    if variant is Variant.TILED:
        return lambda rng: blocked_service.sample_tiled_parallel(dense, rng, run.blocking, tolerance)[0]
    if variant is Variant.ELEMENTARY:
        projection = built.projection or ProjectionKernel.from_matrix(dense.entries)
        return lambda rng: elementary_service.sample_elementary(projection, rng)
    if variant is Variant.SPECTRAL:
        return lambda rng: elementary_service.sample_spectral(dense, rng)
    return lambda rng: sampling_service.greedy_map(dense, tolerance)[0]


def _draw(run: RunConfig, built: BuiltKernel) -> Sample | ElementarySample:
    try:
        sampler = make_sampler(run, built)
    except ValueError as error:
        raise InputError(str(error)) from error
    return sampler(RngStream(run.seed))


def _emit_sample(run: RunConfig, sample: Sample | ElementarySample) -> None:
    if run.out is not None:
        io_service.write_sample(run.out, sample)  # type: ignore[arg-type]
    console.print(f"loglik {sample.log_likelihood!r}")
    console.print(f"kept {len(sample.kept)} of the ground set")


# COMMANDS


def cmd_sample(run: RunConfig) -> int:
    built = load_kernel(run)
    sample = _draw(run, built)
    if run.out is None:
        sys.stdout.write(io_service.format_sample(sample))  # type: ignore[arg-type]
    else:
        _emit_sample(run, sample)
    return EXIT_OK


def _structural_outcome(run: RunConfig, valid: bool, detail: str) -> int:
    if valid:
        console.print(f"[green]valid[/green] {detail}")
        return EXIT_OK
    if run.precision == 32:
        logger.warning("Single-precision sample is structurally invalid: %s", detail)
        console.print(f"[yellow]corrupted[/yellow] {detail}")
        return EXIT_OK
    console.print(f"[red]invalid[/red] {detail}")
    return EXIT_STRUCTURE


def _sample_structure(run: RunConfig, built: BuiltKernel) -> Sample | ElementarySample | None:
    """Draw, treating a pivot failure in 32-bit mode as a corrupted sample."""
    try:
        return _draw(run, built)
    except DPPError as error:
        if run.precision != 32:
            raise
        logger.warning("Single-precision elimination failed: %s", error)
        console.print(f"[yellow]corrupted[/yellow] {type(error).__name__}: {error}")
        return None


def cmd_ust(run: RunConfig, graph_name: str, cell: int) -> int:
    if not graph_name.startswith(("grid:", "hex:")):
        raise InputError(f"Expected grid:WxH or hex:d, got '{graph_name}'.")
    run.builder = graph_name
    built = load_kernel(run)
    assert built.graph is not None

    sample = _sample_structure(run, built)
    if sample is None:
        return EXIT_OK
    report = kernel_service.decode_spanning_tree(built.graph, sample.kept)
    if run.image is not None:
        tree_image.save(built.graph, sample.kept, run.image, cell)
    _emit_sample(run, sample)
    console.print(f"-log(#trees) {-kernel_service.spanning_tree_log_count(built.graph)!r}")
    detail = (
        f"{report.edge_count}/{report.expected_edges} edges, "
        f"acyclic={report.acyclic}, connected={report.connected}"
    )
    return _structural_outcome(run, report.valid, detail)


def cmd_aztec(run: RunConfig, order: int, cell: int) -> int:
    run.builder = f"aztec:{order}"
    built = load_kernel(run)
    assert built.aztec is not None

    sample = _sample_structure(run, built)
    if sample is None:
        return EXIT_OK
    report = kernel_service.decode_tiling(built.aztec, sample.kept)
    if run.image is not None:
        tiling_image.save(built.aztec, sample.kept, run.image, cell)
    _emit_sample(run, sample)
    detail = (
        f"{len(sample.kept)} dominoes, "
        f"uncovered={report.uncovered}, overcovered={report.overcovered}"
    )
    return _structural_outcome(run, report.valid, detail)


def cmd_validate(run: RunConfig, streams: int) -> int:
    built = load_kernel(run)
    try:
        sampler = make_sampler(run, built)
    except ValueError as error:
        raise InputError(str(error)) from error
    workers = min(streams, run.blocking.resolved_threads())
    report = oracle_service.chi_square_compare(
        sampler, as_dense(built.kernel), run.trials, run.significance, run.seed, streams, workers
    )

    table = Table(title=f"chi-square: {built.name} ({run.variant.value})")
    table.add_column("field")
    table.add_column("value", justify="right")
    for key, value in report.to_dict().items():
        table.add_row(key, str(value))
    console.print(table)
    if run.out is not None:
        run.out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    console.print("[green]PASS[/green]" if report.passed else "[red]FAIL[/red]")
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


def cmd_bench(run: RunConfig, sizes: str, variants: str, reps: int) -> int:
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
        variant_list = [v for v in variants.split(",") if v.strip()]
        for name in variant_list:
            bench_service.parse_variant(name)
    except ValueError as error:
        raise InputError(str(error)) from error
    rows = bench_service.benchmark_suite(size_list, variant_list, reps, run.seed, run.blocking)
    if run.out is None:
        bench_service.write_benchmark_csv(rows, sys.stdout)
    else:
        with open(run.out, "w", newline="") as stream:
            bench_service.write_benchmark_csv(rows, stream)
    return EXIT_OK


def cmd_map(run: RunConfig) -> int:
    built = load_kernel(run)
    if run.variant is Variant.SPARSE:
        try:
            built = BuiltKernel(built.name, as_sparse(built.kernel), grid=built.grid)
        except ValueError as error:
            raise InputError(str(error)) from error
    # sparse kernels take the sparse MAP path in make_sampler
    run.variant = Variant.MAP
    _emit_sample(run, _draw(run, built))
    return EXIT_OK


def cmd_export(run: RunConfig) -> int:
    if run.out is None:
        raise InputError("export needs --out.")
    built = load_kernel(run)
    io_service.write_kernel(run.out, built.kernel)
    console.print(f"wrote {built.name} (n={built.kernel.order}) to {run.out}")
    return EXIT_OK


def cmd_analyze(run: RunConfig) -> int:
    built = load_kernel(run)
    ordering = run.resolved_ordering(built.grid)
    try:
        sparse = as_sparse(built.kernel)
        perm = sparse_service.ordering_permutation(sparse, ordering, built.grid)
    except ValueError as error:
        raise InputError(str(error)) from error
    tree = sparse_service.symbolic_analyze(sparse, perm)
    lines = [
        f"n {sparse.order}",
        f"ordering {ordering}",
        f"nnz_kernel {sparse.nnz}",
        f"nnz_factor {tree.factor_nnz}",
        f"flops {tree.flops:.6g}",
        f"roots {int((tree.parent == -1).sum())}",
    ]
    text = "\n".join(lines) + "\n"
    if run.out is not None:
        run.out.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def dispatch(run: RunConfig, args: argparse.Namespace) -> int:
    if run.command == "sample":
        return cmd_sample(run)
    if run.command == "ust":
        return cmd_ust(run, args.graph, args.cell)
    if run.command == "aztec":
        return cmd_aztec(run, args.order, args.cell)
    if run.command == "validate":
        return cmd_validate(run, args.streams)
    if run.command == "bench":
        return cmd_bench(run, args.sizes, args.variant, args.reps)
    if run.command == "map":
        return cmd_map(run)
    if run.command == "export":
        return cmd_export(run)
    return cmd_analyze(run)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one CLI command and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    try:
        run = run_config_from(args)
    except ValueError as error:
        console.print(f"[red]error[/red] {error}")
        return EXIT_INPUT

    try:
        return dispatch(run, args)
    except InputError as error:
        console.print(f"[red]input error[/red] {error}")
        return EXIT_INPUT
    except DPPError as error:
        console.print(f"[red]{type(error).__name__}[/red] {error}")
        return EXIT_SAMPLER


if __name__ == "__main__":
    sys.exit(main())
