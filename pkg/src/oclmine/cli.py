"""Command line interface.

``oclmine bench`` sweeps the experiment grid and writes raw.csv,
summary.csv, boxplot.csv, and run_meta.json into the output directory.
``oclmine gen`` dumps a generated dataset as CSV; ``oclmine cluster``
runs one algorithm single-threaded and dumps the label assignment.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, cluster, datagen, gpubackend, parbackend
from .hotpath import KERNEL_IMPL
from .oclloader import LibraryNotFoundError, get_loader


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _sizes(text: str) -> tuple[int, ...]:
    """Comma list, or a doubling range like 128..2048."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        out = []
        while lo <= hi:
            out.append(lo)
            lo *= 2
        return tuple(out)
    return _int_list(text)


def _add_bench_parser(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("bench", help="run the benchmark grid")
    p.add_argument("--features", type=_int_list, default=(1, 2, 4))
    p.add_argument("--clusters", type=_int_list, default=(2, 4, 6, 8))
    p.add_argument("--sizes", type=_sizes, default=(128, 256, 512, 1024, 2048))
    p.add_argument("--passes", type=int, default=70)
    p.add_argument("--backends", type=lambda s: tuple(s.split(",")), default=("single", "multi"))
    p.add_argument("--algos", type=lambda s: tuple(s.split(",")), default=bench.ALGORITHMS,
                   help="subset of dbscan,kmeans")
    p.add_argument("--workers", type=int, default=None,
                   help=f"threads per worker set (default: cores-1 = {parbackend.DEFAULT_WORKERS})")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--opencl-lib", default=None, help="path to the OpenCL shared library")
    p.add_argument("--kernels", default=None, help="directory holding the .cl kernel sources")
    p.add_argument("--out", required=True, help="output directory for the CSV reports")
    p.add_argument("--allow-cpu-device", action="store_true",
                   help="accept a CPU OpenCL device when no GPU is present")
    p.add_argument("--cancel-after", type=float, default=None, metavar="MS",
                   help="inject a cancellation after MS milliseconds")
    p.add_argument("--no-verify", action="store_true", help="skip cross-backend verification")
    p.add_argument("--quiet", action="store_true")


def _cmd_bench(args: argparse.Namespace) -> int:
    spec = bench.GridSpec(
        features_set=args.features,
        cluster_counts=args.clusters,
        cluster_sizes=args.sizes,
        passes=args.passes,
        master_seed=args.seed,
    )
    gpu = None
    if "gpu" in args.backends:
        loader = get_loader()
        try:
            path = loader.load(args.opencl_lib)
            if not args.quiet:
                print(f"OpenCL library: {path}")
        except LibraryNotFoundError as exc:
            print(f"warning: {exc}", file=sys.stderr)
        gpu = bench.GpuOptions(
            loader=loader,
            sources=gpubackend.load_kernel_bundle(args.kernels),
            allow_cpu=args.allow_cpu_device,
        )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def on_record(rec: bench.TimingRecord) -> None:
        if args.quiet:
            return
        verify = "-" if rec.verify_ok is None else ("ok" if rec.verify_ok else "FAIL")
        print(
            f"{rec.tuple_id} pass={rec.pass_id} {rec.backend}/{rec.algo}: "
            f"{rec.status} wall={rec.wall_ns / 1e6:.3f}ms setup={rec.setup_ns / 1e6:.3f}ms verify={verify}"
        )

    records = bench.run_grid(
        spec,
        backends=args.backends,
        algorithms=args.algos,
        workers=args.workers,
        gpu=gpu,
        verify=not args.no_verify,
        cancel_after_ms=args.cancel_after,
        on_record=on_record,
    )
    bench.write_raw_csv(records, out / "raw.csv")
    completed = [r for r in records if r.status == bench.STATUS_COMPLETED]
    if completed:
        bench.write_summary_csv(bench.summarize(records), out / "summary.csv")
        bench.write_boxplot_csv(records, out / "boxplot.csv")
    bench.write_run_meta(
        out / "run_meta.json", spec, args.backends, args.workers,
        extra={"algorithms": list(args.algos), "records": len(records)},
    )
    failures = [r for r in records if r.verify_ok is False]
    if not args.quiet:
        print(f"{len(records)} records ({len(completed)} completed) -> {out}")
        print(f"kernel implementation: {KERNEL_IMPL}")
    if failures:
        print(f"VERIFICATION FAILED for {len(failures)} records", file=sys.stderr)
        return 1
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = datagen.DatasetSpec(features=args.features, cluster_sizes=args.sizes, seed=args.seed)
    ds, gt = datagen.generate(spec)
    datagen.dump_csv(ds, gt, args.out)
    print(f"{ds.n} points x {ds.d} features -> {args.out}")
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    spec = datagen.DatasetSpec(features=args.features, cluster_sizes=args.sizes, seed=args.seed)
    ds, _ = datagen.generate(spec)
    if args.algo == "dbscan":
        labels = cluster.dbscan_single(ds, cluster.derive_dbscan_params(ds.d))
    else:
        k = args.k if args.k is not None else len(args.sizes)
        labels = cluster.kmeans_single(ds, cluster.KmeansParams(k=k), seed=args.seed).labels
    cluster.dump_labels_csv(labels, args.out)
    print(f"{args.algo} labels for {ds.n} points -> {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="oclmine", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    _add_bench_parser(sub)

    p_gen = sub.add_parser("gen", help="generate a dataset and dump it as CSV")
    p_gen.add_argument("--features", type=int, required=True)
    p_gen.add_argument("--sizes", type=_int_list, required=True, help="per-cluster point counts")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)

    p_cl = sub.add_parser("cluster", help="run one algorithm single-threaded and dump labels")
    p_cl.add_argument("--algo", choices=("dbscan", "kmeans"), required=True)
    p_cl.add_argument("--features", type=int, required=True)
    p_cl.add_argument("--sizes", type=_int_list, required=True)
    p_cl.add_argument("--seed", type=int, default=0)
    p_cl.add_argument("--k", type=int, default=None, help="kmeans cluster count (default: generated count)")
    p_cl.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "gen":
        return _cmd_gen(args)
    return _cmd_cluster(args)


if __name__ == "__main__":
    sys.exit(main())
