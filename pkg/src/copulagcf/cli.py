"""Command-line interface.

Subcommands mirror the library surface: tensor inspection, basis plots,
moment accumulation, density grids, interdependence metrics, marginal
reports, and the two experiment drivers. All output is data (JSON/CSV);
plotting is left to downstream tools.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys

from . import harness, marginal
from .basis import BasisFamily, BasisSpec, basis_table
from .copula import build_copula, fit_cdf
from .gcf import CLAMP_FLOOR, GcfDensity, density_grid, gci_report, gcd, grid_centers
from .histogram import HistogramDensity, fit_hist
from .moments import Truncation, accumulate, load_moments, save_moments
from .tensorio import describe, flatten_filter, read_tensor


def _open_out(path):
    if path:
        return open(path, "w", newline="")
    return contextlib.nullcontext(sys.stdout)


def _cmd_inspect(args) -> int:
    tensor = read_tensor(args.file)
    print(describe(tensor))
    return 0


def _cmd_basis_plot(args) -> int:
    spec = BasisSpec(BasisFamily.parse(args.family), args.max_degree)
    ys = grid_centers(args.points)
    table = basis_table(spec, ys)
    if args.format == "json":
        rows = [
            {"y": float(y), "degree": t, "value": float(v)}
            for t in range(spec.max_degree + 1)
            for y, v in zip(ys, table[:, t])
        ]
        with _open_out(args.out) as fh:
            fh.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
        return 0
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "degree", "value"])
        for t in range(spec.max_degree + 1):
            for y, v in zip(ys, table[:, t]):
                writer.writerow([f"{y:.10g}", t, f"{v:.12g}"])
    return 0


def _copula_from_raw_file(path, seed: int):
    """Raw (n, D, 1, 1) tensor -> copula matrix via self-fitted CDFs."""
    tensor = read_tensor(path)
    samples = [flatten_filter(tensor, f) for f in range(tensor.dims[1])]
    cdfs = [fit_cdf(s, harness._mix(seed, d, 23)) for d, s in enumerate(samples)]
    return build_copula(cdfs, samples, jitter_seed=harness._mix(seed, 29)), cdfs, samples


def _cmd_transform(args) -> int:
    cop, _, _ = _copula_from_raw_file(args.data, args.seed)
    harness.save_copula(cop, args.out)
    print(f"wrote {cop.n}x{cop.dim} copula matrix to {args.out}")
    return 0


def _cmd_moments(args) -> int:
    if args.input == "copula":
        cop = harness.load_copula(args.copula_file)
    else:
        cop, _, _ = _copula_from_raw_file(args.copula_file, args.seed)
    spec = BasisSpec(BasisFamily.parse(args.basis), args.max_degree)
    tensor = accumulate(cop, spec, truncation=Truncation.parse(args.truncation))
    save_moments(tensor, args.out)
    print(f"wrote {len(tensor.entries)} moments (n={tensor.n}) to {args.out}")
    return 0


def _report_json(report, out) -> int:
    body = {
        "value": report.value,
        "top_contributors": [
            {"index": list(T), "value": v} for T, v in report.top_contributors(10)
        ],
    }
    text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gci(args) -> int:
    return _report_json(gci_report(load_moments(args.moments_file)), args.out)


def _cmd_gcd(args) -> int:
    mu = load_moments(args.moments_a)
    nu = load_moments(args.moments_b)
    return _report_json(gcd(mu, nu), args.out)


def _cmd_density_grid(args) -> int:
    cop, cdfs, _ = _copula_from_raw_file(args.data, args.seed)
    if cop.dim != 2:
        raise ValueError(f"density grids need a two-column dataset, got D={cop.dim}")
    estimates = {}
    for name in ("legendre", "fourier"):
        spec = BasisSpec(BasisFamily.parse(name), args.max_degree)
        estimates[name] = GcfDensity(accumulate(cop, spec), clamp_floor=CLAMP_FLOOR)
    estimates["histogram"] = HistogramDensity(fit_hist(cop, args.bins))
    grids = {name: density_grid(est, args.resolution) for name, est in estimates.items()}
    centers = grid_centers(args.resolution)
    if args.format == "json":
        rows = [
            {
                "y1": float(y1),
                "y2": float(y2),
                **{name: float(grids[name][i, j]) for name in grids},
            }
            for i, y1 in enumerate(centers)
            for j, y2 in enumerate(centers)
        ]
        with _open_out(args.out) as fh:
            fh.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
        return 0
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["y1", "y2", "legendre", "fourier", "histogram"])
        for i, y1 in enumerate(centers):
            for j, y2 in enumerate(centers):
                writer.writerow(
                    [f"{y1:.10g}", f"{y2:.10g}"]
                    + [f"{grids[name][i, j]:.12g}" for name in ("legendre", "fourier", "histogram")]
                )
    return 0


def _split_pairs(train_files, test_files):
    if test_files:
        if len(test_files) != len(train_files):
            raise ValueError("need one --test file per train file")
        return list(train_files), list(test_files)
    return list(train_files), list(train_files)


def _split_tensor_by_images(tensor):
    from .tensorio import FeatureTensorFile

    n_img = tensor.dims[0]
    if n_img < 2:
        raise ValueError("need --test files or at least 2 images to split")
    half = n_img // 2
    train_t = FeatureTensorFile(dims=(half, *tensor.dims[1:]), payload=tensor.payload[:half])
    test_t = FeatureTensorFile(
        dims=(n_img - half, *tensor.dims[1:]), payload=tensor.payload[half:]
    )
    return train_t, test_t


def _cmd_marginals(args) -> int:
    out_rows = []
    for i, path in enumerate(args.files):
        tensor = read_tensor(path)
        if args.test:
            if len(args.test) != len(args.files):
                raise ValueError("need one --test file per input file")
            train_t, test_t = tensor, read_tensor(args.test[i])
        else:
            train_t, test_t = _split_tensor_by_images(tensor)
        for f in range(tensor.dims[1]):
            train_s = flatten_filter(train_t, f)
            p_zero, train_pos = marginal.zero_split(train_s)
            if train_pos.size == 0:
                out_rows.append({"file": path, "filter": f, "dead": True})
                continue
            report = marginal.fit_report(
                train_s, flatten_filter(test_t, f), rounds=args.rounds,
                seed=args.seed, bins=args.bins,
            )
            out_rows.append(
                {
                    "file": path,
                    "filter": f,
                    "dead": False,
                    "p_zero": p_zero,
                    "winner": report.winner.value,
                    "kl": {
                        fam.value: {
                            "mean": report.mean_kl[fam],
                            "std": report.std_kl[fam],
                        }
                        for fam in sorted(report.mean_kl, key=lambda x: x.value)
                    },
                }
            )
    text = json.dumps(out_rows, sort_keys=True, indent=2) + "\n"
    with _open_out(args.out) as fh:
        fh.write(text)
    return 0


def _cmd_nonzero_table(args) -> int:
    rows = []
    for layer, path in enumerate(args.files):
        tensor = read_tensor(path)
        nz = 100.0 * float((tensor.payload != 0.0).mean())
        rows.append({"layer": layer, "file": path, "nonzero_pct": round(nz, 4)})
    if args.format == "csv":
        with _open_out(args.out) as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "file", "nonzero_pct"])
            for r in rows:
                writer.writerow([r["layer"], r["file"], f"{r['nonzero_pct']:.4f}"])
    else:
        with _open_out(args.out) as fh:
            fh.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    return 0


def _config_from_args(args) -> harness.ExperimentConfig:
    if args.config:
        return harness.ExperimentConfig.from_json(args.config)
    train, test = _split_pairs(args.train, args.test)
    return harness.ExperimentConfig(
        train_files=train,
        test_files=test,
        group_size=args.group_size,
        rounds=args.rounds,
        max_degree=args.max_degree,
        bins=args.bins,
        seed=args.seed,
        truncation=args.truncation,
    )


def _cmd_group_experiment(args) -> int:
    cfg = _config_from_args(args)
    reports = harness.run_group_experiment(cfg)
    if args.format == "csv":
        text = harness.comparison_reports_to_csv(reports)
    else:
        text = harness.reports_to_json(reports)
    with _open_out(args.out) as fh:
        fh.write(text)
    return 0


def _cmd_marginal_experiment(args) -> int:
    cfg = _config_from_args(args)
    if not args.config:
        cfg.marginal_rounds = args.rounds
    reports = harness.run_marginal_experiment(cfg)
    if args.format == "csv":
        with _open_out(args.out) as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "family", "mean_kl", "lo", "hi", "nonzero_pct", "dead"])
            for rep in reports:
                for fam in sorted(rep.fit.mean_kl, key=lambda f: f.value):
                    lo, hi = rep.fit.interval(fam)
                    writer.writerow(
                        [rep.layer, fam.value, f"{rep.fit.mean_kl[fam]:.6f}",
                         f"{lo:.6f}", f"{hi:.6f}", f"{rep.nonzero_pct:.4f}", rep.dead_filters]
                    )
    else:
        with _open_out(args.out) as fh:
            fh.write(harness.reports_to_json(reports))
    return 0


def _cmd_synth(args) -> int:
    if args.kind == "marginal-layers":
        train, test = harness.synth_marginal_layers(
            args.out_dir, n_filters=args.filters, n_values=args.n, seed=args.seed
        )
    else:
        train_path, test_path = harness.synth_copula_dataset(
            args.kind, args.dim, args.n, args.seed, args.out_train, args.out_test,
            rho=args.rho,
        )
        train, test = [train_path], [test_path]
    if args.format == "csv":
        lines = ["split,file"]
        lines += [f"train,{p}" for p in train]
        lines += [f"test,{p}" for p in test]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps({"train": train, "test": test}, sort_keys=True, indent=2) + "\n"
    with _open_out(args.out) as fh:
        fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copulagcf",
        description="Empirical copula density measurement with orthogonal moments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print tensor file header")
    p.add_argument("file")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("basis-plot", help="basis function values on a grid")
    p.add_argument("--family", required=True)
    p.add_argument("--max-degree", type=int, default=8)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--seed", type=int, default=0, help="unused; the grid is deterministic")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_basis_plot)

    p = sub.add_parser("transform", help="rank-transform a raw dataset into a copula file")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("moments", help="accumulate moments of a dataset file")
    p.add_argument("copula_file")
    p.add_argument("--input", choices=("raw", "copula"), default="raw",
                   help="raw data is rank-transformed first; copula files are used as-is")
    p.add_argument("--basis", required=True)
    p.add_argument("--max-degree", type=int, default=8)
    p.add_argument("--truncation", default=Truncation.TENSOR_PRODUCT.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("gci", help="interdependence metric of a moment file")
    p.add_argument("moments_file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gci)

    p = sub.add_parser("gcd", help="characteristic distance between two moment files")
    p.add_argument("moments_a")
    p.add_argument("moments_b")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gcd)

    p = sub.add_parser("density-grid", help="density grid for a 2-column dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--resolution", type=int, default=16)
    p.add_argument("--max-degree", type=int, default=8)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_density_grid)

    p = sub.add_parser("marginals", help="per-filter marginal fit report")
    p.add_argument("files", nargs="+")
    p.add_argument("--test", nargs="*", default=None)
    p.add_argument("--rounds", type=int, default=30)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_marginals)

    p = sub.add_parser("nonzero-table", help="per-layer nonzero percentage table")
    p.add_argument("files", nargs="+")
    p.add_argument("--seed", type=int, default=0, help="unused; counting is deterministic")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_nonzero_table)

    for name, fn in (
        ("group-experiment", _cmd_group_experiment),
        ("marginal-experiment", _cmd_marginal_experiment),
    ):
        p = sub.add_parser(name, help=f"run the {name.replace('-', ' ')}")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--train", nargs="*", default=[])
        p.add_argument("--test", nargs="*", default=[])
        p.add_argument("--group-size", type=int, default=4)
        p.add_argument("--rounds", type=int, default=30)
        p.add_argument("--max-degree", type=int, default=4)
        p.add_argument("--bins", type=int, default=6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--truncation", default=Truncation.TOTAL_DEGREE.value)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("synth", help="generate synthetic ground-truth datasets")
    p.add_argument("--kind", required=True, choices=(*harness.COPULA_KINDS, "marginal-layers"))
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", default="train.fcpg")
    p.add_argument("--out-test", default="test.fcpg")
    p.add_argument("--out-dir", default="layers")
    p.add_argument("--filters", type=int, default=8)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the file manifest here instead of stdout")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # CLI surface: report and exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
