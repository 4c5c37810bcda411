"""End-to-end experiment drivers and synthetic ground-truth generators.

Protocol note shared by every experiment here: reference CDFs are fitted
on training data only, and test data is pushed through those same CDFs
before any density is evaluated. Every report records this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import marginal
from .basis import BasisFamily, BasisSpec
from .copula import CopulaMatrix, build_copula, fit_cdf
from .gcf import CLAMP_FLOOR, GcfDensity, cross_entropy
from .histogram import HistogramDensity, fit_hist
from .moments import Truncation, accumulate
from .tensorio import flatten_filter, read_tensor, write_tensor

PROTOCOL_NOTE = "test features transformed with train-fitted CDFs"

# tail-dependent generator constants
TAIL_EVENT_QUANTILE = 0.02
TAIL_FORCE_PROB = 0.8
TAIL_TARGET_DECILE = 0.1


def _mix(*parts: int) -> int:
    """Deterministic 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence(entropy=list(parts)).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    train_files: list[str]
    test_files: list[str]
    group_size: int = 4
    rounds: int = 30
    bases: tuple[str, ...] = ("legendre", "fourier")
    max_degree: int = 4
    bins: int = 6
    seed: int = 0
    truncation: str = Truncation.TOTAL_DEGREE.value
    clamp_floor: float = CLAMP_FLOOR
    # marginal experiment knobs
    marginal_rounds: int = 30
    kl_bins: int = 50
    filters_per_round: int = 3
    max_fit_values: int = 20000

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError(f"group size must be at least 2, got {self.group_size}")
        if self.rounds < 2:
            raise ValueError(f"rounds must be at least 2, got {self.rounds}")
        if len(self.train_files) != len(self.test_files):
            raise ValueError("need one test file per train file")
        self.bases = tuple(self.bases)
        Truncation.parse(self.truncation)
        for name in self.bases:
            BasisFamily.parse(name)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls(**json.load(fh))


@dataclass
class MethodStats:
    mean: float
    std: float
    per_round: list[float]

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean - self.std, self.mean + self.std)


@dataclass
class ComparisonReport:
    layer: int
    methods: dict[str, MethodStats]
    significant: dict[str, bool]
    rounds: int
    group_size: int
    protocol: str = PROTOCOL_NOTE

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "rounds": self.rounds,
            "group_size": self.group_size,
            "protocol": self.protocol,
            "methods": {
                name: {
                    "mean": st.mean,
                    "std": st.std,
                    "interval": list(st.interval),
                    "per_round": st.per_round,
                }
                for name, st in sorted(self.methods.items())
            },
            "significant": dict(sorted(self.significant.items())),
        }


def recompute_significance(per_round: dict[str, list[float]]) -> dict[str, bool]:
    """A method is significantly best when its mean is lowest and its
    one-sigma interval is disjoint from every other method's interval."""
    stats = {
        name: (float(np.mean(v)), float(np.std(v, ddof=1)))
        for name, v in per_round.items()
    }
    best = min(stats, key=lambda name: stats[name][0])
    flags = {name: False for name in stats}
    b_mean, b_std = stats[best]
    disjoint = all(
        b_mean + b_std < m - s or m + s < b_mean - b_std
        for name, (m, s) in stats.items()
        if name != best
    )
    flags[best] = disjoint
    return flags


def _live_filters(tensor) -> list[int]:
    live = []
    for f in range(tensor.dims[1]):
        if float(tensor.payload[:, f, :, :].max(initial=0.0)) > 0.0:
            live.append(f)
    return live


def run_group_experiment(cfg: ExperimentConfig) -> list[ComparisonReport]:
    """Cross-entropy comparison of series and histogram fits on random
    feature groups, one report per layer."""
    truncation = Truncation.parse(cfg.truncation)
    reports = []
    for layer, (train_path, test_path) in enumerate(zip(cfg.train_files, cfg.test_files)):
        t_train = read_tensor(train_path)
        t_test = read_tensor(test_path)
        live = _live_filters(t_train)
        if len(live) < cfg.group_size:
            raise ValueError(
                f"layer {layer}: {len(live)} live features < group size {cfg.group_size}"
            )
        per_round: dict[str, list[float]] = {name: [] for name in (*cfg.bases, "histogram")}
        for r in range(cfg.rounds):
            rng = np.random.default_rng(_mix(cfg.seed, layer, r, 0))
            feats = [int(f) for f in rng.choice(live, size=cfg.group_size, replace=False)]
            train_samples = [flatten_filter(t_train, f, layer_id=layer) for f in feats]
            test_samples = [flatten_filter(t_test, f, layer_id=layer) for f in feats]
            cdfs = [
                fit_cdf(s, _mix(cfg.seed, layer, r, 1 + d))
                for d, s in enumerate(train_samples)
            ]
            cop_train = build_copula(cdfs, train_samples, jitter_seed=_mix(cfg.seed, layer, r, 101))
            cop_test = build_copula(cdfs, test_samples, jitter_seed=_mix(cfg.seed, layer, r, 102))
            for name in cfg.bases:
                spec = BasisSpec(BasisFamily.parse(name), cfg.max_degree)
                mom = accumulate(cop_train, spec, truncation=truncation)
                est = GcfDensity(mom, clamp_floor=cfg.clamp_floor)
                per_round[name].append(cross_entropy(est, cop_test))
            grid = fit_hist(cop_train, cfg.bins)
            est_h = HistogramDensity(grid, clamp_floor=cfg.clamp_floor)
            per_round["histogram"].append(cross_entropy(est_h, cop_test))
        methods = {
            name: MethodStats(
                mean=float(np.mean(v)), std=float(np.std(v, ddof=1)), per_round=v
            )
            for name, v in per_round.items()
        }
        reports.append(
            ComparisonReport(
                layer=layer,
                methods=methods,
                significant=recompute_significance(per_round),
                rounds=cfg.rounds,
                group_size=cfg.group_size,
            )
        )
    return reports


@dataclass
class LayerMarginalReport:
    layer: int
    nonzero_pct: float
    dead_filters: int
    total_filters: int
    fit: marginal.FitReport

    def to_dict(self) -> dict:
        return {
            "layer": self.layer,
            "protocol": PROTOCOL_NOTE,
            "nonzero_pct": self.nonzero_pct,
            "dead_filters": self.dead_filters,
            "total_filters": self.total_filters,
            "kl": {
                fam.value: {
                    "mean": self.fit.mean_kl[fam],
                    "std": self.fit.std_kl[fam],
                    "interval": list(self.fit.interval(fam)),
                    "per_round": self.fit.per_round[fam],
                }
                for fam in sorted(self.fit.mean_kl, key=lambda f: f.value)
            },
            "winner": self.fit.winner.value,
        }


def run_marginal_experiment(cfg: ExperimentConfig) -> list[LayerMarginalReport]:
    """Per-layer nonzero percentages plus per-family KL over rounds of
    randomly chosen live filters. Dead filters are counted, not fitted."""
    reports = []
    for layer, (train_path, test_path) in enumerate(zip(cfg.train_files, cfg.test_files)):
        t_train = read_tensor(train_path)
        t_test = read_tensor(test_path)
        n_filters = t_train.dims[1]
        total = zeros = 0
        live: list[int] = []
        for f in range(n_filters):
            vals = t_train.payload[:, f, :, :]
            total += vals.size
            zeros += int((vals == 0.0).sum())
            if float(vals.max(initial=0.0)) > 0.0:
                live.append(f)
        dead = n_filters - len(live)
        if not live:
            raise ValueError(f"layer {layer}: every filter is dead")
        per_round: dict[marginal.Family, list[float]] = {
            fam: [] for fam in marginal.ALL_FAMILIES
        }
        take = min(cfg.filters_per_round, len(live))
        for r in range(cfg.marginal_rounds):
            rng = np.random.default_rng(_mix(cfg.seed, layer, r, 7))
            chosen = [int(f) for f in rng.choice(live, size=take, replace=False)]
            kls = {fam: [] for fam in marginal.ALL_FAMILIES}
            for f in chosen:
                _, train_pos = marginal.zero_split(flatten_filter(t_train, f))
                _, test_pos = marginal.zero_split(flatten_filter(t_test, f))
                if train_pos.size == 0 or test_pos.size == 0:
                    continue
                train_pos = _cap(train_pos, cfg.max_fit_values, rng)
                test_pos = _cap(test_pos, cfg.max_fit_values, rng)
                for fam in marginal.ALL_FAMILIES:
                    fit = marginal.fit_sa(fam, train_pos, seed=_mix(cfg.seed, layer, r, f, 11))
                    kls[fam].append(marginal.kl_fit(fam, fit.params, test_pos, bins=cfg.kl_bins))
            for fam in marginal.ALL_FAMILIES:
                if kls[fam]:
                    per_round[fam].append(float(np.mean(kls[fam])))
        mean_kl = {fam: float(np.mean(v)) for fam, v in per_round.items()}
        std_kl = {fam: float(np.std(v, ddof=1)) for fam, v in per_round.items()}
        fit = marginal.FitReport(
            mean_kl=mean_kl,
            std_kl=std_kl,
            per_round=per_round,
            winner=min(mean_kl, key=mean_kl.get),
        )
        reports.append(
            LayerMarginalReport(
                layer=layer,
                nonzero_pct=100.0 * (1.0 - zeros / total),
                dead_filters=dead,
                total_filters=n_filters,
                fit=fit,
            )
        )
    return reports


def _cap(values: np.ndarray, limit: int, rng: np.random.Generator) -> np.ndarray:
    if values.size <= limit:
        return values
    return values[rng.choice(values.size, size=limit, replace=False)]


# ---------------------------------------------------------------------------
# Synthetic ground-truth generators
# ---------------------------------------------------------------------------

COPULA_KINDS = ("independent", "gaussian", "comonotone", "tail-dependent")


def _draw_copula_sample(kind: str, dim: int, n: int, rng: np.random.Generator, rho: float) -> np.ndarray:
    if kind == "independent":
        return rng.random((n, dim))
    if kind == "gaussian":
        if not -1.0 < rho < 1.0:
            raise ValueError(f"correlation must lie in (-1, 1), got {rho}")
        cov = np.full((dim, dim), rho)
        np.fill_diagonal(cov, 1.0)
        z = rng.multivariate_normal(np.zeros(dim), cov, size=n, method="cholesky")
        return special.ndtr(z)
    if kind == "comonotone":
        u = rng.random(n)
        return np.tile(u[:, None], (1, dim))
    if kind == "tail-dependent":
        if dim < 2:
            raise ValueError("tail-dependent kind needs at least two columns")
        u = rng.random((n, dim))
        u1 = u[:, 0]
        force = rng.random(n)
        w = rng.random(n)
        forced_values = rng.random(n)
        p_event = TAIL_EVENT_QUANTILE * TAIL_FORCE_PROB
        mask = (u1 > 1.0 - TAIL_EVENT_QUANTILE) & (force < TAIL_FORCE_PROB)
        # unforced draws are tilted away from the target decile so the
        # marginal of column 2 stays exactly uniform (a genuine copula)
        cut = (1.0 - TAIL_TARGET_DECILE) / (1.0 - p_event)
        thinned = 1.0 - p_event / TAIL_TARGET_DECILE
        base = np.where(
            w < cut,
            (1.0 - p_event) * w,
            (1.0 - TAIL_TARGET_DECILE)
            + ((1.0 - p_event) * w - (1.0 - TAIL_TARGET_DECILE)) / thinned,
        )
        u[:, 1] = np.where(
            mask, (1.0 - TAIL_TARGET_DECILE) + TAIL_TARGET_DECILE * forced_values, base
        )
        return u
    raise ValueError(f"unknown copula kind {kind!r}; expected one of {COPULA_KINDS}")


def synth_copula_dataset(
    kind: str,
    dim: int,
    n: int,
    seed: int,
    out_train,
    out_test,
    rho: float = 0.8,
) -> tuple[str, str]:
    """Write an independent train/test pair of raw samples with the given
    dependence structure, as (n, D, 1, 1) tensors."""
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be positive")
    for split, path in ((0, out_train), (1, out_test)):
        rng = np.random.default_rng(_mix(seed, split, 13))
        values = _draw_copula_sample(kind, dim, n, rng, rho)
        write_tensor(path, values.reshape(n, dim, 1, 1))
    return str(out_train), str(out_test)


# layer schedules for the synthetic marginal dataset: early layers carry a
# non-exponential bump, deeper layers are increasingly clean zero-inflated
# exponentials
_BUMP_WEIGHTS = (0.5, 0.35, 0.15, 0.05, 0.0)
_ZERO_MASSES = (0.2, 0.3, 0.45, 0.55, 0.5)


def synth_marginal_layers(
    out_dir,
    n_filters: int = 8,
    n_values: int = 20000,
    seed: int = 0,
    dead_filters: int = 0,
) -> tuple[list[str], list[str]]:
    """Five synthetic layers as train/test tensor file pairs."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    train_files, test_files = [], []
    for layer, (bump_w, p_zero) in enumerate(zip(_BUMP_WEIGHTS, _ZERO_MASSES)):
        for split, bucket in ((0, train_files), (1, test_files)):
            rng = np.random.default_rng(_mix(seed, layer, split, 17))
            data = np.empty((1, n_filters, n_values, 1), dtype=np.float64)
            for f in range(n_filters):
                if f < dead_filters:
                    data[0, f, :, 0] = 0.0
                    continue
                rate = 0.8 + 0.1 * f
                vals = rng.exponential(1.0 / rate, n_values)
                bump = rng.gamma(36.0, 1.0 / 12.0, n_values)
                use_bump = rng.random(n_values) < bump_w
                vals = np.where(use_bump, bump, vals)
                vals[rng.random(n_values) < p_zero] = 0.0
                data[0, f, :, 0] = vals
            path = os.path.join(out_dir, f"layer{layer}_{'train' if split == 0 else 'test'}.fcpg")
            write_tensor(path, data)
            bucket.append(path)
    return train_files, test_files


# ---------------------------------------------------------------------------
# Copula matrix persistence (tensor-io format, dims [n, D, 1, 1])
# ---------------------------------------------------------------------------


def save_copula(matrix: CopulaMatrix, path) -> None:
    write_tensor(path, matrix.values.reshape(matrix.n, matrix.dim, 1, 1))


def load_copula(path) -> CopulaMatrix:
    tensor = read_tensor(path)
    if tensor.ndim != 4 or tensor.dims[2] != 1 or tensor.dims[3] != 1:
        raise ValueError(f"{path}: copula files must have dims [n, D, 1, 1]")
    values = tensor.payload[:, :, 0, 0].astype(np.float64)
    if values.size and (np.abs(values) >= 1.0).any():
        raise ValueError(f"{path}: copula values must lie strictly inside (-1, 1)")
    return CopulaMatrix(values=values, column_ids=tuple(range(tensor.dims[1])))


# ---------------------------------------------------------------------------
# Report serialization (byte-stable for fixed inputs)
# ---------------------------------------------------------------------------


def reports_to_json(reports) -> str:
    payload = [r.to_dict() for r in reports]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def comparison_reports_to_csv(reports) -> str:
    lines = ["layer,method,mean,std,lo,hi,significant,rounds,group_size"]
    for rep in reports:
        for name in sorted(rep.methods):
            st = rep.methods[name]
            lo, hi = st.interval
            lines.append(
                f"{rep.layer},{name},{st.mean:.6f},{st.std:.6f},{lo:.6f},{hi:.6f},"
                f"{int(rep.significant[name])},{rep.rounds},{rep.group_size}"
            )
    return "\n".join(lines) + "\n"
