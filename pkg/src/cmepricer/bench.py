"""Experiment harness: replication grids, references, and CSV emission.

The grid crosses path counts, maturities and a strike ladder, repeats every
cell over independent replications with deterministic per-cell seeds, and
prices each cell with both methods on one shared path set.  Results stream
out as rows; aggregations reproduce the benchmark figure datasets
(timing, aggregate implied-vol error, per-moneyness error, factorization
ranks), one CSV per figure panel.

At the benchmark's zero interest rate the American put equals the European
put, so reference implied volatilities come from a large plain Monte Carlo
European valuation on a reserved seed lane.  For nonzero rates a reference
CSV must be supplied.
"""

import csv
import math
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import (
    EmptyInput,
    InvalidCount,
    InvalidInput,
    MissingReference,
    NotApplicable,
    PriceOutOfBounds,
)
from .market import HestonParams, experiment_seed, simulate_heston, simulate_terminal_logprice
from .pricing import (
    ContractSpec,
    _StepRidge,
    fit_pricing_operator,
    implied_vol_put,
    price_american_ls,
    price_european_mc,
    price_strike_ladder,
)

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ReferenceEntry",
    "strike_grid",
    "run_grid",
    "reference_prices_r0",
    "load_reference_csv",
    "write_reference_csvs",
    "aggregate_iv_error",
    "rank_summary",
    "write_figure_csvs",
    "run_bench",
    "run_rank_study",
    "run_convergence_study",
    "parse_config_file",
]

# Seed lanes disjoint from the replication lanes (rep * 16 + ...).
REFERENCE_SEED_BASE = 1 << 40
CONVERGENCE_SEED_BASE = 1 << 41
CONVERGENCE_TEST_SEED = CONVERGENCE_SEED_BASE + 0xFFFF

DEFAULT_RANK_EPSILONS = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid and method settings; defaults mirror the benchmark protocol."""

    n_grid: tuple = (100, 1_000, 10_000, 100_000)
    maturities: tuple = (1.0 / 12.0, 0.5, 1.0, 2.0)
    moneyness_count: int = 10
    replications: int = 100
    lambda_rule: str = "n^{-1/2}"
    epsilon: float = 1e-5
    heston: HestonParams = field(default_factory=HestonParams)
    methods: tuple = ("cme_lr", "ls")
    output_dir: str = "results"
    reference_paths: int = 1_000_000
    ls_degree: int = 4

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "maturities", tuple(float(t) for t in self.maturities))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.n_grid or not self.maturities:
            raise InvalidInput("n_grid and maturities must be nonempty")
        if len(self.n_grid) > 4 or len(self.maturities) > 4:
            raise InvalidInput("the seed layout supports at most 4 path counts and 4 maturities")
        if min(self.n_grid) < 2 or min(self.maturities) <= 0:
            raise InvalidInput("path counts must be >= 2 and maturities positive")
        if self.moneyness_count < 2:
            raise InvalidCount("moneyness_count must be at least 2")
        if self.replications < 1:
            raise InvalidInput("replications must be at least 1")
        if self.lambda_rule != "n^{-1/2}":
            raise InvalidInput(f"unknown lambda rule {self.lambda_rule!r}")
        if self.epsilon <= 0:
            raise InvalidInput("epsilon must be positive")
        unknown = set(self.methods) - {"cme_lr", "ls"}
        if unknown or not self.methods:
            raise InvalidInput(f"methods must be a nonempty subset of cme_lr, ls; got {self.methods}")
        if self.reference_paths < 2:
            raise InvalidInput("reference_paths must be at least 2")

    def lam(self, n):
        return float(n) ** -0.5


@dataclass
class ResultRow:
    method: str
    n: int
    maturity: float
    strike: float
    log_moneyness: float
    rep: int
    price: float
    elapsed_micros: int
    offline_micros: int
    seed: int
    epsilon: float
    implied_vol: float | None = None
    rel_iv_error: float | None = None
    rank_x: int | None = None
    rank_y: int | None = None
    valid: bool = True
    invalid_reason: str = ""


@dataclass(frozen=True)
class ReferenceEntry:
    maturity: float
    strike: float
    price: float
    stderr: float
    implied_vol: float | None
    valid: bool


def strike_grid(s0, v0, maturity, count):
    """Strike ladder ``s0 * exp(m sqrt(v0) sqrt(T))`` over the standardized
    log-moneyness grid ``m`` evenly spaced on [-2, 2]."""
    if count < 2:
        raise InvalidCount("strike grid needs at least 2 points")
    m = np.linspace(-2.0, 2.0, count)
    return s0 * np.exp(m * math.sqrt(v0) * math.sqrt(maturity))


def log_moneyness_grid(count):
    if count < 2:
        raise InvalidCount("strike grid needs at least 2 points")
    return np.linspace(-2.0, 2.0, count)


def reference_prices_r0(config):
    """European-put reference per (maturity, strike) at zero interest rate.

    Valid because with r = 0 the American put on a martingale equals the
    European put; priced by plain Monte Carlo on a reserved seed lane,
    with the standard error recorded per strike.
    """
    if config.heston.r != 0.0:
        raise NotApplicable("plain European reference requires r == 0; supply a reference CSV")
    table = {}
    for t_idx, maturity in enumerate(config.maturities):
        terminal = simulate_terminal_logprice(
            config.heston, config.reference_paths, maturity, REFERENCE_SEED_BASE + t_idx
        )
        strikes = strike_grid(config.heston.s0, config.heston.v0, maturity, config.moneyness_count)
        for k_idx, strike in enumerate(strikes):
            price, stderr = price_european_mc(terminal, ContractSpec(float(strike), maturity), rate=0.0)
            try:
                iv = implied_vol_put(price, config.heston.s0, float(strike), 0.0, maturity)
                valid = True
            except PriceOutOfBounds:
                iv = None
                valid = False
            table[(t_idx, k_idx)] = ReferenceEntry(maturity, float(strike), price, stderr, iv, valid)
    return table


def load_reference_csv(path, config):
    """Reference IVs from a CSV with columns maturity, strike, implied_vol
    (and optional price, stderr), matched to the config grid by value."""
    entries = []
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            entries.append(record)
    table = {}
    for t_idx, maturity in enumerate(config.maturities):
        strikes = strike_grid(config.heston.s0, config.heston.v0, maturity, config.moneyness_count)
        for k_idx, strike in enumerate(strikes):
            match = None
            for record in entries:
                if (
                    abs(float(record["maturity"]) - maturity) < 1e-9 * max(1.0, maturity)
                    and abs(float(record["strike"]) - strike) < 1e-6 * strike
                ):
                    match = record
                    break
            if match is None:
                raise MissingReference(f"no reference row for maturity {maturity}, strike {strike}")
            iv_text = (match.get("implied_vol") or "").strip()
            table[(t_idx, k_idx)] = ReferenceEntry(
                maturity,
                float(strike),
                float(match.get("price", "nan") or "nan"),
                float(match.get("stderr", "0") or 0.0),
                float(iv_text) if iv_text and iv_text != "None" else None,
                bool(iv_text and iv_text != "None"),
            )
    return table


def run_grid(config, reference=None):
    """Run the replication grid, yielding one :class:`ResultRow` per
    (method, strike) in each cell.

    Each (rep, n, maturity) cell simulates one path set shared by both
    methods; the kernel method trains its operator once per cell and
    reuses it across the strike ladder.  A failed implied-vol inversion
    marks the row invalid instead of aborting.
    """
    s0, v0 = config.heston.s0, config.heston.v0
    for rep in range(config.replications):
        for n_idx, n in enumerate(config.n_grid):
            for t_idx, maturity in enumerate(config.maturities):
                seed = experiment_seed(rep, n_idx, t_idx)
                paths = simulate_heston(config.heston, n, maturity, seed)
                strikes = strike_grid(s0, v0, maturity, config.moneyness_count)
                moneyness = log_moneyness_grid(config.moneyness_count)

                ladder = None
                if "cme_lr" in config.methods:
                    t0 = time.perf_counter_ns()
                    operator = fit_pricing_operator(paths, lam=config.lam(n), epsilon=config.epsilon)
                    ridge = _StepRidge(paths, operator.kernel_x, config.lam(n))
                    offline_micros = int((time.perf_counter_ns() - t0) // 1000)
                    ladder = price_strike_ladder(
                        paths,
                        strikes,
                        maturity,
                        rate=config.heston.r,
                        lam=config.lam(n),
                        epsilon=config.epsilon,
                        operator=operator,
                        step_ridge=ridge,
                    )
                    for result in ladder:
                        result.offline_micros = offline_micros

                for k_idx, strike in enumerate(strikes):
                    contract = ContractSpec(float(strike), maturity)
                    for method in config.methods:
                        if method == "cme_lr":
                            result = ladder[k_idx]
                            row_offline = result.offline_micros
                        else:
                            result = price_american_ls(paths, contract, rate=config.heston.r, degree=config.ls_degree)
                            row_offline = 0
                        row = ResultRow(
                            method=method,
                            n=n,
                            maturity=maturity,
                            strike=float(strike),
                            log_moneyness=float(moneyness[k_idx]),
                            rep=rep,
                            price=result.price,
                            elapsed_micros=result.elapsed_micros,
                            offline_micros=row_offline,
                            seed=seed,
                            epsilon=config.epsilon,
                            rank_x=result.rank_x,
                            rank_y=result.rank_y,
                        )
                        try:
                            row.implied_vol = implied_vol_put(result.price, s0, float(strike), config.heston.r, maturity)
                        except PriceOutOfBounds as exc:
                            row.valid = False
                            row.invalid_reason = str(exc)
                        if row.valid and reference is not None:
                            entry = reference.get((t_idx, k_idx))
                            if entry is not None and entry.valid and entry.implied_vol:
                                row.rel_iv_error = abs(row.implied_vol - entry.implied_vol) / entry.implied_vol
                        yield row


def _normal_ci(values):
    """Mean and 95% normal-approximation band over replication values."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean, mean
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, mean - half, mean + half


def aggregate_iv_error(rows, reference=None):
    """Per-(n, T) and per-moneyness summaries of the relative IV error.

    The aggregate error for a cell is the mean over replications and
    strikes; confidence bands are normal-approximation intervals over the
    per-replication strike means.  Invalid rows are excluded, with counts
    reported.  Rows lacking ``rel_iv_error`` are filled from ``reference``
    (a table as produced by :func:`reference_prices_r0`) when given.
    """
    rows = [r for r in rows]
    if reference is not None:
        lookup = {
            (round(entry.maturity, 12), round(entry.strike, 6)): entry
            for entry in reference.values()
            if entry.valid and entry.implied_vol
        }
        for r in rows:
            if r.valid and r.rel_iv_error is None and r.implied_vol is not None:
                entry = lookup.get((round(r.maturity, 12), round(r.strike, 6)))
                if entry is not None:
                    r.rel_iv_error = abs(r.implied_vol - entry.implied_vol) / entry.implied_vol
    if not any(r.rel_iv_error is not None for r in rows if r.valid):
        raise MissingReference("rows carry no relative IV errors; attach a reference first")
    by_cell = {}
    excluded = 0
    for r in rows:
        if not r.valid or r.rel_iv_error is None:
            excluded += 1
            continue
        by_cell.setdefault((r.method, r.n, r.maturity), {}).setdefault(r.rep, []).append(r)
    aggregate = {}
    for (method, n, maturity), reps in by_cell.items():
        rep_means = [float(np.mean([r.rel_iv_error for r in cell_rows])) for cell_rows in reps.values()]
        aggregate[(method, n, maturity)] = _normal_ci(rep_means)
    by_strike = {}
    for r in rows:
        if not r.valid or r.rel_iv_error is None:
            continue
        by_strike.setdefault((r.method, r.n, r.maturity, round(r.log_moneyness, 12)), []).append(r.rel_iv_error)
    moneyness = {key: _normal_ci(vals) for key, vals in by_strike.items()}
    return aggregate, moneyness, excluded


def aggregate_cell_times(rows):
    """Per-(method, n, T) stats of log10 cell time in microseconds.

    A replication's cell time is the sum of its per-strike pricing times
    plus, for the kernel method, the once-per-cell training time.
    """
    cells = {}
    for r in rows:
        cells.setdefault((r.method, r.n, r.maturity, r.rep), []).append(r)
    per_rep = {}
    for (method, n, maturity, rep), cell_rows in cells.items():
        total = sum(r.elapsed_micros for r in cell_rows) + max(r.offline_micros for r in cell_rows)
        per_rep.setdefault((method, n, maturity), []).append(math.log10(max(total, 1)))
    return {key: _normal_ci(vals) for key, vals in per_rep.items()}


def rank_summary(rows):
    """Mean factorization ranks per (n, maturity, epsilon) over kernel runs."""
    cme = [r for r in rows if r.method == "cme_lr" and r.rank_y is not None]
    if not cme:
        raise EmptyInput("no cme_lr rows to summarize")
    cells = {}
    for r in cme:
        cells.setdefault((r.n, r.maturity, r.epsilon), {}).setdefault(r.rep, (r.rank_x, r.rank_y))
    out = {}
    for key, reps in cells.items():
        xs = [v[0] for v in reps.values()]
        ys = [v[1] for v in reps.values()]
        out[key] = (float(np.mean(xs)), float(np.mean(ys)))
    return out


_ROW_FIELDS = [f.name for f in fields(ResultRow)]


def open_row_writer(path):
    fh = open(path, "w", newline="")
    writer = csv.writer(fh)
    writer.writerow(_ROW_FIELDS)
    return fh, writer


def write_row(writer, row):
    writer.writerow([getattr(row, name) if getattr(row, name) is not None else "" for name in _ROW_FIELDS])


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_figure_csvs(rows, config, out_dir):
    """Emit the figure-equivalent CSV datasets.

    Files: ``winner_time_T{i}.csv`` (log10 cell times), ``winner_err_T{i}.csv``
    (aggregate relative IV error vs n), ``error_mk_winner_T{i}_N{j}.csv``
    (per-moneyness error), ``rank_T{i}.csv`` (mean factorization ranks).
    Indices i, j are 1-based positions in the config's maturity and path
    grids.  Columns for a method that was not run are left empty.
    """
    rows = list(rows)
    times = aggregate_cell_times(rows)
    try:
        aggregate, moneyness, _ = aggregate_iv_error(rows)
    except MissingReference:
        aggregate, moneyness = {}, {}
    written = []

    for t_idx, maturity in enumerate(config.maturities):
        name = os.path.join(out_dir, f"winner_time_T{t_idx + 1}.csv")
        with open(name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "N",
                    "mean_logtime_poly",
                    "lo_logtime_poly",
                    "hi_logtime_poly",
                    "mean_logtime_cme",
                    "lo_logtime_cme",
                    "hi_logtime_cme",
                ]
            )
            for n in config.n_grid:
                ls = times.get(("ls", n, maturity))
                cme = times.get(("cme_lr", n, maturity))
                writer.writerow(
                    [n]
                    + [_fmt(v) for v in (ls if ls else (None, None, None))]
                    + [_fmt(v) for v in (cme if cme else (None, None, None))]
                )
        written.append(name)

        name = os.path.join(out_dir, f"winner_err_T{t_idx + 1}.csv")
        with open(name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "mean_relerr_poly", "lo_poly", "hi_poly", "mean_relerr_cme", "lo_cme", "hi_cme"])
            for n in config.n_grid:
                ls = aggregate.get(("ls", n, maturity))
                cme = aggregate.get(("cme_lr", n, maturity))
                writer.writerow(
                    [n]
                    + [_fmt(v) for v in (ls if ls else (None, None, None))]
                    + [_fmt(v) for v in (cme if cme else (None, None, None))]
                )
        written.append(name)

        for n_idx, n in enumerate(config.n_grid):
            name = os.path.join(out_dir, f"error_mk_winner_T{t_idx + 1}_N{n_idx + 1}.csv")
            with open(name, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["logmoneyness", "mean_relerr_poly", "lo_poly", "hi_poly", "mean_relerr_cme", "lo_cme", "hi_cme"]
                )
                for m in log_moneyness_grid(config.moneyness_count):
                    key = round(float(m), 12)
                    ls = moneyness.get(("ls", n, maturity, key))
                    cme = moneyness.get(("cme_lr", n, maturity, key))
                    writer.writerow(
                        [repr(float(m))]
                        + [_fmt(v) for v in (ls if ls else (None, None, None))]
                        + [_fmt(v) for v in (cme if cme else (None, None, None))]
                    )
            written.append(name)

        try:
            ranks = rank_summary([r for r in rows if r.maturity == maturity])
        except EmptyInput:
            ranks = {}
        name = os.path.join(out_dir, f"rank_T{t_idx + 1}.csv")
        with open(name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "epsilon", "mean_rank_x", "mean_rank_y"])
            for (n, _maturity, eps), (mean_x, mean_y) in sorted(ranks.items()):
                writer.writerow([n, repr(float(eps)), _fmt(mean_x), _fmt(mean_y)])
        written.append(name)
    return written


def write_reference_csvs(reference, config, out_dir):
    written = []
    for t_idx, maturity in enumerate(config.maturities):
        name = os.path.join(out_dir, f"reference_T{t_idx + 1}.csv")
        with open(name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["maturity", "strike", "logmoneyness", "price", "stderr", "implied_vol", "valid"])
            moneyness = log_moneyness_grid(config.moneyness_count)
            for k_idx in range(config.moneyness_count):
                entry = reference[(t_idx, k_idx)]
                writer.writerow(
                    [
                        repr(entry.maturity),
                        repr(entry.strike),
                        repr(float(moneyness[k_idx])),
                        repr(entry.price),
                        repr(entry.stderr),
                        "" if entry.implied_vol is None else repr(entry.implied_vol),
                        int(entry.valid),
                    ]
                )
        written.append(name)
    return written


def run_bench(config, reference_csv=None, plots=True, log=print):
    """Full benchmark: references, grid, raw rows, figure CSVs, figures.

    Returns a process exit code: 0 when every cell completed (invalid
    implied-vol rows are recorded, not fatal), 1 when any cell aborted.
    """
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if reference_csv is not None:
        reference = load_reference_csv(reference_csv, config)
    else:
        try:
            reference = reference_prices_r0(config)
        except NotApplicable as exc:
            raise MissingReference(f"{exc} (use a reference CSV for r != 0)") from exc
    write_reference_csvs(reference, config, out_dir)

    rows = []
    failures = 0
    fh, writer = open_row_writer(os.path.join(out_dir, "results.csv"))
    started = time.perf_counter()
    try:
        for row in run_grid(config, reference):
            rows.append(row)
            write_row(writer, row)
    except Exception as exc:  # a cell aborted; partial results stay on disk
        failures += 1
        log(f"cell aborted: {exc!r}")
    finally:
        fh.close()
    write_figure_csvs(rows, config, out_dir)
    invalid = sum(1 for r in rows if not r.valid)
    log(
        f"bench: {len(rows)} rows ({invalid} invalid) in {time.perf_counter() - started:.1f}s -> {out_dir}"
    )
    if plots:
        from . import plots as plotting

        plotting.render_bench_figures(out_dir, config)
    return 0 if failures == 0 else 1


def run_rank_study(config, epsilons=DEFAULT_RANK_EPSILONS, plots=True, log=print):
    """Factorization-rank study across tolerances; writes rank_T{i}.csv."""
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    records = {}
    for eps in epsilons:
        if eps <= 0:
            raise InvalidInput("epsilons must be positive")
    for rep in range(config.replications):
        for n_idx, n in enumerate(config.n_grid):
            for t_idx, maturity in enumerate(config.maturities):
                seed = experiment_seed(rep, n_idx, t_idx)
                paths = simulate_heston(config.heston, n, maturity, seed)
                for eps in epsilons:
                    op = fit_pricing_operator(paths, lam=config.lam(n), epsilon=eps)
                    records.setdefault((t_idx, n, eps), []).append((op.rank_x, op.rank_y))
    written = []
    for t_idx, maturity in enumerate(config.maturities):
        name = os.path.join(out_dir, f"rank_T{t_idx + 1}.csv")
        with open(name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "epsilon", "mean_rank_x", "mean_rank_y"])
            for n in config.n_grid:
                for eps in epsilons:
                    pairs = records[(t_idx, n, eps)]
                    writer.writerow(
                        [
                            n,
                            repr(float(eps)),
                            repr(float(np.mean([p[0] for p in pairs]))),
                            repr(float(np.mean([p[1] for p in pairs]))),
                        ]
                    )
        written.append(name)
        log(f"rank study: wrote {name}")
    if plots:
        from . import plots as plotting

        plotting.render_rank_figures(out_dir, config, epsilons)
    return 0


def run_convergence_study(n_grid=(250, 500, 1000, 2000, 4000), replications=10, output_dir="results",
                          slope=0.5, noise=0.1, test_points=2000, plots=True, log=print):
    """Synthetic check of the estimator's sample-size behavior.

    Linear-Gaussian model ``Y = slope * X + noise * Z`` with standard
    normal X, Z; the conditional mean is ``slope * x`` exactly, so the
    empirical L2 prediction error of the fitted operator is computable.
    Writes per-replication errors and a median/CI summary per n.
    """
    from .cme import apply_cme, fit_lowrank_cme
    from .kernels import KernelSpec, SampleMatrix, median_heuristic
    from .rng import standard_normals

    os.makedirs(output_dir, exist_ok=True)
    test = standard_normals(CONVERGENCE_TEST_SEED, 1, test_points)[0]
    truth = slope * test
    rows = []
    for n_idx, n in enumerate(sorted(set(int(n) for n in n_grid))):
        for rep in range(replications):
            draw = standard_normals(CONVERGENCE_SEED_BASE + rep * 64 + n_idx, 2, n)
            xs = draw[0]
            ys = slope * xs + noise * draw[1]
            kernel_x = KernelSpec("gaussian", lengthscale=median_heuristic(xs))
            kernel_y = KernelSpec("gaussian", lengthscale=median_heuristic(ys))
            op = fit_lowrank_cme(
                SampleMatrix(xs), SampleMatrix(ys), kernel_x, kernel_y, lam=n**-0.5, epsilon=1e-10
            )
            pred = apply_cme(op, ys, test[:, None])
            err = float(np.sqrt(np.mean((pred - truth) ** 2)))
            rows.append((n, rep, err))
    path = os.path.join(output_dir, "converge.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "rep", "l2_error"])
        for row in rows:
            writer.writerow([row[0], row[1], repr(row[2])])
    summary_path = os.path.join(output_dir, "converge_summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "median_l2_error", "mean_l2_error", "lo", "hi"])
        for n in sorted(set(r[0] for r in rows)):
            errs = [r[2] for r in rows if r[0] == n]
            mean, lo, hi = _normal_ci(errs)
            writer.writerow([n, repr(float(np.median(errs))), repr(mean), repr(lo), repr(hi)])
    log(f"convergence study: wrote {path} and {summary_path}")
    if plots:
        from . import plots as plotting

        plotting.render_convergence_figure(output_dir)
    return 0


_LIST_KEYS = {"n_grid", "maturities", "methods"}
_INT_KEYS = {"moneyness_count", "replications", "reference_paths", "ls_degree"}
_FLOAT_KEYS = {"epsilon"}
_HESTON_KEYS = {"s0", "v0", "r", "kappa", "theta", "xi", "rho"}


def parse_config_file(path):
    """Read a flat ``key = value`` config file into an ExperimentConfig.

    Lists are comma separated; Heston parameters use the ``heston.``
    prefix.  Lines starting with ``#`` are comments.
    """
    values = {}
    heston = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key.startswith("heston."):
                name = key.split(".", 1)[1]
                if name not in _HESTON_KEYS:
                    raise InvalidInput(f"{path}:{lineno}: unknown Heston field {name!r}")
                heston[name] = float(value)
            elif key in _LIST_KEYS:
                items = [item.strip() for item in value.split(",") if item.strip()]
                values[key] = tuple(items) if key == "methods" else tuple(float(x) for x in items)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in {"output_dir", "lambda_rule"}:
                values[key] = value
            else:
                raise InvalidInput(f"{path}:{lineno}: unknown key {key!r}")
    if heston:
        values["heston"] = HestonParams(**heston)
    return ExperimentConfig(**values)
