"""Command-line front end.

Every subcommand reads a comma-separated file with a header row, fits one
model and writes a JSON result document (to ``--output`` or stdout).  The
document echoes the full run configuration and the ingestion report so that a
run can be repeated exactly.  ``--plot`` adds a minimal SVG density overlay and
``--figure`` a matplotlib rendering of the same overlay.

Exit codes: 0 success, 2 input error, 3 convergence failure (the document is
still written, with ``converged: false``), 4 internal error.  Failures print a
one-line JSON error record to stderr.
"""

from dataclasses import asdict, dataclass
import argparse
import json
import math
import secrets
import sys
import time
import warnings

import numpy as np

from . import __version__, contam, core, kde, mixture, report, wmle
from .dataio import dumps, ingest, write_atomic
from .exceptions import (
    DegenerateComponentError,
    DomainError,
    FitError,
    InputError,
    NonFiniteError,
    SpreadUnidentifiableError,
)

__all__ = ["RunConfig", "run", "main", "build_parser", "EXIT_OK", "EXIT_INPUT", "EXIT_CONVERGENCE", "EXIT_INTERNAL"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 4

DEFAULT_SEED = 20170101
SUBCOMMANDS = ("fit-rig", "fit-contaminated", "fit-mixture", "select-k", "kde")


@dataclass
class RunConfig:
    """Everything that determines a run; echoed into the result document.

    ``n_starts`` is the number of EM starting points.  ``None`` picks the
    per-subcommand default: 10 for mixtures (k-means plus 9 random
    partitions) and 11 for ``fit-contaminated`` (the plain-fit start plus 10
    jittered restarts).  ``tolerance`` and ``max_iter`` default to the EM
    settings (1e-8, 1000); ``fit-rig`` uses them for its optimizer.
    """

    subcommand: str
    input: str
    value_column: str
    weight_column: str = None
    k: int = 2
    k_range: tuple = (1, 4)
    seed: int = DEFAULT_SEED
    tolerance: float = 1e-8
    max_iter: int = 1000
    n_starts: int = None
    output: str = None
    plot: str = None
    figure: str = None
    plot_grid_points: int = 512
    timing: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InputError(f"unknown subcommand {self.subcommand!r}")
        if self.k < 1:
            raise InputError("--k must be at least 1")
        lo, hi = self.k_range
        if not 1 <= lo <= hi:
            raise InputError(f"invalid k range {lo}..{hi}")
        self.k_range = (int(lo), int(hi))
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise InputError("--tol must be positive")
        if self.max_iter < 1:
            raise InputError("--max-iter must be at least 1")
        if self.n_starts is not None and self.n_starts < 1:
            raise InputError("--starts must be at least 1")
        if self.plot_grid_points < 2:
            raise InputError("--grid-points must be at least 2")

    def starts(self):
        if self.n_starts is not None:
            return self.n_starts
        return 11 if self.subcommand == "fit-contaminated" else 10

    def echo(self):
        d = asdict(self)
        d["k_range"] = list(self.k_range)
        d["n_starts"] = self.starts()
        return d


def _rig_block(fit):
    return {
        "estimates": {"theta": fit.params.theta, "gamma": fit.params.gamma},
        "standard_errors": {"theta": fit.se_theta, "gamma": fit.se_gamma},
        "standard_error_method": "observed information (inverse negated Hessian)",
        "loglik": fit.loglik,
    }


def _mixture_block(fit):
    p = fit.params
    return {
        "k": p.k,
        "estimates": {"pi": p.pi, "theta": p.theta, "gamma": p.gamma},
        "loglik": fit.loglik,
        "bic": fit.bic,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "init": fit.init,
    }


def _fit_rig(cfg, ds, sample):
    fit = wmle.fit(sample, tol=cfg.tolerance, max_iter=cfg.max_iter)
    doc = {"model": "rig", **_rig_block(fit), "iterations": fit.iterations, "converged": fit.converged}
    density = lambda g: core.pdf(g, fit.params)
    return doc, fit.converged, density, (), None


def _fit_contaminated(cfg, ds, sample):
    rig = wmle.fit(sample)
    weighted = not np.all(sample.w == 1.0)
    if weighted:
        fit = contam.fit_direct(sample, tol=cfg.tolerance, max_iter=cfg.max_iter)
    else:
        fit = contam.fit_em_multistart(
            sample, n_restarts=cfg.starts() - 1, seed=cfg.seed, tol=cfg.tolerance, max_iter=cfg.max_iter
        )
    lr = contam.lr_test(sample, rig, fit)
    p = fit.params
    doc = {
        "model": "contaminated-rig",
        "method": "weighted direct maximum likelihood" if weighted else "EM",
        "estimates": {"theta": p.theta, "gamma": p.gamma, "alpha": p.alpha, "eta": p.eta},
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "alpha_at_floor": fit.alpha_at_floor,
        "no_contamination_detected": fit.no_contamination_detected,
        "rig_fit": _rig_block(rig),
        "lr_test": {"statistic": lr.statistic, "df": lr.df, "p_value": lr.p_value},
        "n_bad": int(np.sum(fit.labels == "bad")),
        "posterior_good": fit.posteriors,
        "labels": fit.labels.tolist(),
    }
    density = lambda g: contam.contam_pdf(g, p)
    comps = (
        ("good", lambda g: p.alpha * core.pdf(g, p.reference)),
        ("bad", lambda g: (1.0 - p.alpha) * core.pdf(g, p.inflated)),
    )
    return doc, fit.converged, density, comps, (fit.labels == "bad").astype(int)


def _selection(cfg, sample, k_values):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sel = mixture.select_k(
            sample.x,
            k_range=k_values,
            n_random_starts=cfg.starts() - 1,
            use_kmeans_start=True,
            seed=cfg.seed,
            tol=cfg.tolerance,
            max_iter=cfg.max_iter,
            weights=None if np.all(sample.w == 1.0) else sample.w,
        )
    notes = [str(w.message) for w in caught]
    failures = {str(k): v for k, v in sorted(sel.failures.items())}
    return sel, notes, failures


def _mixture_outputs(fit):
    p = fit.params
    density = lambda g: mixture.mixture_pdf(g, p)
    comps = tuple(
        (f"component {j}", (lambda g, j=j: p.pi[j] * core.pdf(g, core.RigParams(p.theta[j], p.gamma[j]))))
        for j in range(p.k)
    )
    return density, comps


def _fit_mixture(cfg, ds, sample):
    sel, notes, failures = _selection(cfg, sample, (cfg.k,))
    fit = sel.fits[cfg.k]
    doc = {
        "model": "rig-mixture",
        **_mixture_block(fit),
        "start_failures": failures,
        "warnings": notes,
        "responsibilities": fit.responsibilities,
        "labels": fit.labels,
    }
    density, comps = _mixture_outputs(fit)
    return doc, fit.converged, density, comps, fit.labels


def _select_k(cfg, ds, sample):
    lo, hi = cfg.k_range
    sel, notes, failures = _selection(cfg, sample, tuple(range(lo, hi + 1)))
    best = sel.fits[sel.best_k]
    doc = {
        "model": "rig-mixture-selection",
        "criterion": "BIC = 2 loglik - (3k - 1) ln n, larger is better",
        "bic": {str(k): sel.bic[k] for k in sorted(sel.bic)},
        "best_k": sel.best_k,
        "fits": {str(k): _mixture_block(f) for k, f in sorted(sel.fits.items())},
        "excluded_k": [k for k in range(lo, hi + 1) if k not in sel.fits],
        "start_failures": failures,
        "warnings": notes,
        "converged": best.converged,
        "labels": best.labels,
    }
    density, comps = _mixture_outputs(best)
    return doc, best.converged, density, comps, best.labels


def _kde(cfg, ds, sample):
    if ds.has_weights:
        raise InputError("the kde subcommand does not accept a weight column")
    res = kde.select_bandwidth(sample.x)
    model = kde.KdeModel(sample.x, res.gamma_hat)
    grid = kde.default_grid(sample.x, cfg.plot_grid_points)
    dens = kde.kde_eval(model, grid)
    doc = {
        "model": "rig-kde",
        "bandwidth_selection": "likelihood cross-validation (maximized)",
        "estimates": {"gamma": res.gamma_hat},
        "lcv_score": res.score_at_opt,
        "at_boundary": res.at_boundary,
        "bracket": list(res.bracket),
        "score_curve": [list(pt) for pt in res.score_curve],
        "grid": {"x": grid, "density": dens},
        "converged": True,
    }
    return doc, True, lambda g: kde.kde_eval(model, g), (), None


_HANDLERS = {
    "fit-rig": _fit_rig,
    "fit-contaminated": _fit_contaminated,
    "fit-mixture": _fit_mixture,
    "select-k": _select_k,
    "kde": _kde,
}


def _emit_plots(cfg, ds, density, comps, labels):
    grid = kde.default_grid(ds.values, cfg.plot_grid_points)
    dens = density(grid)
    curves = tuple((name, fn(grid)) for name, fn in comps)
    title = f"{cfg.subcommand}: {ds.value_column}"
    weights = ds.weights if ds.has_weights else None
    out = {"grid_points": cfg.plot_grid_points, "grid_max": float(grid[-1])}
    if cfg.plot:
        write_atomic(cfg.plot, report.svg_density_plot(ds.values, grid, dens, weights, title, curves))
        out["svg"] = cfg.plot
    if cfg.figure:
        report.density_figure(cfg.figure, ds.values, grid, dens, weights, title, curves, labels)
        out["figure"] = cfg.figure
    return out


def execute(cfg):
    """Run ``cfg`` and return ``(document, exit status)``; errors propagate."""
    t0 = time.perf_counter()
    ds = ingest(cfg.input, cfg.value_column, cfg.weight_column)
    sample = wmle.WeightedSample(ds.values, ds.weights)
    doc, converged, density, comps, labels = _HANDLERS[cfg.subcommand](cfg, ds, sample)
    result = {
        "library": {"name": "rigkit", "version": __version__},
        "config": cfg.echo(),
        "dataset": ds.report(),
        "result": doc,
    }
    if cfg.plot or cfg.figure:
        result["plot"] = _emit_plots(cfg, ds, density, comps, labels)
    if cfg.timing:
        result["wall_clock_seconds"] = time.perf_counter() - t0
    return result, EXIT_OK if converged else EXIT_CONVERGENCE


def _error_record(exc, code, cfg=None):
    rec = {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
            "subcommand": None if cfg is None else cfg.subcommand,
        }
    }
    for attr in ("iteration", "abscissa", "component"):
        if getattr(exc, attr, None) is not None:
            rec["error"][attr] = getattr(exc, attr)
    return json.dumps(rec, default=float)


def _exit_code(exc):
    if isinstance(exc, (InputError, DomainError, SpreadUnidentifiableError, OSError)):
        return EXIT_INPUT
    if isinstance(exc, (NonFiniteError, DegenerateComponentError, FitError)):
        return EXIT_CONVERGENCE
    return EXIT_INTERNAL


def run(cfg, stdout=None, stderr=None):
    """Execute ``cfg``, write the document and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        doc, status = execute(cfg)
        text = dumps(doc)
        if cfg.output:
            write_atomic(cfg.output, text)
        else:
            stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an exit code
        code = _exit_code(exc)
        print(_error_record(exc, code, cfg), file=stderr)
        return code
    if status != EXIT_OK:
        print(
            _error_record(RuntimeError("fit did not converge; document written"), status, cfg),
            file=stderr,
        )
    return status


def _k_range(text):
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="rigkit", description="Mode-parameterized inverse Gaussian models.")
    parser.add_argument("--version", action="version", version=f"rigkit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "fit-rig": "weighted maximum-likelihood fit of the rIG distribution",
        "fit-contaminated": "contaminated rIG fit with good/bad labels and an LR test",
        "fit-mixture": "k-component rIG mixture by multi-start EM",
        "select-k": "choose the number of mixture components by BIC",
        "kde": "rIG-kernel density estimate with an LCV bandwidth",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--input", required=True, metavar="PATH", help="comma-separated file with a header row")
        p.add_argument("--value-col", required=True, metavar="NAME", help="value column name or 0-based index")
        p.add_argument("--weight-col", metavar="NAME", help="optional weight column (used verbatim)")
        p.add_argument("--k", type=int, default=2, metavar="N", help="components for fit-mixture (default 2)")
        p.add_argument("--k-range", type=_k_range, default=(1, 4), metavar="A..B", help="candidates for select-k (default 1..4)")
        seeds = p.add_mutually_exclusive_group()
        seeds.add_argument("--seed", type=int, default=DEFAULT_SEED, metavar="N", help=f"random seed (default {DEFAULT_SEED})")
        seeds.add_argument("--random-seed", action="store_true", help="draw a fresh seed (echoed in the output)")
        p.add_argument("--tol", type=float, default=1e-8, metavar="X", help="convergence tolerance (default 1e-8)")
        p.add_argument("--max-iter", type=int, default=1000, metavar="N", help="iteration cap (default 1000)")
        p.add_argument("--starts", type=int, default=None, metavar="N", help="EM starting points (default 10; 11 for fit-contaminated)")
        p.add_argument("--output", metavar="PATH", help="result document path (default stdout)")
        p.add_argument("--plot", metavar="PATH", help="write an SVG density overlay")
        p.add_argument("--figure", metavar="PATH", help="write a matplotlib density overlay (png, pdf, svg, ...)")
        p.add_argument("--grid-points", type=int, default=512, metavar="N", help="density grid size (default 512)")
        p.add_argument("--timing", action="store_true", help="include wall-clock seconds in the document")
    return parser


def config_from_args(args):
    seed = secrets.randbits(32) if args.random_seed else args.seed
    return RunConfig(
        subcommand=args.subcommand,
        input=args.input,
        value_column=args.value_col,
        weight_column=args.weight_col,
        k=args.k,
        k_range=args.k_range,
        seed=seed,
        tolerance=args.tol,
        max_iter=args.max_iter,
        n_starts=args.starts,
        output=args.output,
        plot=args.plot,
        figure=args.figure,
        plot_grid_points=args.grid_points,
        timing=args.timing,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        print(_error_record(exc, EXIT_INPUT), file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
