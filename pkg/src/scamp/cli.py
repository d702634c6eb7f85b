"""Command-line surface: point evaluation, simulation, sweeps and cross-checks.

Exit-code contract (stable API):
    0  success
    2  validation failure (bad flags or parameter ranges)
    3  the device never succeeds at this point (P(S) = 0)
    4  mismatch: statistical disagreement in `compare`, tolerance breach
       in `oracle`, or oracle non-convergence

All output is deterministic: an identical argument vector (including the
seed) yields byte-identical bytes on stdout or in --out, regardless of
--workers.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict

from .analytic import (
    NeverSucceedsError,
    binary_metrics,
    binary_quadrature_moments,
    phase_covariant_fidelity,
    phase_covariant_joint_prob,
    phase_covariant_success_prob,
)
from .core import AmplifierConfig, ComplexAmplitude, DetectorModel, EnsembleKind, InputEnsemble
from .experiments import (
    GainGrid,
    OracleConvergenceError,
    PRESET_NAMES,
    SweepRow,
    SweepSpec,
    emit_csv,
    phase_quadrature_oracle,
    run_preset,
    sweep,
)
from .montecarlo import estimate, substream_seed
from . import __version__

_DEFAULT_T2_SQ = {"binary": 0.9, "phase": 0.95}
_DEFAULT_GRID_GAINS = (1.5, 2.0, 4.0, 8.0)
_DEFAULT_GRID_ALPHA_SQ = (0.1, 0.5, 1.0)


def _add_splitter_args(parser: argparse.ArgumentParser, required: bool) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--t2-sq", type=float, metavar="T2SQ",
                       help="subtraction beam splitter transmission INTENSITY t2^2 in (0,1)")
    group.add_argument("--r2-sq", type=float, metavar="R2SQ",
                       help="subtraction beam splitter reflection INTENSITY r2^2 in (0,1) "
                            "(alternative to --t2-sq)")


def _add_detector_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eta1", type=float, default=1.0,
                        help="comparison detector quantum efficiency in [0,1] (default 1)")
    parser.add_argument("--eta2", type=float, default=1.0,
                        help="subtraction detector quantum efficiency in [0,1] (default 1)")
    parser.add_argument("--dark1", type=float, default=0.0,
                        help="comparison detector per-window dark-click probability (default 0)")
    parser.add_argument("--dark2", type=float, default=0.0,
                        help="subtraction detector per-window dark-click probability (default 0)")


def _add_point_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ensemble", required=True, choices=["binary", "phase"],
                        help="input ensemble: 'binary' (+/-alpha) or 'phase' (uniform-phase ring)")
    parser.add_argument("--alpha-sq", type=float, required=True, metavar="A2",
                        help="mean photon number alpha^2 of the input states (> 0)")
    parser.add_argument("--intensity-gain", type=float, required=True, metavar="G",
                        help="intensity gain G = g^2 (amplitude gain g is never a flag)")
    _add_splitter_args(parser, required=True)
    _add_detector_args(parser)


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["human", "csv", "jsonl"], default="human",
                        help="output format (default human)")
    parser.add_argument("--out", metavar="PATH",
                        help="write output to PATH instead of stdout")


def _t2_sq_from_args(args: argparse.Namespace, default: float | None = None) -> float:
    if getattr(args, "t2_sq", None) is not None:
        return args.t2_sq
    if getattr(args, "r2_sq", None) is not None:
        return 1.0 - args.r2_sq
    if default is not None:
        return default
    raise ValueError("one of --t2-sq or --r2-sq is required")


def _config_from_args(args: argparse.Namespace, t2_sq: float,
                      gain: float) -> AmplifierConfig:
    return AmplifierConfig(
        intensity_gain=gain,
        t2_sq=t2_sq,
        d1=DetectorModel(args.eta1, args.dark1),
        d2=DetectorModel(args.eta2, args.dark2),
    )


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
    else:
        sys.stdout.write(text)


def _human_table(pairs: list[tuple[str, object]]) -> str:
    width = max(len(key) for key, _ in pairs)
    lines = []
    for key, value in pairs:
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines) + "\n"


def _rows_text(rows: list[SweepRow], fmt: str) -> str:
    if fmt == "csv":
        import io

        buffer = io.StringIO()
        emit_csv(rows, buffer)
        return buffer.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps(asdict(row), sort_keys=True) + "\n" for row in rows)
    raise ValueError(f"unsupported row format {fmt!r}")


def _cmd_eval(args: argparse.Namespace) -> int:
    t2_sq = _t2_sq_from_args(args)
    if args.dark1 != 0.0 or args.dark2 != 0.0:
        raise ValueError("eval uses the dark-count-free closed forms; "
                         "use 'simulate' for dark counts")
    cfg = _config_from_args(args, t2_sq, args.intensity_gain)
    alpha = math.sqrt(args.alpha_sq)

    pairs: list[tuple[str, object]] = [
        ("ensemble", args.ensemble),
        ("alpha_sq", args.alpha_sq),
        ("intensity_gain", args.intensity_gain),
        ("eta1", args.eta1),
        ("eta2", args.eta2),
        ("t2_sq", t2_sq),
    ]
    if args.ensemble == "binary":
        metrics = binary_metrics(alpha, cfg)
        moments = binary_quadrature_moments(alpha, cfg)
        pairs += [
            ("p_success", metrics.p_success),
            ("p_joint", metrics.p_joint),
            ("fidelity", metrics.fidelity),
            ("p_plus_given_s", metrics.p_plus_given_s),
            ("p_minus_given_s", metrics.p_minus_given_s),
            ("mean_x1", moments.mean_x1),
            ("mean_x1_sq", moments.mean_x1_sq),
            ("variance", moments.variance),
            ("snr_out", moments.snr_out),
            ("noise_figure", moments.noise_figure),
        ]
        row = SweepRow(ensemble="binary", alpha_sq=args.alpha_sq,
                       intensity_gain=args.intensity_gain, eta1=args.eta1,
                       eta2=args.eta2, t2_sq=t2_sq, source="analytic",
                       p_success=metrics.p_success, fidelity=metrics.fidelity,
                       noise_figure=moments.noise_figure)
    else:
        p_success = phase_covariant_success_prob(alpha, cfg)
        fidelity = phase_covariant_fidelity(alpha, cfg)
        pairs += [("p_success", p_success), ("fidelity", fidelity)]
        row = SweepRow(ensemble="phase", alpha_sq=args.alpha_sq,
                       intensity_gain=args.intensity_gain, eta1=args.eta1,
                       eta2=args.eta2, t2_sq=t2_sq, source="analytic",
                       p_success=p_success, fidelity=fidelity)

    if args.format == "human":
        _emit(args, _human_table(pairs))
    else:
        _emit(args, _rows_text([row], args.format))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    t2_sq = _t2_sq_from_args(args)
    cfg = _config_from_args(args, t2_sq, args.intensity_gain)
    ensemble = InputEnsemble(EnsembleKind(args.ensemble), math.sqrt(args.alpha_sq))
    guess = None
    if args.guess_re is not None or args.guess_im is not None:
        guess = ComplexAmplitude(args.guess_re or 0.0, args.guess_im or 0.0)
    summary = estimate(ensemble, cfg, args.trials, args.seed, guess=guess,
                       workers=args.workers, detector_sampling=args.detector_sampling)

    if args.format == "human":
        pairs: list[tuple[str, object]] = [
            ("ensemble", args.ensemble),
            ("alpha_sq", args.alpha_sq),
            ("intensity_gain", args.intensity_gain),
            ("t2_sq", t2_sq),
            ("n_trials", summary.n_trials),
            ("n_accepted", summary.n_accepted),
            ("seed", summary.seed),
            ("p_success", summary.p_success),
            ("p_success_se", summary.p_success_se),
        ]
        for name in ("fidelity", "fidelity_se", "fidelity_sampled",
                     "fidelity_sampled_se", "mean_x1", "mean_x1_se", "mean_x1_sq",
                     "mean_x1_sq_se", "noise_figure", "noise_figure_se"):
            value = getattr(summary, name)
            pairs.append((name, "absent" if value is None else value))
        _emit(args, _human_table(pairs))
    else:
        row = SweepRow(ensemble=args.ensemble, alpha_sq=args.alpha_sq,
                       intensity_gain=args.intensity_gain, eta1=args.eta1,
                       eta2=args.eta2, t2_sq=t2_sq, source="mc",
                       p_success=summary.p_success, p_success_se=summary.p_success_se,
                       fidelity=summary.fidelity, fidelity_se=summary.fidelity_se,
                       noise_figure=summary.noise_figure,
                       noise_figure_se=summary.noise_figure_se)
        _emit(args, _rows_text([row], args.format))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.preset:
        rows = run_preset(args.preset, mode=args.mode, n_trials=args.trials,
                          seed=args.seed, workers=args.workers)
    else:
        if args.ensemble is None or args.alpha_sq is None:
            raise ValueError("explicit sweeps need --ensemble and --alpha-sq "
                             "(or use --preset)")
        if args.gain_min is None or args.gain_max is None:
            raise ValueError("explicit sweeps need --gain-min/--gain-max/--gain-steps")
        t2_sq = _t2_sq_from_args(args)
        grid = GainGrid(args.gain_min, args.gain_max, args.gain_steps,
                        spacing=args.gain_spacing)
        spec = SweepSpec(
            ensemble=EnsembleKind(args.ensemble), alpha_sq_list=tuple(args.alpha_sq),
            gain_grid=grid, t2_sq=t2_sq, eta1=args.eta1, eta2=args.eta2,
            dark1=args.dark1, dark2=args.dark2, mode=args.mode,
            n_trials=args.trials, seed=args.seed,
        )
        rows = sweep(spec, workers=args.workers)
    fmt = "csv" if args.format == "human" else args.format
    _emit(args, _rows_text(rows, fmt))
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    t2_sq = _t2_sq_from_args(args)
    cfg = _config_from_args(args, t2_sq, args.intensity_gain)
    alpha = math.sqrt(args.alpha_sq)

    closed_p = phase_covariant_success_prob(alpha, cfg)
    quad_p = phase_quadrature_oracle(alpha, cfg)
    shifted = args.eta1 + args.intensity_gain - t2_sq
    closed_joint = phase_covariant_joint_prob(alpha, cfg)
    quad_joint = phase_quadrature_oracle(alpha, cfg, eta1_override=shifted)

    def rel(a: float, b: float) -> float:
        scale = max(abs(a), abs(b))
        return 0.0 if scale == 0.0 else abs(a - b) / scale

    pairs = [
        ("alpha_sq", args.alpha_sq),
        ("intensity_gain", args.intensity_gain),
        ("t2_sq", t2_sq),
        ("eta1", args.eta1),
        ("eta2", args.eta2),
        ("p_success_closed_form", closed_p),
        ("p_success_quadrature", quad_p),
        ("p_success_rel_diff", rel(closed_p, quad_p)),
        ("p_joint_closed_form", closed_joint),
        ("p_joint_quadrature", quad_joint),
        ("p_joint_rel_diff", rel(closed_joint, quad_joint)),
        ("tolerance", args.tol),
    ]
    _emit(args, _human_table(pairs))
    if rel(closed_p, quad_p) > args.tol or rel(closed_joint, quad_joint) > args.tol:
        return 4
    return 0


def _compare_points(args: argparse.Namespace) -> list[tuple[str, float, float, float]]:
    """(ensemble, alpha_sq, gain, t2_sq) tuples for the comparison run."""
    ensembles = ["binary", "phase"] if args.ensemble == "both" else [args.ensemble]
    if args.alpha_sq is not None and args.intensity_gain is not None:
        points = []
        for kind in ensembles:
            t2_sq = _t2_sq_from_args(args, default=_DEFAULT_T2_SQ[kind])
            points.append((kind, args.alpha_sq, args.intensity_gain, t2_sq))
        return points
    if args.alpha_sq is not None or args.intensity_gain is not None:
        raise ValueError("give both --alpha-sq and --intensity-gain, or neither "
                         "(default grid)")
    points = []
    for kind in ensembles:
        t2_sq = _t2_sq_from_args(args, default=_DEFAULT_T2_SQ[kind])
        for alpha_sq in _DEFAULT_GRID_ALPHA_SQ:
            for gain in _DEFAULT_GRID_GAINS:
                points.append((kind, alpha_sq, gain, t2_sq))
    return points


def _cmd_compare(args: argparse.Namespace) -> int:
    lines = []
    worst = 0.0
    breached = False
    for index, (kind, alpha_sq, gain, t2_sq) in enumerate(_compare_points(args)):
        cfg = _config_from_args(args, t2_sq, gain)
        alpha = math.sqrt(alpha_sq)
        analytic_eta1 = args.analytic_eta1 if args.analytic_eta1 is not None else args.eta1
        cfg_analytic = AmplifierConfig(
            intensity_gain=gain, t2_sq=t2_sq,
            d1=DetectorModel(analytic_eta1, 0.0), d2=DetectorModel(args.eta2, 0.0),
        )
        if kind == "binary":
            metrics = binary_metrics(alpha, cfg_analytic)
            exact_p, exact_f = metrics.p_success, metrics.fidelity
        else:
            exact_p = phase_covariant_success_prob(alpha, cfg_analytic)
            exact_f = phase_covariant_fidelity(alpha, cfg_analytic)
        ensemble = InputEnsemble(EnsembleKind(kind), alpha)
        summary = estimate(ensemble, cfg, args.trials,
                           substream_seed(args.seed, index), workers=args.workers)

        def z_score(mc_value: float | None, mc_se: float | None, exact: float) -> float:
            if mc_value is None:
                return math.inf
            if mc_se == 0.0:
                return 0.0 if mc_value == exact else math.inf
            return (mc_value - exact) / mc_se

        z_p = z_score(summary.p_success, summary.p_success_se, exact_p)
        z_f = z_score(summary.fidelity, summary.fidelity_se, exact_f)
        worst = max(worst, abs(z_p), abs(z_f))
        breached = breached or abs(z_p) > 4.0 or abs(z_f) > 4.0
        lines.append(
            f"{kind} alpha_sq={alpha_sq!r} G={gain!r} t2_sq={t2_sq!r}: "
            f"P(S) analytic={exact_p!r} mc={summary.p_success!r} z={z_p:+.3f}; "
            f"F analytic={exact_f!r} mc={summary.fidelity!r} z={z_f:+.3f}"
        )
    lines.append(f"worst |z| = {worst:.3f} over {2 * (len(lines))} comparisons "
                 f"({args.trials} trials each, seed {args.seed})")
    lines.append("RESULT: " + ("MISMATCH (|z| > 4)" if breached else "consistent"))
    _emit(args, "\n".join(lines) + "\n")
    return 4 if breached else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scamp",
        description="State-comparison amplifier metrics: exact closed forms and "
                    "shot-by-shot Monte Carlo.  Gain flags are always INTENSITY "
                    "gain G = g^2 (the x-axis of every sweep); beam splitter "
                    "flags are intensity coefficients.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser(
        "eval", help="closed-form metrics at a single parameter point",
        description="Closed-form metrics at one (ensemble, alpha^2, G, t2^2, eta) "
                    "point: success probability, fidelity and (binary) noise figure.")
    _add_point_args(p_eval)
    _add_output_args(p_eval)

    p_sim = sub.add_parser(
        "simulate", help="Monte Carlo estimate at a single parameter point",
        description="Shot-by-shot Monte Carlo estimate with standard errors. "
                    "Bit-reproducible for a fixed seed, independent of --workers.")
    _add_point_args(p_sim)
    p_sim.add_argument("--trials", type=int, required=True, help="number of trials (>= 1)")
    p_sim.add_argument("--seed", type=int, required=True, help="RNG seed (any 64-bit int)")
    p_sim.add_argument("--workers", type=int, default=1,
                       help="worker threads; never changes results (default 1)")
    p_sim.add_argument("--detector-sampling", choices=["exact", "photon"], default="exact",
                       help="'exact' coherent click probabilities or the slower "
                            "'photon' Poisson/per-photon-loss guard path")
    p_sim.add_argument("--guess-re", type=float, default=None,
                       help="override guess amplitude (real part); default t1*alpha/r1")
    p_sim.add_argument("--guess-im", type=float, default=None,
                       help="override guess amplitude (imaginary part)")
    _add_output_args(p_sim)

    p_sweep = sub.add_parser(
        "sweep", help="metric tables over an (alpha^2, gain) grid",
        description="Parameter sweep to CSV/JSONL.  Either --preset or an explicit "
                    "grid. Identical invocations give byte-identical output.")
    p_sweep.add_argument("--preset", choices=list(PRESET_NAMES),
                         help="bundled figure configuration")
    p_sweep.add_argument("--ensemble", choices=["binary", "phase"], default=None,
                         help="input ensemble (explicit sweeps)")
    p_sweep.add_argument("--alpha-sq", type=float, nargs="+", default=None, metavar="A2",
                         help="one or more mean photon numbers alpha^2 (> 0)")
    p_sweep.add_argument("--gain-min", type=float, default=None,
                         help="lowest intensity gain G of the grid (> t2^2)")
    p_sweep.add_argument("--gain-max", type=float, default=None,
                         help="highest intensity gain G of the grid")
    p_sweep.add_argument("--gain-steps", type=int, default=25,
                         help="number of grid points (default 25)")
    p_sweep.add_argument("--gain-spacing", choices=["log", "linear"], default="log",
                         help="grid spacing (default log)")
    _add_splitter_args(p_sweep, required=False)
    _add_detector_args(p_sweep)
    p_sweep.add_argument("--mode", choices=["analytic", "montecarlo", "both"],
                         default="analytic", help="metric sources per grid point")
    p_sweep.add_argument("--trials", type=int, default=0,
                         help="Monte Carlo trials per grid point (montecarlo/both)")
    p_sweep.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="worker threads; never changes results (default 1)")
    _add_output_args(p_sweep)

    p_oracle = sub.add_parser(
        "oracle", help="cross-check the uniform-phase closed forms by quadrature",
        description="Compares the Bessel closed form for the uniform-phase ensemble "
                    "(success probability and the shifted-efficiency joint "
                    "probability) against composite Simpson quadrature of the "
                    "phase integral.  Exits 4 beyond --tol.")
    p_oracle.add_argument("--alpha-sq", type=float, required=True, metavar="A2",
                          help="mean photon number alpha^2 (> 0)")
    p_oracle.add_argument("--intensity-gain", type=float, required=True, metavar="G",
                          help="intensity gain G = g^2")
    _add_splitter_args(p_oracle, required=True)
    p_oracle.add_argument("--eta1", type=float, default=1.0,
                          help="comparison detector efficiency (default 1)")
    p_oracle.add_argument("--eta2", type=float, default=1.0,
                          help="subtraction detector efficiency (default 1)")
    p_oracle.add_argument("--dark1", type=float, default=0.0, help=argparse.SUPPRESS)
    p_oracle.add_argument("--dark2", type=float, default=0.0, help=argparse.SUPPRESS)
    p_oracle.add_argument("--tol", type=float, default=1e-9,
                          help="relative tolerance for agreement (default 1e-9)")
    _add_output_args(p_oracle)

    p_cmp = sub.add_parser(
        "compare", help="analytic vs Monte Carlo with z-scores (CI hook)",
        description="Runs the closed forms and the Monte Carlo estimator at the "
                    "same point(s) and reports z-scores.  Without --alpha-sq/"
                    "--intensity-gain it covers the default grid alpha^2 in "
                    "{0.1,0.5,1} x G in {1.5,2,4,8}.  Exits 4 if any |z| > 4.")
    p_cmp.add_argument("--ensemble", choices=["binary", "phase", "both"], default="both",
                       help="ensemble(s) to compare (default both)")
    p_cmp.add_argument("--alpha-sq", type=float, default=None, metavar="A2",
                       help="mean photon number alpha^2 for a single-point comparison")
    p_cmp.add_argument("--intensity-gain", type=float, default=None, metavar="G",
                       help="intensity gain G = g^2 for a single-point comparison")
    _add_splitter_args(p_cmp, required=False)
    _add_detector_args(p_cmp)
    p_cmp.add_argument("--trials", type=int, required=True,
                       help="Monte Carlo trials per point (>= 1)")
    p_cmp.add_argument("--seed", type=int, required=True, help="base RNG seed")
    p_cmp.add_argument("--workers", type=int, default=1,
                       help="worker threads; never changes results (default 1)")
    p_cmp.add_argument("--analytic-eta1", type=float, default=None,
                       help="testing hook: evaluate the analytic side with a "
                            "different eta1 to verify that mismatches are caught")
    _add_output_args(p_cmp)

    return parser


_COMMANDS = {
    "eval": _cmd_eval,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NeverSucceedsError as exc:
        print(f"error: device never succeeds: {exc}", file=sys.stderr)
        return 3
    except OracleConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
