"""Parameter sweeps, figure presets, the phase-integral oracle and CSV output.

A sweep evaluates the closed-form metrics and/or Monte Carlo estimates on
an (alpha^2, intensity gain) grid and serializes the rows to CSV.  Sweeps
are pure functions of their spec: identical specs produce byte-identical
CSV, regardless of worker count.

``phase_quadrature_oracle`` integrates the uniform-phase acceptance
probability directly by composite Simpson quadrature.  It shares no code
with the Bessel closed form and exists to cross-check it (and, through
``eta1_override``, the fidelity numerator).

Figure presets bundle the standard sweep configurations.  Gain grids are
conventions pinned here, chosen so each preset's qualitative shape checks
hold at every sampled point:

* ``fig3``/``fig4``/``nf`` (binary, r2^2 = 0.1): 60 log-spaced gains on
  [1.05*t2^2, 10] plus the anchor gains 1.2, 1.5, 1.8 and 8.
* ``figS2`` (uniform phase, r2^2 = 0.05): gains on [1.0, 8.0].  The
  fidelity curves for alpha^2 = 0.5 and 1 cross near G = 8.7 at unit
  efficiency, so the small-alpha-first ordering holds only below that.
* ``figS3`` (uniform phase, r2^2 = 0.05): gains on [1.5, 10].  The
  success probability dips with gain below G = 1.44 before rising, so the
  monotone window starts at 1.5.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import (
    binary_metrics,
    binary_quadrature_moments,
    phase_covariant_fidelity,
    phase_covariant_success_prob,
)
from .core import AmplifierConfig, DetectorModel, EnsembleKind, InputEnsemble
from .montecarlo import estimate, substream_seed

__all__ = [
    "CSV_HEADER",
    "GainGrid",
    "SweepSpec",
    "SweepRow",
    "OracleConvergenceError",
    "PRESET_NAMES",
    "preset_specs",
    "run_preset",
    "sweep",
    "phase_quadrature_oracle",
    "emit_csv",
    "read_csv",
]

CSV_HEADER = (
    "ensemble,alpha_sq,intensity_gain,eta1,eta2,t2_sq,source,"
    "p_success,p_success_se,fidelity,fidelity_se,noise_figure,noise_figure_se"
)

PRESET_NAMES = ("fig3", "fig4", "nf", "figS2", "figS3")


class OracleConvergenceError(RuntimeError):
    """Simpson refinement failed to reach the requested tolerance."""


@dataclass(frozen=True)
class GainGrid:
    """Intensity-gain grid: ``steps`` points from minimum to maximum
    (log- or linearly spaced) merged with optional anchor gains."""

    minimum: float
    maximum: float
    steps: int
    spacing: str = "log"
    anchors: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.steps == 1:
            if self.minimum != self.maximum:
                raise ValueError("steps=1 requires minimum == maximum")
        elif not self.minimum < self.maximum:
            raise ValueError(
                f"need minimum < maximum, got [{self.minimum}, {self.maximum}]"
            )
        if self.minimum <= 0.0:
            raise ValueError(f"gains must be positive, got minimum={self.minimum}")
        object.__setattr__(self, "anchors", tuple(float(a) for a in self.anchors))

    def points(self) -> tuple[float, ...]:
        if self.steps == 1:
            base = np.array([self.minimum])
        elif self.spacing == "log":
            base = np.geomspace(self.minimum, self.maximum, self.steps)
        else:
            base = np.linspace(self.minimum, self.maximum, self.steps)
        merged = np.unique(np.concatenate([base, np.asarray(self.anchors, dtype=float)]))
        return tuple(float(g) for g in merged)


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep depends on; two equal specs give identical rows."""

    ensemble: EnsembleKind
    alpha_sq_list: tuple[float, ...]
    gain_grid: GainGrid
    t2_sq: float
    eta1: float = 1.0
    eta2: float = 1.0
    dark1: float = 0.0
    dark2: float = 0.0
    mode: str = "analytic"
    n_trials: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ensemble", EnsembleKind(self.ensemble))
        object.__setattr__(
            self, "alpha_sq_list", tuple(float(a) for a in self.alpha_sq_list)
        )
        if not self.alpha_sq_list:
            raise ValueError("alpha_sq_list must be nonempty")
        if any(a <= 0.0 for a in self.alpha_sq_list):
            raise ValueError(f"alpha_sq values must be > 0, got {self.alpha_sq_list}")
        if self.mode not in ("analytic", "montecarlo", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode != "analytic" and self.n_trials < 1:
            raise ValueError("montecarlo sweeps need n_trials >= 1")
        if self.eta2 == 0.0:
            raise ValueError("eta2=0 means the device never fires; sweep rejected")
        if self.mode != "montecarlo" and (self.dark1 != 0.0 or self.dark2 != 0.0):
            raise ValueError(
                "closed forms are dark-count-free; use mode='montecarlo' for dark counts"
            )
        bad = [g for g in self.gain_grid.points() if g <= self.t2_sq]
        if bad:
            raise ValueError(
                f"grid gains must exceed t2_sq={self.t2_sq}; offending points: {bad}"
            )
        # build one config up front so detector range errors surface at validation
        self.config(self.gain_grid.points()[0])

    def config(self, gain: float) -> AmplifierConfig:
        return AmplifierConfig(
            intensity_gain=gain,
            t2_sq=self.t2_sq,
            d1=DetectorModel(self.eta1, self.dark1),
            d2=DetectorModel(self.eta2, self.dark2),
        )


@dataclass(frozen=True)
class SweepRow:
    ensemble: str
    alpha_sq: float
    intensity_gain: float
    eta1: float
    eta2: float
    t2_sq: float
    source: str
    p_success: float
    p_success_se: float | None = None
    fidelity: float | None = None
    fidelity_se: float | None = None
    noise_figure: float | None = None
    noise_figure_se: float | None = None


_ROW_KEY = lambda r: (r.alpha_sq, r.intensity_gain, r.source, r.eta1, r.eta2)  # noqa: E731


def _analytic_row(spec: SweepSpec, alpha_sq: float, gain: float) -> SweepRow:
    cfg = spec.config(gain)
    alpha = math.sqrt(alpha_sq)
    if spec.ensemble is EnsembleKind.BINARY:
        metrics = binary_metrics(alpha, cfg)
        moments = binary_quadrature_moments(alpha, cfg)
        p, f, nf = metrics.p_success, metrics.fidelity, moments.noise_figure
    else:
        p = phase_covariant_success_prob(alpha, cfg)
        f = phase_covariant_fidelity(alpha, cfg)
        nf = None
    return SweepRow(
        ensemble=spec.ensemble.value, alpha_sq=alpha_sq, intensity_gain=gain,
        eta1=spec.eta1, eta2=spec.eta2, t2_sq=spec.t2_sq, source="analytic",
        p_success=p, fidelity=f, noise_figure=nf,
    )


def _mc_row(spec: SweepSpec, alpha_sq: float, gain: float, point_seed: int) -> SweepRow:
    cfg = spec.config(gain)
    ensemble = InputEnsemble(spec.ensemble, math.sqrt(alpha_sq))
    summary = estimate(ensemble, cfg, spec.n_trials, point_seed)
    return SweepRow(
        ensemble=spec.ensemble.value, alpha_sq=alpha_sq, intensity_gain=gain,
        eta1=spec.eta1, eta2=spec.eta2, t2_sq=spec.t2_sq, source="mc",
        p_success=summary.p_success, p_success_se=summary.p_success_se,
        fidelity=summary.fidelity, fidelity_se=summary.fidelity_se,
        noise_figure=summary.noise_figure, noise_figure_se=summary.noise_figure_se,
    )


def sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Evaluate the requested metrics at every grid point.

    Rows come back in canonical order (alpha_sq, gain, source, eta1, eta2);
    analytic and Monte Carlo rows interleave per point when mode='both'.
    Monte Carlo points get independent substream seeds derived from
    (spec.seed, point index), so results never depend on ``workers``.
    """
    gains = spec.gain_grid.points()
    points = [
        (alpha_sq, gain, i * len(gains) + j)
        for i, alpha_sq in enumerate(spec.alpha_sq_list)
        for j, gain in enumerate(gains)
    ]

    def rows_for(point: tuple[float, float, int]) -> list[SweepRow]:
        alpha_sq, gain, index = point
        out = []
        if spec.mode in ("analytic", "both"):
            out.append(_analytic_row(spec, alpha_sq, gain))
        if spec.mode in ("montecarlo", "both"):
            out.append(_mc_row(spec, alpha_sq, gain, substream_seed(spec.seed, index)))
        return out

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(rows_for, points))
    else:
        chunks = [rows_for(p) for p in points]
    return sorted((row for chunk in chunks for row in chunk), key=_ROW_KEY)


def preset_specs(name: str, mode: str = "analytic", n_trials: int = 0,
                 seed: int = 0) -> tuple[SweepSpec, ...]:
    """Bundled sweep configurations for the standard figures."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    alphas = (0.1, 0.5, 1.0)
    if name in ("fig3", "fig4", "nf"):
        t2_sq = 0.9
        grid = GainGrid(1.05 * t2_sq, 10.0, 60, anchors=(1.2, 1.5, 1.8, 8.0))
        etas = (1.0,) if name == "nf" else (1.0, 0.5)
        ensemble = EnsembleKind.BINARY
    else:
        t2_sq = 0.95
        if name == "figS2":
            grid = GainGrid(1.0, 8.0, 60)
        else:
            grid = GainGrid(1.5, 10.0, 60)
        etas = (1.0, 0.5)
        ensemble = EnsembleKind.PHASE_COVARIANT
    return tuple(
        SweepSpec(
            ensemble=ensemble, alpha_sq_list=alphas, gain_grid=grid, t2_sq=t2_sq,
            eta1=eta, eta2=eta, mode=mode, n_trials=n_trials,
            seed=substream_seed(seed, k),
        )
        for k, eta in enumerate(etas)
    )


def run_preset(name: str, mode: str = "analytic", n_trials: int = 0, seed: int = 0,
               workers: int = 1) -> list[SweepRow]:
    rows: list[SweepRow] = []
    for spec in preset_specs(name, mode=mode, n_trials=n_trials, seed=seed):
        rows.extend(sweep(spec, workers=workers))
    return sorted(rows, key=_ROW_KEY)


def phase_quadrature_oracle(alpha: float, cfg: AmplifierConfig,
                            eta1_override: float | None = None,
                            rel_tol: float = 1e-10,
                            max_panels: int = 1 << 20) -> float:
    """Uniform-phase success probability by direct numerical quadrature.

    Integrates (2*pi)^-1 * integral dtheta of

        exp[-2*eta1*alpha^2*t1^2*(1-cos th)]
          * (1 - exp{-eta2*alpha^2*r2^2*[1 - 2*r1^2*(1-r1^2)*(1-cos th)]/r1^2})

    by composite Simpson, starting at 4096 panels and doubling until two
    successive estimates agree to ``rel_tol`` relative.  ``eta1_override``
    substitutes the comparison efficiency (the fidelity numerator uses
    eta1 + G - t2^2).  Raises OracleConvergenceError past ``max_panels``.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if cfg.d1.dark_prob != 0.0 or cfg.d2.dark_prob != 0.0:
        raise ValueError("the phase integral assumes dark-count-free detectors")
    eta1 = cfg.d1.eta if eta1_override is None else eta1_override
    eta2 = cfg.d2.eta
    alpha_sq = alpha * alpha
    r1_sq, t1_sq, r2_sq = cfg.r1_sq, cfg.t1_sq, cfg.r2_sq

    def simpson(panels: int) -> float:
        theta = np.linspace(0.0, 2.0 * np.pi, panels + 1)
        one_minus_cos = 1.0 - np.cos(theta)
        values = np.exp(-2.0 * eta1 * alpha_sq * t1_sq * one_minus_cos) * (
            -np.expm1(
                -eta2 * alpha_sq * r2_sq
                * (1.0 - 2.0 * r1_sq * t1_sq * one_minus_cos) / r1_sq
            )
        )
        h = theta[1] - theta[0]
        total = values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum()
        return float(h / 3.0 * total / (2.0 * np.pi))

    panels = 4096
    previous = simpson(panels)
    while True:
        panels *= 2
        if panels > max_panels:
            raise OracleConvergenceError(
                f"Simpson quadrature did not reach rel_tol={rel_tol} within "
                f"{max_panels} panels"
            )
        current = simpson(panels)
        if abs(current - previous) <= rel_tol * abs(current):
            return current
        previous = current


def _format_field(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def emit_csv(rows: Sequence[SweepRow], destination) -> None:
    """Write rows as CSV (schema in CSV_HEADER) in canonical order.

    Reals carry 17 significant digits so a read_csv round trip recovers
    every float bit-exactly; absent values are empty fields.
    """
    if not rows:
        raise ValueError("no rows to emit")

    def write(stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for row in sorted(rows, key=_ROW_KEY):
            writer.writerow([
                row.ensemble,
                _format_field(row.alpha_sq),
                _format_field(row.intensity_gain),
                _format_field(row.eta1),
                _format_field(row.eta2),
                _format_field(row.t2_sq),
                row.source,
                _format_field(row.p_success),
                _format_field(row.p_success_se),
                _format_field(row.fidelity),
                _format_field(row.fidelity_se),
                _format_field(row.noise_figure),
                _format_field(row.noise_figure_se),
            ])

    if hasattr(destination, "write"):
        write(destination)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as stream:
            write(stream)


def read_csv(source) -> list[SweepRow]:
    """Parse a CSV written by emit_csv back into rows."""

    def parse(stream) -> list[SweepRow]:
        reader = csv.reader(stream)
        header = next(reader)
        if header != CSV_HEADER.split(","):
            raise ValueError(f"unexpected CSV header: {header}")
        rows = []
        for record in reader:
            (ensemble, alpha_sq, gain, eta1, eta2, t2_sq, source,
             p, p_se, f, f_se, nf, nf_se) = record
            opt = lambda s: None if s == "" else float(s)  # noqa: E731
            rows.append(SweepRow(
                ensemble=ensemble, alpha_sq=float(alpha_sq),
                intensity_gain=float(gain), eta1=float(eta1), eta2=float(eta2),
                t2_sq=float(t2_sq), source=source, p_success=float(p),
                p_success_se=opt(p_se), fidelity=opt(f), fidelity_se=opt(f_se),
                noise_figure=opt(nf), noise_figure_se=opt(nf_se),
            ))
        return rows

    if hasattr(source, "read"):
        return parse(source)
    with open(source, "r", encoding="utf-8", newline="") as stream:
        return parse(stream)
