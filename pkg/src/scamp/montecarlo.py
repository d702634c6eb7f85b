"""Shot-by-shot stochastic simulation of the state-comparison amplifier.

Each trial samples an input from the ensemble, propagates amplitudes
through both beam splitters, samples the two detectors and applies the
acceptance rule (comparison detector silent AND subtraction detector
fired).  Randomness is counter-based: draw j of trial i is a pure
function of (seed, i, j), built from the splitmix64 finalizer, so results
are bit-reproducible and independent of execution order, partitioning and
worker count.

Trials are reduced in fixed canonical batches of ``BATCH_SIZE``.  A batch
total depends only on (seed, batch index, parameters); merging any
distribution of batch totals sorts them by batch index and combines the
sums with ``math.fsum``, so a k-worker run is bit-identical to the
single-threaded one for every k.

Estimators and their standard errors
------------------------------------
* success probability: p = n_accepted/n with binomial error
  sqrt(p*(1-p)/n).
* fidelity: conditional mean of the per-trial overlap weight
  w = |<output|g*input>|^2 over accepted trials.  This is the ratio
  estimator sum(w*acc)/sum(acc); the delta method gives
  SE = sqrt(sum_acc (w_i - F)^2) / n_accepted.
* sampled fidelity (cross-check): each accepted trial also samples the
  pass/fail test as a Bernoulli(w_i) draw; SE = sqrt(f*(1-f)/n_accepted).
* quadrature moments (binary only): per accepted trial the output
  coherent state contributes its exact moments a_i = sqrt(2)*Re(out) and
  b_i = 1/2 + 2*Re(out)^2 (a Rao-Blackwellization; no homodyne outcomes
  are sampled).  The noise figure NF = m1 / (2*alpha*sqrt(m2 - m1^2)) gets
  a delta-method error from the sample covariance of (a_i, b_i) with
  gradient (m2, -m1/2) / (2*alpha*v^(3/2)), v = m2 - m1^2.

Detector sampling uses the exact coherent-state click probabilities by
default.  ``detector_sampling="photon"`` is a deliberately slower guard
path that samples a Poisson photon number and per-photon detection losses
instead; it must agree statistically with the exact path.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .core import AmplifierConfig, ComplexAmplitude, EnsembleKind, InputEnsemble

__all__ = [
    "BATCH_SIZE",
    "DRAW_SLOTS",
    "TrialStream",
    "TrialOutcome",
    "substream_seed",
    "BatchTotals",
    "EstimateSummary",
    "trial_uniform",
    "run_trial",
    "batch_totals",
    "summarize",
    "estimate",
]

BATCH_SIZE = 1 << 16

# Draw layout per trial.  Slots 0-3 feed the exact path, 4-9 the photon
# path; unused slots cost nothing because uniforms are generated lazily.
DRAW_SLOTS = 16
_SLOT_INPUT = 0
_SLOT_CLICK1 = 1
_SLOT_CLICK2 = 2
_SLOT_TEST = 3
_SLOT_PHOTON = 4  # six consecutive slots: (n, detect, dark) per detector

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def substream_seed(seed: int, index: int) -> int:
    """Independent 64-bit stream seed for sub-experiment ``index``.

    Splitmix64 of (seed, index); used by sweeps to give every grid point
    its own trial stream while staying a pure function of the base seed.
    """
    z = (seed + (index + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def trial_uniform(seed: int, trial_index: int, slot: int) -> float:
    """Uniform variate in [0, 1) for draw ``slot`` of trial ``trial_index``.

    Pure integer arithmetic (splitmix64 stream + finalizer); the vectorized
    block generator below produces bit-identical values.
    """
    counter = trial_index * DRAW_SLOTS + slot
    z = (seed + (counter + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    z = z ^ (z >> 31)
    return (z >> 11) * _INV_2_53


def _uniform_block(seed: int, start: int, count: int, slot: int) -> np.ndarray:
    """Vectorized ``trial_uniform`` for trials [start, start+count)."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    counter = idx * np.uint64(DRAW_SLOTS) + np.uint64(slot)
    z = np.uint64(seed & _MASK64) + (counter + np.uint64(1)) * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


@dataclass
class TrialStream:
    """Deterministic per-trial randomness: position ``next_index`` in the
    counter sequence keyed by ``seed``."""

    seed: int
    next_index: int = 0


@dataclass(frozen=True)
class TrialOutcome:
    accepted: bool
    input_amp: ComplexAmplitude
    output_amp: ComplexAmplitude
    fidelity_weight: float | None


@dataclass(frozen=True)
class BatchTotals:
    """Sufficient statistics of one canonical batch of trials.

    The quadrature sums run over accepted trials: q1 = sqrt(2)*Re(out),
    q2 = 1/2 + 2*Re(out)^2, plus their squares and cross products for the
    delta-method covariance.
    """

    batch_index: int
    n_trials: int
    n_accepted: int
    sum_weight: float
    sum_weight_sq: float
    n_sampled_pass: int
    sum_q1: float
    sum_q2: float
    sum_q1_sq: float
    sum_q1_q2: float
    sum_q2_sq: float


@dataclass(frozen=True)
class EstimateSummary:
    """Aggregated Monte Carlo estimates with standard errors.

    Conditional quantities are None when no trial was accepted; the
    quadrature/noise-figure block is populated for binary ensembles only.
    """

    n_trials: int
    n_accepted: int
    seed: int
    p_success: float
    p_success_se: float
    fidelity: float | None
    fidelity_se: float | None
    fidelity_sampled: float | None
    fidelity_sampled_se: float | None
    mean_x1: float | None = None
    mean_x1_se: float | None = None
    mean_x1_sq: float | None = None
    mean_x1_sq_se: float | None = None
    noise_figure: float | None = None
    noise_figure_se: float | None = None


def _resolve_guess(ensemble: InputEnsemble, cfg: AmplifierConfig,
                   guess: ComplexAmplitude | None) -> complex:
    if guess is None:
        guess = cfg.optimal_guess(ensemble.alpha)
    return guess.as_complex


def _sample_inputs(seed: int, start: int, count: int,
                   ensemble: InputEnsemble) -> np.ndarray:
    u = _uniform_block(seed, start, count, _SLOT_INPUT)
    if ensemble.kind is EnsembleKind.BINARY:
        return np.where(u < 0.5, ensemble.alpha, -ensemble.alpha).astype(np.complex128)
    theta = (2.0 * np.pi) * u
    return ensemble.alpha * (np.cos(theta) + 1j * np.sin(theta))


def _click_exact(seed: int, start: int, count: int, slot: int,
                 intensity: np.ndarray, eta: float, dark: float) -> np.ndarray:
    p_click = 1.0 - (1.0 - dark) * np.exp(-eta * intensity)
    return _uniform_block(seed, start, count, slot) < p_click


def _click_photon(seed: int, start: int, count: int, base_slot: int,
                  intensity: np.ndarray, eta: float, dark: float) -> np.ndarray:
    # Poisson photon number by inverse CDF, then "at least one of n photons
    # survives per-photon Bernoulli(eta) detection", then dark clicks.
    u_n = _uniform_block(seed, start, count, base_slot)
    n = stats.poisson.ppf(u_n, intensity)
    p_detect = 1.0 - (1.0 - eta) ** n
    detected = _uniform_block(seed, start, count, base_slot + 1) < p_detect
    dark_click = _uniform_block(seed, start, count, base_slot + 2) < dark
    return detected | dark_click


def _simulate_range(seed: int, start: int, count: int, ensemble: InputEnsemble,
                    cfg: AmplifierConfig, guess: ComplexAmplitude | None,
                    detector_sampling: str) -> dict[str, np.ndarray]:
    if detector_sampling not in ("exact", "photon"):
        raise ValueError(f"unknown detector_sampling {detector_sampling!r}")
    beta = _resolve_guess(ensemble, cfg, guess)
    amp_in = _sample_inputs(seed, start, count, ensemble)

    comparison = cfg.t1 * amp_in - cfg.r1 * beta
    kept = cfg.r1 * amp_in + cfg.t1 * beta
    subtraction_arm = cfg.r2 * kept
    output = cfg.t2 * kept

    i_comp = comparison.real**2 + comparison.imag**2
    i_sub = subtraction_arm.real**2 + subtraction_arm.imag**2

    if detector_sampling == "exact":
        click1 = _click_exact(seed, start, count, _SLOT_CLICK1,
                              i_comp, cfg.d1.eta, cfg.d1.dark_prob)
        click2 = _click_exact(seed, start, count, _SLOT_CLICK2,
                              i_sub, cfg.d2.eta, cfg.d2.dark_prob)
    else:
        click1 = _click_photon(seed, start, count, _SLOT_PHOTON,
                               i_comp, cfg.d1.eta, cfg.d1.dark_prob)
        click2 = _click_photon(seed, start, count, _SLOT_PHOTON + 3,
                               i_sub, cfg.d2.eta, cfg.d2.dark_prob)

    accepted = (~click1) & click2
    deviation = output - cfg.g * amp_in
    weight = np.exp(-(deviation.real**2 + deviation.imag**2))
    sampled_pass = _uniform_block(seed, start, count, _SLOT_TEST) < weight
    return {
        "amp_in": amp_in,
        "output": output,
        "accepted": accepted,
        "weight": weight,
        "sampled_pass": sampled_pass,
    }


def run_trial(rng_stream: TrialStream, ensemble: InputEnsemble, cfg: AmplifierConfig,
              guess: ComplexAmplitude | None = None,
              detector_sampling: str = "exact") -> TrialOutcome:
    """Simulate one shot, consuming one trial index from the stream."""
    index = rng_stream.next_index
    rng_stream.next_index = index + 1
    arrays = _simulate_range(rng_stream.seed, index, 1, ensemble, cfg, guess,
                             detector_sampling)
    accepted = bool(arrays["accepted"][0])
    return TrialOutcome(
        accepted=accepted,
        input_amp=ComplexAmplitude.from_complex(complex(arrays["amp_in"][0])),
        output_amp=ComplexAmplitude.from_complex(complex(arrays["output"][0])),
        fidelity_weight=float(arrays["weight"][0]) if accepted else None,
    )


def batch_totals(seed: int, batch_index: int, n_trials: int, ensemble: InputEnsemble,
                 cfg: AmplifierConfig, guess: ComplexAmplitude | None = None,
                 detector_sampling: str = "exact") -> BatchTotals:
    """Totals for canonical batch ``batch_index`` of an ``n_trials`` run."""
    start = batch_index * BATCH_SIZE
    count = min(BATCH_SIZE, n_trials - start)
    if count <= 0:
        raise ValueError(f"batch {batch_index} is empty for n_trials={n_trials}")
    arrays = _simulate_range(seed, start, count, ensemble, cfg, guess,
                             detector_sampling)
    acc = arrays["accepted"]
    w = arrays["weight"][acc]
    q1 = math.sqrt(2.0) * arrays["output"].real[acc]
    q2 = 0.5 + 2.0 * arrays["output"].real[acc] ** 2
    return BatchTotals(
        batch_index=batch_index,
        n_trials=count,
        n_accepted=int(np.count_nonzero(acc)),
        sum_weight=float(np.sum(w)),
        sum_weight_sq=float(np.sum(w * w)),
        n_sampled_pass=int(np.count_nonzero(arrays["sampled_pass"] & acc)),
        sum_q1=float(np.sum(q1)),
        sum_q2=float(np.sum(q2)),
        sum_q1_sq=float(np.sum(q1 * q1)),
        sum_q1_q2=float(np.sum(q1 * q2)),
        sum_q2_sq=float(np.sum(q2 * q2)),
    )


def _fsum_sorted(totals: Sequence[BatchTotals], field: str) -> float:
    return math.fsum(getattr(t, field) for t in totals)


def summarize(totals: Iterable[BatchTotals], ensemble: InputEnsemble,
              cfg: AmplifierConfig, seed: int) -> EstimateSummary:
    """Deterministic merge of batch totals into an EstimateSummary.

    Totals are sorted by batch index and the float fields combined with
    ``math.fsum``, so the result does not depend on how batches were
    distributed across workers.
    """
    ordered = sorted(totals, key=lambda t: t.batch_index)
    if not ordered:
        raise ValueError("no batch totals to summarize")
    indices = [t.batch_index for t in ordered]
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate batch indices")

    n = sum(t.n_trials for t in ordered)
    n_acc = sum(t.n_accepted for t in ordered)
    p = n_acc / n
    p_se = math.sqrt(p * (1.0 - p) / n)

    if n_acc == 0:
        return EstimateSummary(n_trials=n, n_accepted=0, seed=seed,
                               p_success=p, p_success_se=p_se,
                               fidelity=None, fidelity_se=None,
                               fidelity_sampled=None, fidelity_sampled_se=None)

    sum_w = _fsum_sorted(ordered, "sum_weight")
    sum_ww = _fsum_sorted(ordered, "sum_weight_sq")
    fid = sum_w / n_acc
    # delta method for the ratio estimator: sum_acc (w_i - fid)^2
    fid_var = max(sum_ww - sum_w * sum_w / n_acc, 0.0)
    fid_se = math.sqrt(fid_var) / n_acc

    n_pass = sum(t.n_sampled_pass for t in ordered)
    fid_sampled = n_pass / n_acc
    fid_sampled_se = math.sqrt(fid_sampled * (1.0 - fid_sampled) / n_acc)

    summary = EstimateSummary(
        n_trials=n, n_accepted=n_acc, seed=seed,
        p_success=p, p_success_se=p_se,
        fidelity=fid, fidelity_se=fid_se,
        fidelity_sampled=fid_sampled, fidelity_sampled_se=fid_sampled_se,
    )
    if ensemble.kind is not EnsembleKind.BINARY:
        return summary

    m1 = _fsum_sorted(ordered, "sum_q1") / n_acc
    m2 = _fsum_sorted(ordered, "sum_q2") / n_acc
    cov11 = max(_fsum_sorted(ordered, "sum_q1_sq") / n_acc - m1 * m1, 0.0)
    cov12 = _fsum_sorted(ordered, "sum_q1_q2") / n_acc - m1 * m2
    cov22 = max(_fsum_sorted(ordered, "sum_q2_sq") / n_acc - m2 * m2, 0.0)

    variance = m2 - m1 * m1  # >= 1/2: per-trial q2 = 1/2 + q1^2
    scale = 2.0 * ensemble.alpha
    nf = m1 / (scale * math.sqrt(variance))
    grad1 = m2 / (scale * variance**1.5)
    grad2 = -m1 / (2.0 * scale * variance**1.5)
    nf_var = (grad1 * grad1 * cov11 + 2.0 * grad1 * grad2 * cov12
              + grad2 * grad2 * cov22) / n_acc
    return EstimateSummary(
        n_trials=n, n_accepted=n_acc, seed=seed,
        p_success=p, p_success_se=p_se,
        fidelity=fid, fidelity_se=fid_se,
        fidelity_sampled=fid_sampled, fidelity_sampled_se=fid_sampled_se,
        mean_x1=m1, mean_x1_se=math.sqrt(cov11 / n_acc),
        mean_x1_sq=m2, mean_x1_sq_se=math.sqrt(cov22 / n_acc),
        noise_figure=nf, noise_figure_se=math.sqrt(max(nf_var, 0.0)),
    )


def estimate(ensemble: InputEnsemble, cfg: AmplifierConfig, n_trials: int, seed: int,
             guess: ComplexAmplitude | None = None, workers: int = 1,
             detector_sampling: str = "exact") -> EstimateSummary:
    """Monte Carlo estimate over ``n_trials`` shots.

    Bit-reproducible: the result depends only on (ensemble, cfg, n_trials,
    seed, guess, detector_sampling), never on ``workers``.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    n_batches = (n_trials + BATCH_SIZE - 1) // BATCH_SIZE

    def one(b: int) -> BatchTotals:
        return batch_totals(seed, b, n_trials, ensemble, cfg, guess,
                            detector_sampling)

    if workers == 1 or n_batches == 1:
        totals = [one(b) for b in range(n_batches)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            totals = list(pool.map(one, range(n_batches)))
    return summarize(totals, ensemble, cfg, seed)
