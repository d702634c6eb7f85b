"""Closed-form performance metrics of the state-comparison amplifier.

Everything here is exact arithmetic on the accepted-run statistics of the
two-detector circuit: success probability, joint test-and-success
probability, fidelity, conditional input probabilities, homodyne
quadrature moments, noise figure, and the uniform-phase (phase-covariant)
forms built from the scaled modified Bessel function e^(-x)*I0(x).

All expressions are evaluated so that every intermediate stays bounded:
exponentials only ever see non-positive arguments, and I0 appears only in
its exponentially scaled form.  The closed forms remain finite for
intensity gains up to 1e4 and mean photon numbers up to 1e2 and beyond.

The ensemble-averaged forms assume dark-count-free detectors (the
per-amplitude ``success_prob_given`` supports dark counts; stochastic
sweeps with dark counts go through the Monte Carlo path instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .core import AmplifierConfig, ComplexAmplitude, coherent_overlap, no_click_probability

__all__ = [
    "BinaryMetrics",
    "QuadratureMoments",
    "NeverSucceedsError",
    "success_prob_given",
    "fidelity_test_prob",
    "binary_metrics",
    "binary_quadrature_moments",
    "bessel_i0_scaled",
    "phase_covariant_success_prob",
    "phase_covariant_joint_prob",
    "phase_covariant_fidelity",
]

_SQRT2 = math.sqrt(2.0)


class NeverSucceedsError(ValueError):
    """The device has zero success probability; conditional metrics are undefined."""


@dataclass(frozen=True)
class BinaryMetrics:
    """Accepted-run metrics for the two-state alphabet {+alpha, -alpha}.

    fidelity = p_joint / p_success, and the two conditional input
    probabilities given success sum to one.
    """

    p_success: float
    p_joint: float
    fidelity: float
    p_plus_given_s: float
    p_minus_given_s: float


@dataclass(frozen=True)
class QuadratureMoments:
    """First two moments of the x1 = (a + a^dag)/sqrt(2) quadrature of the output.

    variance = mean_x1_sq - mean_x1^2, snr_out = mean_x1/sqrt(variance),
    and noise_figure = snr_out / (2*alpha) since a real coherent input of
    amplitude alpha carries an input SNR of exactly 2*alpha.
    """

    mean_x1: float
    mean_x1_sq: float
    variance: float
    snr_out: float
    noise_figure: float


def _require_dark_free(cfg: AmplifierConfig, op_name: str) -> None:
    if cfg.d1.dark_prob != 0.0 or cfg.d2.dark_prob != 0.0:
        raise ValueError(
            f"{op_name} assumes dark-count-free detectors; "
            "use the Monte Carlo estimator for nonzero dark_prob"
        )


def success_prob_given(
    alpha: ComplexAmplitude, beta: ComplexAmplitude, cfg: AmplifierConfig
) -> float:
    """Acceptance probability for one run with known input and guess amplitudes.

    The comparison detector must stay silent on t1*alpha - r1*beta while
    the subtraction detector fires on r2*(t1*beta + r1*alpha):

        (1-d1)*exp(-eta1*|t1*a - r1*b|^2)
            * [1 - (1-d2)*exp(-eta2*r2^2*|t1*b + r1*a|^2)]
    """
    comparison = ComplexAmplitude(
        cfg.t1 * alpha.re - cfg.r1 * beta.re,
        cfg.t1 * alpha.im - cfg.r1 * beta.im,
    )
    kept = ComplexAmplitude(
        cfg.r1 * alpha.re + cfg.t1 * beta.re,
        cfg.r1 * alpha.im + cfg.t1 * beta.im,
    )
    subtraction_arm = kept.scaled(cfg.r2)
    p_silent_1 = no_click_probability(comparison, cfg.d1)
    p_fire_2 = 1.0 - no_click_probability(subtraction_arm, cfg.d2)
    return p_silent_1 * p_fire_2


def fidelity_test_prob(
    alpha_in: ComplexAmplitude, beta: ComplexAmplitude, cfg: AmplifierConfig
) -> float:
    """Probability that the accepted output passes the amplified-copy test.

    The output t2*(t1*beta + r1*alpha_in) is compared against g times the
    actual input (not the guess); for a correct guess the overlap is 1.
    """
    output = ComplexAmplitude(
        cfg.t2 * (cfg.t1 * beta.re + cfg.r1 * alpha_in.re),
        cfg.t2 * (cfg.t1 * beta.im + cfg.r1 * alpha_in.im),
    )
    target = alpha_in.scaled(cfg.g)
    return coherent_overlap(output, target)


def _binary_terms(alpha: float, cfg: AmplifierConfig) -> tuple[float, float, float, float]:
    """The four exponential building blocks of the binary closed forms.

    Returns (p_fire_correct, p_silent_wrong, p_fire_wrong, overlap_wrong):
    subtraction click probability when the guess matches, comparison
    no-click probability when it does not, subtraction click probability
    on the mismatched branch, and the mismatched output's overlap with its
    amplified target.
    """
    alpha_sq = alpha * alpha
    gain = cfg.intensity_gain
    eta1 = cfg.d1.eta
    eta2 = cfg.d2.eta
    subtraction_intensity = eta2 * gain * alpha_sq * (1.0 / cfg.t2_sq - 1.0)
    mismatch = 1.0 - 2.0 * cfg.t2_sq / gain
    leak = 1.0 - cfg.t2_sq / gain

    p_fire_correct = -math.expm1(-subtraction_intensity)
    p_silent_wrong = math.exp(-4.0 * eta1 * alpha_sq * leak)
    p_fire_wrong = -math.expm1(-subtraction_intensity * mismatch * mismatch)
    overlap_wrong = math.exp(-4.0 * gain * alpha_sq * leak * leak)
    return p_fire_correct, p_silent_wrong, p_fire_wrong, overlap_wrong


def binary_metrics(alpha: float, cfg: AmplifierConfig) -> BinaryMetrics:
    """Success probability, fidelity and success conditionals for the binary alphabet.

    The sender draws +/-alpha with equal odds and the guess is fixed at the
    nulling amplitude t1*alpha/r1, so

        P(S)   = (X + Y*Z) / 2
        P(T,S) = (X + Y*Z*W) / 2

    with X the subtraction click probability on the matched branch, Y the
    comparison no-click probability on the mismatched branch, Z the
    subtraction click probability on the mismatched branch and W the
    mismatched output's overlap with its amplified target.

    Raises NeverSucceedsError when P(S) = 0 (a blind subtraction detector).
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    _require_dark_free(cfg, "binary_metrics")

    x, y, z, w = _binary_terms(alpha, cfg)
    p_success = 0.5 * (x + y * z)
    if p_success <= 0.0:
        raise NeverSucceedsError(
            "device never succeeds for this configuration (is eta2 zero?)"
        )
    p_joint = 0.5 * (x + y * z * w)
    weight_wrong = y * z
    return BinaryMetrics(
        p_success=p_success,
        p_joint=p_joint,
        fidelity=p_joint / p_success,
        p_plus_given_s=x / (x + weight_wrong),
        p_minus_given_s=weight_wrong / (x + weight_wrong),
    )


def binary_quadrature_moments(alpha: float, cfg: AmplifierConfig) -> QuadratureMoments:
    """Output x1-quadrature moments and noise figure for the binary alphabet.

    Conditioned on success the output is g*alpha with probability
    P(+alpha|S) and g*alpha*(1 - 2*t2^2/G) otherwise, hence

        <x1>   = sqrt(2)*g*alpha * [P(+|S) + (1 - 2 t2^2/G)  * P(-|S)]
        <x1^2> = (1 + 4 G alpha^2 [P(+|S) + (1 - 2 t2^2/G)^2 * P(-|S)]) / 2

    Raises NeverSucceedsError when P(S) = 0.
    """
    metrics = binary_metrics(alpha, cfg)
    gain = cfg.intensity_gain
    mismatch = 1.0 - 2.0 * cfg.t2_sq / gain
    p_plus = metrics.p_plus_given_s
    p_minus = metrics.p_minus_given_s

    mean_x1 = _SQRT2 * cfg.g * alpha * (p_plus + mismatch * p_minus)
    mean_x1_sq = 0.5 * (
        1.0 + 4.0 * gain * alpha * alpha * (p_plus + mismatch * mismatch * p_minus)
    )
    variance = mean_x1_sq - mean_x1 * mean_x1
    snr_out = mean_x1 / math.sqrt(variance)
    return QuadratureMoments(
        mean_x1=mean_x1,
        mean_x1_sq=mean_x1_sq,
        variance=variance,
        snr_out=snr_out,
        noise_figure=snr_out / (2.0 * alpha),
    )


def bessel_i0_scaled(x: float) -> float:
    """Exponentially scaled modified Bessel function e^(-x) * I0(x) for x >= 0.

    Strictly positive and decreasing, with value 1 at x = 0.  The scaled
    form keeps every phase-averaged expression bounded where the bare I0
    would overflow (x beyond ~700).
    """
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    return float(special.i0e(x))


def _phase_covariant_exponents(
    alpha: float, cfg: AmplifierConfig, eta1: float
) -> tuple[float, float, float]:
    """Exponent triple (A, B, C) of the uniform-phase closed form.

    A scales the comparison leakage, B the full subtraction-arm intensity
    and C the phase-dependent part of the subtraction exponent.
    """
    alpha_sq = alpha * alpha
    gain = cfg.intensity_gain
    eta2 = cfg.d2.eta
    leak = 1.0 - cfg.t2_sq / gain
    comparison_exp = 2.0 * eta1 * alpha_sq * leak
    subtraction_exp = eta2 * alpha_sq * gain * (1.0 / cfg.t2_sq - 1.0)
    cross_exp = 2.0 * eta2 * alpha_sq * (1.0 - cfg.t2_sq) * leak
    return comparison_exp, subtraction_exp, cross_exp


def _phase_covariant_form(alpha: float, cfg: AmplifierConfig, eta1: float) -> float:
    """Evaluate i0e(A) - e^(-A-B+C) * I0(A-C) with every intermediate bounded.

    The second term is regrouped as exp(-A - B + C + |A - C|) * i0e(|A - C|);
    I0 is even, and the regrouped exponent is provably <= 0 on the valid
    parameter domain, so nothing here can overflow.
    """
    comp, sub, cross = _phase_covariant_exponents(alpha, cfg, eta1)
    spread = abs(comp - cross)
    first = bessel_i0_scaled(comp)
    second = math.exp(-comp - sub + cross + spread) * bessel_i0_scaled(spread)
    return max(first - second, 0.0)


def phase_covariant_success_prob(alpha: float, cfg: AmplifierConfig) -> float:
    """Success probability for inputs of fixed magnitude and uniform random phase.

    Phase-averaging the per-run acceptance probability gives the closed form

        P(S) = e^(-A) I0(A) - e^(-A-B+C) I0(A-C)

        A = 2 eta1 alpha^2 (1 - t2^2/G)
        B = eta2 alpha^2 G (1/t2^2 - 1)
        C = 2 eta2 alpha^2 (1 - t2^2)(1 - t2^2/G)
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    _require_dark_free(cfg, "phase_covariant_success_prob")
    return _phase_covariant_form(alpha, cfg, cfg.d1.eta)


def phase_covariant_joint_prob(alpha: float, cfg: AmplifierConfig) -> float:
    """Joint probability of passing the test AND succeeding, uniform-phase ensemble.

    Equals the success closed form with the comparison efficiency shifted,
    eta1 -> eta1 + G - t2^2: the amplified output's overlap with its target
    contributes the same functional form as extra comparison leakage.
    Detector-2 terms are untouched.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    _require_dark_free(cfg, "phase_covariant_joint_prob")
    shifted_eta1 = cfg.d1.eta + cfg.intensity_gain - cfg.t2_sq
    return _phase_covariant_form(alpha, cfg, shifted_eta1)


def phase_covariant_fidelity(alpha: float, cfg: AmplifierConfig) -> float:
    """Fidelity P(T|S) = P(T,S)/P(S) for the uniform-phase ensemble.

    Raises NeverSucceedsError when P(S) = 0.
    """
    denominator = phase_covariant_success_prob(alpha, cfg)
    if denominator <= 0.0:
        raise NeverSucceedsError(
            "device never succeeds for this configuration (is eta2 zero?)"
        )
    numerator = phase_covariant_joint_prob(alpha, cfg)
    return min(max(numerator / denominator, 0.0), 1.0)
