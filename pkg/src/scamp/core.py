"""Domain types and optical primitives for the state-comparison amplifier.

The device interferes an unknown coherent state with a guess state on a
comparison beam splitter (BS1), then taps the kept arm with a weakly
reflecting subtraction beam splitter (BS2).  A run is accepted when the
comparison detector stays silent and the subtraction detector fires.
Coherent amplitudes transform classically through this circuit, which is
the core simplification this package is built on: every probability below
is an exact function of a handful of complex amplitudes.

Port and sign convention (fixed once, here): a beam splitter with real
amplitudes (t, r) maps the (upper, lower) input pair to

    detector arm = t*upper - r*lower        (pi phase flip on reflection)
    kept arm     = r*upper + t*lower

so the comparison amplitude for inputs (alpha, beta) is t1*alpha - r1*beta.
Global phases cancel in every probability and overlap computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "ComplexAmplitude",
    "BeamSplitter",
    "DetectorModel",
    "AmplifierConfig",
    "EnsembleKind",
    "InputEnsemble",
    "VACUUM",
    "beam_splitter_transform",
    "no_click_probability",
    "coherent_overlap",
]

_UNITARITY_TOL = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ComplexAmplitude:
    """Coherent-state amplitude; the squared modulus is the mean photon number."""

    re: float
    im: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", _require_finite("re", self.re))
        object.__setattr__(self, "im", _require_finite("im", self.im))

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexAmplitude":
        return cls(z.real, z.imag)

    @property
    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    @property
    def mean_photon_number(self) -> float:
        return self.re * self.re + self.im * self.im

    def scaled(self, factor: float) -> "ComplexAmplitude":
        return ComplexAmplitude(factor * self.re, factor * self.im)


VACUUM = ComplexAmplitude(0.0, 0.0)


@dataclass(frozen=True)
class BeamSplitter:
    """Lossless beam splitter with real transmission/reflection amplitudes.

    Constructed from an intensity (t^2 or r^2) to avoid sign ambiguity;
    amplitudes are the non-negative roots and satisfy t^2 + r^2 = 1.
    """

    t: float
    r: float

    def __post_init__(self) -> None:
        t = _require_finite("t", self.t)
        r = _require_finite("r", self.r)
        if not (0.0 <= t <= 1.0 and 0.0 <= r <= 1.0):
            raise ValueError(f"amplitudes must lie in [0, 1], got t={t}, r={r}")
        if abs(t * t + r * r - 1.0) > _UNITARITY_TOL:
            raise ValueError(f"t^2 + r^2 must equal 1 within {_UNITARITY_TOL}, got {t * t + r * r}")

    @classmethod
    def from_t_sq(cls, t_sq: float) -> "BeamSplitter":
        t_sq = _require_finite("t_sq", t_sq)
        if not 0.0 <= t_sq <= 1.0:
            raise ValueError(f"t_sq must lie in [0, 1], got {t_sq}")
        return cls(math.sqrt(t_sq), math.sqrt(1.0 - t_sq))

    @classmethod
    def from_r_sq(cls, r_sq: float) -> "BeamSplitter":
        r_sq = _require_finite("r_sq", r_sq)
        if not 0.0 <= r_sq <= 1.0:
            raise ValueError(f"r_sq must lie in [0, 1], got {r_sq}")
        return cls(math.sqrt(1.0 - r_sq), math.sqrt(r_sq))


@dataclass(frozen=True)
class DetectorModel:
    """Threshold detector: quantum efficiency plus a per-window dark-click probability."""

    eta: float = 1.0
    dark_prob: float = 0.0

    def __post_init__(self) -> None:
        eta = _require_finite("eta", self.eta)
        dark = _require_finite("dark_prob", self.dark_prob)
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        if not 0.0 <= dark < 1.0:
            raise ValueError(f"dark_prob must lie in [0, 1), got {dark}")


@dataclass(frozen=True)
class AmplifierConfig:
    """Full device parameterization.

    Gain is configured as the intensity gain G = g^2; the amplitude gain
    g = sqrt(G) is derived.  The comparison beam splitter is slaved to the
    gain through r1 = t2/g, so construction requires t2 <= g
    (equivalently t2_sq <= intensity_gain, with equality the degenerate
    fully-reflecting comparison splitter).
    """

    intensity_gain: float
    t2_sq: float
    d1: DetectorModel = DetectorModel()
    d2: DetectorModel = DetectorModel()

    def __post_init__(self) -> None:
        gain = _require_finite("intensity_gain", self.intensity_gain)
        t2_sq = _require_finite("t2_sq", self.t2_sq)
        if gain <= 0.0:
            raise ValueError(f"intensity_gain must be > 0, got {gain}")
        if not 0.0 < t2_sq < 1.0:
            raise ValueError(f"t2_sq must lie in (0, 1), got {t2_sq}")
        if t2_sq > gain:
            raise ValueError(
                f"need t2 <= g, i.e. t2_sq <= intensity_gain; got t2_sq={t2_sq}, G={gain}"
            )

    @property
    def g(self) -> float:
        """Amplitude gain sqrt(G)."""
        return math.sqrt(self.intensity_gain)

    @property
    def r1_sq(self) -> float:
        return self.t2_sq / self.intensity_gain

    @property
    def r1(self) -> float:
        return math.sqrt(self.r1_sq)

    @property
    def t1_sq(self) -> float:
        return 1.0 - self.r1_sq

    @property
    def t1(self) -> float:
        return math.sqrt(self.t1_sq)

    @property
    def t2(self) -> float:
        return math.sqrt(self.t2_sq)

    @property
    def r2_sq(self) -> float:
        return 1.0 - self.t2_sq

    @property
    def r2(self) -> float:
        return math.sqrt(self.r2_sq)

    @property
    def comparison_bs(self) -> BeamSplitter:
        return BeamSplitter(self.t1, self.r1)

    @property
    def subtraction_bs(self) -> BeamSplitter:
        return BeamSplitter(self.t2, self.r2)

    def optimal_guess(self, alpha: float) -> ComplexAmplitude:
        """Guess amplitude t1*alpha/r1 that nulls the comparison arm for input alpha."""
        return ComplexAmplitude(self.t1 * alpha / self.r1, 0.0)


class EnsembleKind(str, Enum):
    BINARY = "binary"
    PHASE_COVARIANT = "phase"


@dataclass(frozen=True)
class InputEnsemble:
    """Sender's state distribution: +/-alpha with equal odds, or a uniform-phase ring.

    alpha is a real positive magnitude; alpha^2 is the mean photon number
    of every state in either ensemble.
    """

    kind: EnsembleKind
    alpha: float

    def __post_init__(self) -> None:
        alpha = _require_finite("alpha", self.alpha)
        if alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {alpha}")
        object.__setattr__(self, "kind", EnsembleKind(self.kind))

    @classmethod
    def binary(cls, alpha: float) -> "InputEnsemble":
        return cls(EnsembleKind.BINARY, alpha)

    @classmethod
    def phase_covariant(cls, alpha: float) -> "InputEnsemble":
        return cls(EnsembleKind.PHASE_COVARIANT, alpha)

    @property
    def alpha_sq(self) -> float:
        return self.alpha * self.alpha


def beam_splitter_transform(
    a_upper: ComplexAmplitude,
    a_lower: ComplexAmplitude,
    bs: BeamSplitter,
) -> tuple[ComplexAmplitude, ComplexAmplitude]:
    """Propagate two coherent amplitudes through a beam splitter.

    Returns (out_kept, out_detector) with

        out_detector = t*a_upper - r*a_lower
        out_kept     = r*a_upper + t*a_lower

    The map is unitary, so |out_kept|^2 + |out_detector|^2 equals the
    total input mean photon number.
    """
    out_detector = ComplexAmplitude(
        bs.t * a_upper.re - bs.r * a_lower.re,
        bs.t * a_upper.im - bs.r * a_lower.im,
    )
    out_kept = ComplexAmplitude(
        bs.r * a_upper.re + bs.t * a_lower.re,
        bs.r * a_upper.im + bs.t * a_lower.im,
    )
    return out_kept, out_detector


def no_click_probability(amp: ComplexAmplitude, det: DetectorModel) -> float:
    """Probability that a threshold detector stays silent for one window.

    For a coherent amplitude a the photocount statistics give
    exp(-eta*|a|^2); an independent dark-click chance d multiplies this
    by (1 - d).
    """
    return (1.0 - det.dark_prob) * math.exp(-det.eta * amp.mean_photon_number)


def coherent_overlap(a: ComplexAmplitude, b: ComplexAmplitude) -> float:
    """Squared overlap of two coherent states: exp(-|a - b|^2).

    Symmetric, lies in (0, 1], and equals 1 exactly when a == b.
    """
    dre = a.re - b.re
    dim = a.im - b.im
    return math.exp(-(dre * dre + dim * dim))
