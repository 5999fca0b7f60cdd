"""Exact algebra of the two active beam spaces.

A partially polarized stochastic beam decomposes into two orthonormal
polarization directions |u1>, |u2> carrying two statistically orthogonal
unit amplitude processes |f1>, |f2> with real weights kappa1 >= kappa2.
At most two function-space dimensions ever carry weight, so a beam is
fully described by a 2 x D complex coefficient matrix: D = 2 for the exact
algebraic form, D = (number of time samples) for sample-backed beams.
Everything in this module is pure, deterministic linear algebra; the Monte
Carlo counterpart lives in :mod:`bellfield.ensemble`.

Angles are plain floats in radians throughout the package and are compared
modulo 2*pi (:func:`wrap_angle`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi

#: Largest tolerated deviation of kappa1^2 + kappa2^2 from 1.  Pairs built by
#: this package are normalized to machine precision; the slack only admits
#: externally quoted coefficients rounded to a few decimals.
SCHMIDT_NORM_TOL = 2e-3


class DegenerateConfigurationError(ValueError):
    """Raised for physically degenerate optical configurations.

    Examples: a stripping polarizer that blocks the auxiliary beam entirely,
    or analyzer settings that are undefined for a separable (kappa2 = 0) beam.
    """


def wrap_angle(theta: float) -> float:
    """Map an angle to the canonical interval [-pi, pi)."""
    return (theta + math.pi) % TWO_PI - math.pi


def angles_close(x: float, y: float, tol: float = 1e-12) -> bool:
    """Compare two angles by their wrapped difference."""
    return abs(wrap_angle(x - y)) <= tol


def rotation_matrix(theta: float) -> np.ndarray:
    """Basis rotation: row j holds the coefficients of the j-th rotated vector.

    Row 0 is (cos t, -sin t), row 1 is (sin t, cos t).  Applied to a
    coefficient column it re-expresses the column in the rotated basis.
    """
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def basis_vector(index: int, theta: float) -> np.ndarray:
    """Real coefficients of rotated basis vector ``index`` (1 or 2)."""
    if index not in (1, 2):
        raise ValueError(f"basis index must be 1 or 2, got {index}")
    return rotation_matrix(theta)[index - 1]


@dataclass(frozen=True)
class SchmidtPair:
    """The two real weights of the beam's bi-orthogonal decomposition.

    kappa1 = kappa2 = 1/sqrt(2) is fully unpolarized (maximally entangled);
    kappa2 = 0 is fully polarized (separable).  Construction enforces the
    ordering convention kappa1 >= kappa2 >= 0 and near-unit normalization
    (see :data:`SCHMIDT_NORM_TOL`).
    """

    kappa1: float
    kappa2: float

    def __post_init__(self) -> None:
        k1, k2 = self.kappa1, self.kappa2
        if not (math.isfinite(k1) and math.isfinite(k2)):
            raise ValueError("Schmidt coefficients must be finite")
        if k1 < 0.0 or k2 < 0.0:
            raise ValueError("Schmidt coefficients must be non-negative")
        if k1 < k2:
            raise ValueError("ordering convention requires kappa1 >= kappa2")
        norm = k1 * k1 + k2 * k2
        if abs(norm - 1.0) > SCHMIDT_NORM_TOL:
            raise ValueError(
                f"kappa1^2 + kappa2^2 = {norm:.6f} is not 1 within {SCHMIDT_NORM_TOL}"
            )

    @property
    def product(self) -> float:
        """kappa1 * kappa2; zero exactly for separable beams."""
        return self.kappa1 * self.kappa2

    @property
    def dop(self) -> float:
        """Degree of polarization |kappa1^2 - kappa2^2|."""
        return abs(self.kappa1 * self.kappa1 - self.kappa2 * self.kappa2)


UNPOLARIZED = SchmidtPair(math.sqrt(0.5), math.sqrt(0.5))


@dataclass(frozen=True)
class PolVector:
    """Coefficients on the polarization basis; not necessarily normalized."""

    c1: complex
    c2: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=complex)


@dataclass(frozen=True)
class FunBasisLabel:
    """Names one of the two rotated amplitude-function basis processes."""

    index: int
    rotation: float = 0.0

    def __post_init__(self) -> None:
        if self.index not in (1, 2):
            raise ValueError(f"function-basis index must be 1 or 2, got {self.index}")

    def weights(self) -> np.ndarray:
        """Real combination weights on the reference processes (f1, f2)."""
        return basis_vector(self.index, self.rotation)


@dataclass(frozen=True, eq=False)
class BeamState:
    """A beam as a complex coefficient matrix over (pol basis) x (fun content).

    ``coeffs[j, k]`` multiplies polarization basis vector j (in the frame
    rotated by ``pol_frame`` from the reference Schmidt frame) and function
    content k.  The intensity convention is explicit: a unit-Frobenius-norm
    matrix carries exactly ``ref_intensity``, so the physical intensity is
    ``ref_intensity * ||coeffs||_F^2``.  Sample-backed beams store columns
    pre-scaled so the same convention holds in the mean.

    ``global_phase`` is carried along but never observable; all measurements
    read intensities only.
    """

    coeffs: np.ndarray
    ref_intensity: float = 1.0
    pol_frame: float = 0.0
    fun_frame: float = 0.0
    global_phase: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        m = np.asarray(self.coeffs, dtype=complex)
        if m.ndim != 2 or m.shape[0] != 2:
            raise ValueError(f"coeffs must have shape (2, D), got {m.shape}")
        object.__setattr__(self, "coeffs", m)
        if not (math.isfinite(self.ref_intensity) and self.ref_intensity >= 0.0):
            raise ValueError("ref_intensity must be finite and non-negative")
        if abs(abs(self.global_phase) - 1.0) > 1e-9:
            raise ValueError("global_phase must have unit modulus")

    @property
    def is_symbolic(self) -> bool:
        """True for the exact 2x2 algebraic form (columns are f1, f2)."""
        return self.coeffs.shape[1] == 2

    @property
    def intensity(self) -> float:
        return self.ref_intensity * float(np.vdot(self.coeffs, self.coeffs).real)

    def intensity_profile(self) -> np.ndarray:
        """Per-column intensity contributions; sums to ``intensity``."""
        return self.ref_intensity * np.sum(np.abs(self.coeffs) ** 2, axis=0)


def schmidt_beam(schmidt: SchmidtPair, intensity: float = 1.0) -> BeamState:
    """The canonical beam kappa1 |u1>|f1> + kappa2 |u2>|f2> at ``intensity``."""
    if not (math.isfinite(intensity) and intensity >= 0.0):
        raise ValueError("intensity must be finite and non-negative")
    m = np.diag([schmidt.kappa1, schmidt.kappa2]).astype(complex)
    return BeamState(m, ref_intensity=float(intensity))


def rotate_pol(v: PolVector, angle: float) -> PolVector:
    """Re-express polarization coefficients in the basis rotated by ``angle``.

    Orthonormality is preserved: the rotation is real-orthogonal, so norms
    and (Hermitian) inner products are unchanged.
    """
    c1, c2 = rotation_matrix(angle) @ v.as_array()
    return PolVector(complex(c1), complex(c2))


def rotate_fun(beam: BeamState, angle: float) -> BeamState:
    """Re-express the function-basis columns in the basis rotated by ``angle``.

    Only meaningful for the exact 2x2 form; sample-backed beams have no
    explicit function basis to rotate.  Intensity is unchanged.
    """
    if not beam.is_symbolic:
        raise ValueError("function-basis rotation requires the 2x2 algebraic form")
    r = rotation_matrix(angle)
    return replace(
        beam,
        coeffs=beam.coeffs @ r.T,
        fun_frame=wrap_angle(beam.fun_frame + angle),
    )


def project_pol(beam: BeamState, axis: float) -> BeamState:
    """Transmit the beam through an ideal polarizer along the rotated |u1>.

    ``axis`` is measured from the reference frame; the beam's own
    ``pol_frame`` is taken into account.  The output intensity is the input
    intensity times the squared norm of the projected coefficient row, hence
    never larger than the input intensity.  Projecting twice onto the same
    axis equals projecting once, and the transmitted intensities on ``axis``
    and ``axis + pi/2`` sum to the input intensity (the two projectors
    resolve the identity).
    """
    u = basis_vector(1, axis - beam.pol_frame)
    content = u @ beam.coeffs
    return replace(beam, coeffs=np.outer(u, content))
