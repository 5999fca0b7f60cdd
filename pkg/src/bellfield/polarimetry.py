"""Polarization tomography: Stokes parameters, DOP, Schmidt-frame recovery."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .ensemble import FieldEnsemble, empirical_correlator
from .field import SchmidtPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StokesVector:
    """Second-order polarization summary (s0 total, s1..s3 same units)."""

    s0: float
    s1: float
    s2: float
    s3: float

    def normalized(self) -> tuple[float, float, float]:
        return (self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0)


def coherence_matrix(e: FieldEnsemble) -> np.ndarray:
    """Empirical 2x2 coherence matrix <E_i conj(E_j)> in the lab frame."""
    jxx = empirical_correlator(e, "x", "x").real
    jyy = empirical_correlator(e, "y", "y").real
    jxy = empirical_correlator(e, "x", "y")
    return np.array([[jxx, jxy], [np.conj(jxy), jyy]])


def stokes_from_coherence(j: np.ndarray) -> StokesVector:
    # Convention: s2 from the real part of <Ex conj(Ey)>, s3 from its
    # imaginary part.  Only magnitudes feed the DOP downstream.
    return StokesVector(
        s0=float(j[0, 0].real + j[1, 1].real),
        s1=float(j[0, 0].real - j[1, 1].real),
        s2=float(2.0 * j[0, 1].real),
        s3=float(2.0 * j[0, 1].imag),
    )


def stokes_from_ensemble(e: FieldEnsemble) -> StokesVector:
    """Stokes parameters from the ensemble's empirical correlators."""
    return stokes_from_coherence(coherence_matrix(e))


def dop(s: StokesVector) -> float:
    """Degree of polarization sqrt(s1^2 + s2^2 + s3^2) / s0, clipped to [0, 1].

    Sampling noise can push the raw value marginally above 1; that case is
    clipped and logged.  ``s0 <= 0`` is an error.
    """
    if not (math.isfinite(s.s0) and s.s0 > 0.0):
        raise ValueError(f"s0 must be positive, got {s.s0}")
    p = math.sqrt(s.s1**2 + s.s2**2 + s.s3**2) / s.s0
    if p > 1.0:
        logger.warning("estimated DOP %.6f exceeds 1; clipping", p)
        return 1.0
    return p


def schmidt_from_dop(p: float) -> SchmidtPair:
    """Schmidt weights with kappa1^2 - kappa2^2 = p and unit normalization."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"degree of polarization must be in [0, 1], got {p}")
    return SchmidtPair(math.sqrt((1.0 + p) / 2.0), math.sqrt((1.0 - p) / 2.0))


def schmidt_frame(
    source: FieldEnsemble | np.ndarray,
) -> tuple[SchmidtPair, float]:
    """Diagonalize a 2x2 coherence matrix into Schmidt weights and a frame angle.

    Accepts an ensemble or a Hermitian positive-semidefinite matrix.  Returns
    (kappa1, kappa2) from the eigenvalue fractions and the real polarizer
    rotation aligning the first axis with the dominant eigenvector.  For a
    degenerate (unpolarized) matrix any frame works; angle 0 is returned.

    The frame angle is computed from the real part of the off-diagonal; a
    small circular component (s3 != 0) cannot be nulled by a real rotation
    and is left to the complex eigenvectors, which only affect the kappas.
    """
    j = coherence_matrix(source) if isinstance(source, FieldEnsemble) else np.asarray(source, dtype=complex)
    if j.shape != (2, 2):
        raise ValueError(f"coherence matrix must be 2x2, got {j.shape}")
    scale = float(np.abs(j).max())
    if scale == 0.0:
        raise ValueError("coherence matrix has zero trace")
    if not np.allclose(j, j.conj().T, atol=1e-9 * scale):
        raise ValueError("coherence matrix must be Hermitian")
    trace = float(j[0, 0].real + j[1, 1].real)
    if trace <= 0.0:
        raise ValueError("coherence matrix has non-positive trace")
    eigvals = np.linalg.eigvalsh(j)
    if eigvals[0] < -1e-9 * trace:
        raise ValueError("coherence matrix must be positive semidefinite")
    lam = np.clip(eigvals, 0.0, None)[::-1]  # descending
    kappas = np.sqrt(lam / trace)
    angle = 0.5 * math.atan2(2.0 * j[0, 1].real, float(j[0, 0].real - j[1, 1].real))
    return SchmidtPair(float(kappas[0]), float(kappas[1])), angle
