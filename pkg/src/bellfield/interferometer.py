"""Virtual Mach-Zehnder measurement of joint polarization/function projections.

The protocol: split the source 50:50 into a primary test beam and an
auxiliary beam; pass the auxiliary through a "stripping" polarizer whose
angle is chosen so that exactly one rotated function-basis process survives
in it; analyze both arms with a polarizer at the same angle; recombine on a
second 50:50 splitter and read whole-beam intensities at one detector with
the arms shuttered in turn.  The joint projection is then reconstructed
from intensities alone:

    P = (2*I_out - I_aux - I_arm)^2 / (4 * I_total * I_aux)

where I_arm and I_aux are the pre-combiner arm intensities (twice the
shuttered detector readings), I_out is the both-arms-open reading, and
I_total is the test-beam intensity.  The total input intensity is monitored
before the first splitter; the test beam carries exactly half of it.  The
reconstruction is invariant under a common rescale of all four intensities.

The same protocol code drives two source representations: the exact 2x2
algebraic beam (the oracle) and a sample-backed beam built from a
:class:`~bellfield.ensemble.FieldEnsemble` (the simulated experiment).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ensemble import FieldEnsemble
from .field import (
    BeamState,
    DegenerateConfigurationError,
    SchmidtPair,
    project_pol,
    schmidt_beam,
)

#: Fraction of the source intensity below which the auxiliary-arm reading is
#: treated as extinguished and the reconstruction as degenerate.
_EXTINCTION_FRACTION = 1e-14


@dataclass(frozen=True)
class ShutterState:
    """Which interferometer arms are open."""

    arm_primary_open: bool = True
    arm_auxiliary_open: bool = True


BOTH_OPEN = ShutterState(True, True)
PRIMARY_ONLY = ShutterState(True, False)
AUXILIARY_ONLY = ShutterState(False, True)


@dataclass(frozen=True)
class DetectorModel:
    """Calorimetric detector with multiplicative Gaussian reading noise."""

    relative_noise: float = 0.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 <= self.relative_noise < 0.1):
            raise ValueError("relative_noise must be in [0, 0.1)")

    def read(self, intensity: float, rng: np.random.Generator | None) -> float:
        if not self.enabled or self.relative_noise == 0.0:
            return intensity
        if rng is None:
            raise ValueError("a noisy detector requires a noise_rng")
        return intensity * (1.0 + self.relative_noise * rng.standard_normal())


IDEAL_DETECTOR = DetectorModel(0.0)


@dataclass(frozen=True)
class ProjectionQuad:
    """The four joint projections P_jk(a, b); convex weights summing to 1."""

    p11: float
    p12: float
    p21: float
    p22: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p11, self.p12, self.p21, self.p22])

    @property
    def total(self) -> float:
        return self.p11 + self.p12 + self.p21 + self.p22


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """One joint-projection measurement with its raw intensity readings.

    Intensities are the reconstruction inputs: ``i_total`` the test-beam
    intensity, ``i_arm``/``i_aux`` the pre-combiner arm intensities, and
    ``i_out`` the both-arms-open output.  ``p_batches`` holds noise-free
    per-batch reconstructions for sampling-error estimation (Monte Carlo
    sources only).  ``filled_from_completeness`` marks a degenerate setting
    whose value was recovered from the other three projections.
    """

    pol_angle: float
    fun_angle: float
    j: int
    k: int
    i_total: float
    i_arm: float
    i_aux: float
    i_out: float
    p: float
    p_stderr: float = 0.0
    p_batches: np.ndarray | None = None
    filled_from_completeness: bool = False


@dataclass(frozen=True, eq=False)
class QuadMeasurement:
    """A measured quad plus its per-projection records and batch statistics."""

    quad: ProjectionQuad
    records: tuple[MeasurementRecord, ...]
    batch_quads: np.ndarray | None = None  # (n_batches, 4)


def split(beam: BeamState) -> tuple[BeamState, BeamState]:
    """50:50 beam splitter: primary test beam and auxiliary beam.

    Each output carries half the input intensity and inherits the input's
    statistical structure; the auxiliary picks up the splitter's i.
    """
    half = beam.ref_intensity / 2.0
    primary = replace(beam, ref_intensity=half)
    auxiliary = replace(beam, coeffs=1j * beam.coeffs, ref_intensity=half)
    return primary, auxiliary


def stripping_angle(fun_angle: float, schmidt: SchmidtPair) -> float:
    """Polarizer angle that strips the second rotated function process.

    Solves tan(s) = (kappa1 / kappa2) * tan(b) on the branch containing b,
    via atan2(kappa1*sin b, kappa2*cos b); continuous in b up to the usual
    [-pi, pi) wrap.  A separable beam (kappa2 = 0) with cos b = 0 leaves the
    angle undefined.
    """
    if schmidt.kappa2 == 0.0 and abs(math.cos(fun_angle)) < 1e-12:
        raise DegenerateConfigurationError(
            "stripping angle undefined for kappa2 = 0 at an odd multiple of pi/2"
        )
    y = schmidt.kappa1 * math.sin(fun_angle)
    x = schmidt.kappa2 * math.cos(fun_angle)
    return math.atan2(y, x)


def strip(aux: BeamState, fun_angle: float, schmidt: SchmidtPair) -> BeamState:
    """Apply the stripping polarizer for function-basis angle ``fun_angle``.

    For an auxiliary beam in Schmidt form the transmitted beam's function
    content is proportional to the first rotated basis process alone, with
    intensity I_aux * (kappa1 cos b cos s + kappa2 sin b sin s)^2.
    """
    return project_pol(aux, stripping_angle(fun_angle, schmidt))


def recombine(
    primary: BeamState,
    auxiliary: BeamState,
    shutters: ShutterState = BOTH_OPEN,
    phase_error: float = 0.0,
) -> BeamState:
    """Second 50:50 splitter with shutter gating.

    Both arms open: output coefficients (aux + i * e^{i*phase_error} * primary)
    / sqrt(2); a closed shutter removes that arm; both closed gives the zero
    beam.  ``phase_error`` models residual path-length mismatch and defaults
    to the aligned interferometer.
    """
    if primary.coeffs.shape != auxiliary.coeffs.shape:
        raise ValueError("arms must share the same content dimension")
    if not math.isclose(primary.ref_intensity, auxiliary.ref_intensity, rel_tol=1e-12):
        raise ValueError("arms must share the same intensity convention")
    if not (
        math.isclose(primary.pol_frame, auxiliary.pol_frame, abs_tol=1e-12)
        and math.isclose(primary.fun_frame, auxiliary.fun_frame, abs_tol=1e-12)
    ):
        raise ValueError("arms must be expressed in the same frames")
    pri = primary.global_phase * primary.coeffs
    aux = auxiliary.global_phase * auxiliary.coeffs
    if shutters.arm_primary_open and shutters.arm_auxiliary_open:
        out = (aux + 1j * np.exp(1j * phase_error) * pri) / math.sqrt(2.0)
    elif shutters.arm_primary_open:
        out = pri / math.sqrt(2.0)
    elif shutters.arm_auxiliary_open:
        out = aux / math.sqrt(2.0)
    else:
        out = np.zeros_like(pri)
    return replace(primary, coeffs=out, global_phase=1.0 + 0.0j)


def beam_from_ensemble(e: FieldEnsemble) -> BeamState:
    """Sample-backed beam whose columns are the scaled field samples.

    Columns are ordered realization-major and scaled by 1/sqrt(I * N) so the
    beam's intensity matches the ensemble's empirical intensity.
    """
    n = e.params.total_samples
    scale = 1.0 / math.sqrt(e.intensity * n)
    coeffs = np.stack([e.ex.ravel(), e.ey.ravel()]) * scale
    return BeamState(coeffs, ref_intensity=e.intensity)


def _batch_starts(e: FieldEnsemble, n_batches: int) -> np.ndarray:
    k = min(n_batches, e.params.n_realizations)
    counts = [len(c) for c in np.array_split(np.arange(e.params.n_realizations), k)]
    starts = np.concatenate([[0], np.cumsum(counts[:-1])])
    return starts * e.params.samples_per_realization


def _as_beam(
    source: BeamState | FieldEnsemble, n_batches: int
) -> tuple[BeamState, np.ndarray | None]:
    if isinstance(source, FieldEnsemble):
        return beam_from_ensemble(source), _batch_starts(source, n_batches)
    return source, None


def measure_joint_projection(
    source: BeamState | FieldEnsemble,
    pol_angle: float,
    fun_angle: float,
    j: int = 1,
    k: int = 1,
    *,
    schmidt: SchmidtPair,
    detector: DetectorModel = IDEAL_DETECTOR,
    phase_error: float = 0.0,
    noise_rng: np.random.Generator | None = None,
    n_batches: int = 32,
) -> MeasurementRecord:
    """Run the full protocol once and reconstruct P_jk(a, b) from intensities.

    ``schmidt`` sets the stripping angle; pass the polarimetry estimate to
    mirror the real calibration chain, or the generator values for the ideal
    protocol.  Projections with j, k = 2 are obtained by rotating the
    analyzer and stripping angles a quarter turn.  Raises
    :class:`DegenerateConfigurationError` when the stripped auxiliary beam is
    extinguished by the analyzer (the reconstruction divides by I_aux).
    """
    if j not in (1, 2) or k not in (1, 2):
        raise ValueError("projection indices j, k must be 1 or 2")
    beam, batch_starts = _as_beam(source, n_batches)
    pol_axis = pol_angle + (j - 1) * math.pi / 2.0
    fun_axis = fun_angle + (k - 1) * math.pi / 2.0

    primary, auxiliary = split(beam)
    primary_a = project_pol(primary, pol_axis)
    aux_a = project_pol(strip(auxiliary, fun_axis, schmidt), pol_axis)

    if aux_a.intensity <= _EXTINCTION_FRACTION * beam.intensity:
        raise DegenerateConfigurationError(
            f"auxiliary arm extinguished at pol_angle={pol_axis:.6g}, "
            f"fun_angle={fun_axis:.6g}: joint projection not reconstructible"
        )

    out_both = recombine(primary_a, aux_a, BOTH_OPEN, phase_error)
    out_pri = recombine(primary_a, aux_a, PRIMARY_ONLY, phase_error)
    out_aux = recombine(primary_a, aux_a, AUXILIARY_ONLY, phase_error)

    # Detector readings (one per shutter configuration, independent noise).
    i_total = detector.read(beam.intensity, noise_rng) / 2.0
    i_arm = 2.0 * detector.read(out_pri.intensity, noise_rng)
    i_aux = 2.0 * detector.read(out_aux.intensity, noise_rng)
    i_out = detector.read(out_both.intensity, noise_rng)
    p = (2.0 * i_out - i_aux - i_arm) ** 2 / (4.0 * i_total * i_aux)

    p_batches = None
    p_stderr = 0.0
    if batch_starts is not None:
        p_batches = _batch_reconstructions(
            batch_starts, beam, primary_a, aux_a, out_both
        )
        nb = len(p_batches)
        if nb > 1:
            p_stderr = float(np.std(p_batches, ddof=1)) / math.sqrt(nb)

    return MeasurementRecord(
        pol_angle=pol_angle,
        fun_angle=fun_angle,
        j=j,
        k=k,
        i_total=i_total,
        i_arm=i_arm,
        i_aux=i_aux,
        i_out=i_out,
        p=float(p),
        p_stderr=p_stderr,
        p_batches=p_batches,
    )


def _batch_reconstructions(
    starts: np.ndarray,
    beam: BeamState,
    primary_a: BeamState,
    aux_a: BeamState,
    out_both: BeamState,
) -> np.ndarray:
    # Per-batch column sums stand in for intensities; the reconstruction is
    # invariant under the common scale factor each batch carries.
    src = np.add.reduceat(beam.intensity_profile(), starts)
    arm = np.add.reduceat(primary_a.intensity_profile(), starts)
    aux = np.add.reduceat(aux_a.intensity_profile(), starts)
    out = np.add.reduceat(out_both.intensity_profile(), starts)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (2.0 * out - aux - arm) ** 2 / (4.0 * (src / 2.0) * aux)
    return p[np.isfinite(p)]


_QUAD_INDICES = ((1, 1), (1, 2), (2, 1), (2, 2))


def measure_quad(
    source: BeamState | FieldEnsemble,
    pol_angle: float,
    fun_angle: float,
    *,
    schmidt: SchmidtPair,
    detector: DetectorModel = IDEAL_DETECTOR,
    phase_error: float = 0.0,
    noise_rng: np.random.Generator | None = None,
    n_batches: int = 32,
) -> QuadMeasurement:
    """Measure all four joint projections at one analyzer setting.

    The four runs share the source (one physical run per setting, analyzers
    rotated within it).  Settings where the analyzer blocks the stripped
    reference beam leave individual projections unmeasurable; those are
    recovered from completeness (the quad sums to one).  A single blocked
    projection takes the full residual.  Blocked projections can also come
    in complementary pairs, (1,1) with (2,2) or (1,2) with (2,1), and only
    at settings where symmetry makes the two blocked values identical, so
    the pair shares the residual equally.  Any other combination raises.
    """
    records: dict[tuple[int, int], MeasurementRecord | None] = {}
    for jj, kk in _QUAD_INDICES:
        try:
            records[(jj, kk)] = measure_joint_projection(
                source,
                pol_angle,
                fun_angle,
                jj,
                kk,
                schmidt=schmidt,
                detector=detector,
                phase_error=phase_error,
                noise_rng=noise_rng,
                n_batches=n_batches,
            )
        except DegenerateConfigurationError:
            records[(jj, kk)] = None

    missing = [idx for idx, rec in records.items() if rec is None]
    complementary = (
        len(missing) == 2 and missing[0] == (3 - missing[1][0], 3 - missing[1][1])
    )
    if len(missing) > 2 or (len(missing) == 2 and not complementary):
        raise DegenerateConfigurationError(
            f"{len(missing)} joint projections are jointly unmeasurable at "
            f"pol_angle={pol_angle:.6g}, fun_angle={fun_angle:.6g}"
        )
    if missing:
        filled = _fill_from_completeness(missing, pol_angle, fun_angle, records)
        for idx, rec in zip(missing, filled):
            records[idx] = rec

    recs = tuple(records[idx] for idx in _QUAD_INDICES)
    quad = ProjectionQuad(*(r.p for r in recs))
    batch_quads = None
    if all(r.p_batches is not None for r in recs):
        lengths = {len(r.p_batches) for r in recs}
        if len(lengths) == 1:
            batch_quads = np.stack([r.p_batches for r in recs], axis=1)
    return QuadMeasurement(quad=quad, records=recs, batch_quads=batch_quads)


def _fill_from_completeness(
    missing: list[tuple[int, int]],
    pol_angle: float,
    fun_angle: float,
    records: dict[tuple[int, int], MeasurementRecord | None],
) -> list[MeasurementRecord]:
    measured = [records[i] for i in _QUAD_INDICES if records[i] is not None]
    share = 1.0 / len(missing)
    p = share * (1.0 - sum(r.p for r in measured))
    stderr = share * math.sqrt(sum(r.p_stderr**2 for r in measured))
    batches = None
    if measured and all(r.p_batches is not None for r in measured):
        lengths = {len(r.p_batches) for r in measured}
        if len(lengths) == 1:
            batches = share * (1.0 - np.sum([r.p_batches for r in measured], axis=0))
    return [
        MeasurementRecord(
            pol_angle=pol_angle,
            fun_angle=fun_angle,
            j=idx[0],
            k=idx[1],
            i_total=math.nan,
            i_arm=math.nan,
            i_aux=0.0,
            i_out=math.nan,
            p=float(p),
            p_stderr=stderr,
            p_batches=batches,
            filled_from_completeness=True,
        )
        for idx in missing
    ]


def direct_joint_projection(
    schmidt: SchmidtPair, pol_angle: float, fun_angle: float, j: int = 1, k: int = 1
) -> float:
    """Closed-form joint projection of the Schmidt-form beam (the oracle).

    Evaluates |<f_k^b| <u_j^a| e>|^2 directly in the exact algebra, with no
    interferometer involved.
    """
    beam = schmidt_beam(schmidt, 1.0)
    ua = pol_angle + (j - 1) * math.pi / 2.0
    fb = fun_angle + (k - 1) * math.pi / 2.0
    from .field import basis_vector  # deferred to keep namespace tight

    amp = basis_vector(1, ua) @ beam.coeffs @ basis_vector(1, fb)
    return float(abs(amp) ** 2)


def direct_quad(
    schmidt: SchmidtPair, pol_angle: float, fun_angle: float
) -> ProjectionQuad:
    """All four closed-form joint projections at one setting."""
    return ProjectionQuad(
        *(direct_joint_projection(schmidt, pol_angle, fun_angle, j, k)
          for j, k in _QUAD_INDICES)
    )
