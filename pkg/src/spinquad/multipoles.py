"""Spin multipoles, Husimi sphere maps, and extraction from ODMR peak areas.

Quadrupole <S_z^2 - 5/4> and dipole <S_x> are computed either directly from a
density matrix or from eigenstate population variations via closed forms in
the reduced field b = gyro*B/D.  The closed forms below are the exact
per-eigenstate operator averages:

    <Q>_1,3 = +/- (2-b) / (2 sqrt(1-b+b^2)),   <Q>_2,4 = +/- (2+b) / (2 sqrt(1+b+b^2))
    <Sx>_1,3 = 1/2 +/- (2b-1) / (2 sqrt(1-b+b^2)),
    <Sx>_2,4 = -1/2 +/- (2b+1) / (2 sqrt(1+b+b^2)),

(states numbered by descending energy), so that the population form agrees
with the trace form trace(rho*A)/trace(rho) identically.

The inverse problem takes measured ODMR peak areas, models each area as the
secular line intensity generated by the unknown population difference on that
transition, and solves the resulting linear system for the population
variations (GS: three observed lines plus the sum-zero constraint; ES: two
observed lines, the remaining transitions prescribed zero intensity).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hamiltonian import CenterParams, transition_table
from .kinetics import RateParams, steady_state_at
from .rate_model import (
    TransferMatrices,
    odmr_line_intensity,
    solve_population_variations,
    transfer_matrices,
)
from .spin_algebra import make_spin_operators, rotation_operator

GS_TRANSITIONS = ((0, 1), (1, 2), (2, 3))
ES_OBSERVED = ((0, 3), (1, 2))
ES_ZERO = ((0, 1), (0, 2), (1, 3), (2, 3))


class ZeroTrace(ValueError):
    """Density matrix has (numerically) zero trace; averages are undefined."""


class UnnormalizedInput(ValueError):
    """Population variations must sum to zero."""


class SingularExtraction(RuntimeError):
    """The peak-area design matrix is rank-deficient."""


def _trace_average(rho: np.ndarray, op: np.ndarray) -> float:
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise ZeroTrace("trace(rho) is zero")
    return float(np.trace(rho @ op).real / tr)


def quadrupole(rho: np.ndarray) -> float:
    """<S_z^2 - 5/4>: +1 for a pure +/-3/2 doublet, -1 for +/-1/2, 0 when mixed."""
    ops = make_spin_operators()
    q_op = ops.sz @ ops.sz - 1.25 * np.eye(4)
    return _trace_average(rho, q_op)


def dipole_x(rho: np.ndarray) -> float:
    """<S_x>, in [-3/2, 3/2]."""
    return _trace_average(rho, make_spin_operators().sx)


@dataclass(frozen=True)
class HusimiGrid:
    """Husimi quasiprobability P(theta, phi) on a midpoint sphere grid."""

    thetas: np.ndarray  # (n_theta,)
    phis: np.ndarray    # (n_phi,)
    values: np.ndarray  # (n_theta, n_phi), >= 0

    def normalization(self) -> float:
        """(1/pi) * integral of P sin(theta) dtheta dphi; equals trace(rho)."""
        dth = np.pi / self.thetas.size
        dph = 2.0 * np.pi / self.phis.size
        return float(np.sum(self.values * np.sin(self.thetas)[:, None]) * dth * dph / np.pi)


def husimi(rho: np.ndarray, n_theta: int = 91, n_phi: int = 181) -> HusimiGrid:
    """P(theta, phi) = <3/2|_(theta,phi) rho |3/2>_(theta,phi).

    The coherent state is the rotated stretched state
    exp(-i phi S_z) exp(-i theta S_y) |+3/2>_z.
    """
    thetas = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phis = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    mvals = np.array([1.5, 0.5, -0.5, -1.5])
    phase = np.exp(-1j * np.outer(mvals, phis))  # (4, n_phi)
    values = np.empty((n_theta, n_phi))
    for i, th in enumerate(thetas):
        psi_th = rotation_operator(th, 0.0)[:, 0]
        psi = psi_th[:, None] * phase
        values[i] = np.real(np.einsum("ap,ab,bp->p", psi.conj(), rho, psi))
    return HusimiGrid(thetas=thetas, phis=phis, values=values)


def multipoles_from_populations(df, b: float) -> tuple[float, float]:
    """(quadrupole, dipole_x) of a traceless population variation at field b.

    ``df`` are the variations of the four descending-energy eigenstate
    populations; ``b`` is the reduced field gyro*B/D of the level.  These are
    the exact operator averages (see module docstring); they reproduce
    trace-form multipoles of the eigenbasis-diagonal traceless matrix built
    from ``df``.
    """
    df = np.asarray(df, dtype=float)
    if df.shape != (4,):
        raise UnnormalizedInput("df must have exactly 4 entries")
    if abs(df.sum()) > 1e-9 * max(1.0, np.max(np.abs(df))):
        raise UnnormalizedInput(f"df must sum to zero, got {df.sum():.3e}")
    s_minus = np.sqrt(1.0 - b + b * b)
    s_plus = np.sqrt(1.0 + b + b * b)
    quad = (2.0 + b) * (df[1] - df[3]) / (2.0 * s_plus) + (2.0 - b) * (df[0] - df[2]) / (
        2.0 * s_minus
    )
    dip = (
        (1.0 + 2.0 * b) * (df[1] - df[3]) / (2.0 * s_plus)
        + (1.0 - 2.0 * b) * (df[2] - df[0]) / (2.0 * s_minus)
        + (df[0] + df[2] - df[1] - df[3]) / 2.0
    )
    return float(quad), float(dip)


@dataclass(frozen=True)
class PeakAreaSet:
    """Signed ODMR peak areas of one level at one field (arbitrary units).

    Transitions are keyed by 0-based descending-energy eigenstate pairs.
    The GS set must carry exactly the three observed transitions
    (0,1), (1,2), (2,3); the ES set carries (0,3) and (1,2), all other ES
    transitions being prescribed zero intensity.
    """

    level: str
    areas: dict
    field: float

    def __post_init__(self):
        keys = {(min(i, j), max(i, j)) for i, j in self.areas}
        expected = set(GS_TRANSITIONS) if self.level == "g" else set(ES_OBSERVED)
        if keys != expected:
            raise ValueError(
                f"{self.level.upper()} areas must carry exactly {sorted(expected)}, got {sorted(keys)}"
            )


@dataclass(frozen=True)
class ExtractionResult:
    df_g: np.ndarray
    df_e: np.ndarray
    quad_g: float
    quad_e: float
    dip_g: float
    dip_e: float
    residual_g: float
    residual_e: float
    calibrated: bool


def _unit_kick(i: int, j: int, m2: float) -> np.ndarray:
    kick = np.zeros(4)
    kick[i] = m2
    kick[j] = -m2
    return kick


def _design_row(
    rates: RateParams, tm: TransferMatrices, tt, level: str, i: int, j: int
) -> np.ndarray:
    """Row r with r @ df = modeled area of transition (i, j)."""
    _, m2 = tt.lookup(i, j)
    coeff = odmr_line_intensity(rates, tm, _unit_kick(i, j, m2), level)
    row = np.zeros(4)
    row[j] = coeff
    row[i] = -coeff
    return row


def _solve_level(
    rates: RateParams,
    tm: TransferMatrices,
    tt,
    level: str,
    observed: dict,
    zero_transitions=(),
) -> tuple[np.ndarray, float]:
    rows, rhs = [], []
    for (i, j), area in sorted(observed.items()):
        rows.append(_design_row(rates, tm, tt, level, i, j))
        rhs.append(area)
    for i, j in zero_transitions:
        rows.append(_design_row(rates, tm, tt, level, i, j))
        rhs.append(0.0)
    rows.append(np.ones(4))
    rhs.append(0.0)
    a = np.array(rows)
    b = np.array(rhs)
    if np.linalg.matrix_rank(a, tol=1e-12 * max(np.max(np.abs(a)), 1e-300)) < 4:
        raise SingularExtraction(
            f"{level.upper()} design matrix is rank-deficient (degenerate matrix elements)"
        )
    df, _, _, _ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ df - b))
    return df, residual


def model_peak_areas(
    center: CenterParams, rates: RateParams, bx: float
) -> tuple[PeakAreaSet, PeakAreaSet]:
    """Forward model: the peak areas the secular model predicts at bx.

    The ES population is taken from the full kinetic model's steady state.
    """
    tm = transfer_matrices(center, bx)
    n_e = steady_state_at(center, rates, bx).n_e
    pv = solve_population_variations(rates, tm, n_e)
    out = []
    for level, trans, df in (("g", GS_TRANSITIONS, pv.df_g), ("e", ES_OBSERVED, pv.df_e)):
        tt = transition_table(level, center, bx)
        areas = {}
        for i, j in trans:
            _, m2 = tt.lookup(i, j)
            kick = m2 * (df[j] - df[i]) * np.array(
                [1.0 if k == i else -1.0 if k == j else 0.0 for k in range(4)]
            )
            areas[(i, j)] = odmr_line_intensity(rates, tm, kick, level)
        out.append(PeakAreaSet(level=level, areas=areas, field=bx))
    return out[0], out[1]


def extract_from_peak_areas(
    gs: PeakAreaSet,
    es: PeakAreaSet,
    center: CenterParams,
    rates: RateParams,
    bx: float,
    calibrated: bool = False,
) -> ExtractionResult:
    """Recover population variations (and multipoles) from ODMR peak areas.

    The recovered df carry the input areas' arbitrary unit.  In calibrated
    mode the scale is fixed by matching the model-predicted total GS area at
    the same parameters, and the multipoles are normalized by the model's
    level populations so they are comparable to the density-matrix values.
    Warns below 2 mT, where the GS peaks overlap in practice.
    """
    if gs.level != "g" or es.level != "e":
        raise ValueError("pass the GS set first and the ES set second")
    if bx < 2.0:
        warnings.warn(
            "below 2 mT the GS transitions overlap spectrally; extracted areas "
            "are unreliable there",
            stacklevel=2,
        )
    tm = transfer_matrices(center, bx)
    tt_g = transition_table("g", center, bx)
    tt_e = transition_table("e", center, bx)

    df_g, res_g = _solve_level(rates, tm, tt_g, "g", gs.areas)
    df_e, res_e = _solve_level(rates, tm, tt_e, "e", es.areas, zero_transitions=ES_ZERO)

    n_g = n_e = 1.0
    if calibrated:
        state = steady_state_at(center, rates, bx)
        n_g, n_e = state.n_g, state.n_e
        model_gs, _ = model_peak_areas(center, rates, bx)
        total_model = sum(abs(v) for v in model_gs.areas.values())
        total_input = sum(abs(v) for v in gs.areas.values())
        scale = total_model / total_input if total_input > 0 else 0.0
        df_g = df_g * scale
        df_e = df_e * scale

    b_g = center.gyro * bx / center.d_g
    b_e = center.gyro_of("e") * bx / center.d_e
    quad_g, dip_g = multipoles_from_populations(df_g, b_g)
    quad_e, dip_e = multipoles_from_populations(df_e, b_e)
    if calibrated:
        quad_g, dip_g = quad_g / n_g, dip_g / n_g
        quad_e, dip_e = quad_e / n_e, dip_e / n_e

    return ExtractionResult(
        df_g=df_g,
        df_e=df_e,
        quad_g=quad_g,
        quad_e=quad_e,
        dip_g=dip_g,
        dip_e=dip_e,
        residual_g=res_g,
        residual_e=res_e,
        calibrated=calibrated,
    )


def peak_areas_from_json(doc: dict) -> tuple[PeakAreaSet, PeakAreaSet, float]:
    """Parse the wire format {"field_mT": x, "gs": {"1-2": a, ...}, "es": {...}}.

    Wire transition keys are 1-based state pairs; they map to the 0-based
    indices used everywhere else.
    """
    try:
        field = float(doc["field_mT"])
        gs_doc = doc["gs"]
        es_doc = doc["es"]
    except KeyError as err:
        raise ValueError(f"peak-area document missing key {err}") from None

    def parse(level: str, block: dict) -> PeakAreaSet:
        areas = {}
        for key, val in block.items():
            i_str, j_str = key.split("-")
            areas[(int(i_str) - 1, int(j_str) - 1)] = float(val)
        return PeakAreaSet(level=level, areas=areas, field=field)

    return parse("g", gs_doc), parse("e", es_doc), field
