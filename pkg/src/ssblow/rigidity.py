"""Computational verification of the profile-triviality arguments.

Covers the characteristics/homogeneity classification of the transport
equations, maximum-principle residual scans on synthetic fields, the
additive-separability step, the cutoff integration-by-parts identity,
the harmonic stream-function endgame, and the self-similar window
classifier.  Everything here is a numerical diagnostic, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gridio import ScalarField2D, gradient, trapezoid_2d

SCHEMA = "rigidity/1"


class BoundaryViolation(ValueError):
    """d_Z Psi does not vanish on the R = 0 boundary within tolerance."""


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class HalfPlaneGrid:
    """Uniform truncation of the left half-plane {R <= 0}."""

    R_min: float = -40.0
    R_max: float = 0.0
    Z_min: float = -40.0
    Z_max: float = 40.0
    nR: int = 401
    nZ: int = 801

    def __post_init__(self):
        if not (self.R_min < self.R_max <= 0.0):
            raise ValueError("need R_min < R_max <= 0")
        if not (self.Z_min < self.Z_max):
            raise ValueError("need Z_min < Z_max")
        if self.nR < 3 or self.nZ < 3:
            raise ValueError("need at least 3 points per axis")

    @property
    def hR(self) -> float:
        return (self.R_max - self.R_min) / (self.nR - 1)

    @property
    def hZ(self) -> float:
        return (self.Z_max - self.Z_min) / (self.nZ - 1)

    @property
    def has_boundary_column(self) -> bool:
        return self.R_max == 0.0

    def axes(self):
        return (
            np.linspace(self.R_min, self.R_max, self.nR),
            np.linspace(self.Z_min, self.Z_max, self.nZ),
        )

    def mesh(self):
        R, Z = self.axes()
        return np.meshgrid(R, Z, indexing="ij")

    def field(self, fn: Callable) -> ScalarField2D:
        R, Z = self.mesh()
        return ScalarField2D(np.asarray(fn(R, Z), dtype=float),
                             self.hR, self.hZ, self.R_min, self.Z_min)


@dataclass(frozen=True)
class TransportEq:
    """c F + gamma Y.grad F + (perp-grad Psi).grad F = source."""

    c: float
    gamma: float
    drift_psi: Optional[ScalarField2D] = None
    source: Optional[ScalarField2D] = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


# ---------------------------------------------------------------------------
# homogeneity / triviality classification


def _coefficient(gamma: Fraction, k: int, field: str) -> Fraction:
    gamma = Fraction(gamma)
    if field == "U":
        return 1 - gamma / 2 - k * gamma
    if field == "Omega":
        return 1 - k * gamma
    raise ValueError(f"no transport coefficient for field {field!r}")


def homogeneity_degree(gamma, k: int, field: str):
    """Degree d = -c/gamma of ray-homogeneous kernel solutions.

    U-type: k + 1/2 - 1/gamma; Omega-type: k - 1/gamma.
    """
    if isinstance(gamma, float):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if field == "U":
            return k + 0.5 - 1.0 / gamma
        if field == "Omega":
            return k - 1.0 / gamma
        raise ValueError(f"no transport coefficient for field {field!r}")
    g = Fraction(gamma)
    if g <= 0:
        raise ValueError("gamma must be positive")
    return -_coefficient(g, k, field) / g


@dataclass(frozen=True)
class TrivialityVerdict:
    case: str  # "nonzero_coefficient" | "zero_coefficient_ray_constant"
    degree: float
    coefficient: float
    conclusion: str  # "trivial_under_decay" | "inconclusive"
    field: str = ""
    k: int = 0
    gamma: float = 0.0

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "case": self.case,
            "degree": self.degree,
            "coefficient": self.coefficient,
            "conclusion": self.conclusion,
            "field": self.field,
            "k": self.k,
            "gamma": self.gamma,
        }


def classify_triviality(gamma, k: int, field: str,
                        decay_at_infinity: bool = True) -> TrivialityVerdict:
    """Ray classification of c F + gamma Y.grad F = 0 on the half-plane.

    Nonzero c: homogeneous nontrivial solutions blow up along rays either
    at infinity (d > 0) or at the origin (d < 0), so decay plus
    continuity forces F = 0.  Zero c: F is constant along rays and decay
    forces F = 0.  Without the decay hypothesis nothing follows.
    """
    exact = not isinstance(gamma, float)
    g = Fraction(gamma) if exact else gamma
    if (g if exact else float(g)) <= 0:
        raise ValueError("gamma must be positive")
    if exact:
        c = _coefficient(g, k, field)
        d = -c / g
        czero = c == 0
    else:
        c = (1 - g / 2 - k * g) if field == "U" else (1 - k * g)
        d = -c / g
        czero = abs(c) < 1e-12
    case = "zero_coefficient_ray_constant" if czero else "nonzero_coefficient"
    conclusion = "trivial_under_decay" if decay_at_infinity else "inconclusive"
    return TrivialityVerdict(case, float(d), float(c), conclusion,
                             field, k, float(g))


def ray_solution(gamma: float, c: float, trace: Callable, Y) -> float:
    """|Y|^(-c/gamma) * trace(Y/|Y|): the general kernel along rays."""
    R, Z = Y
    rad = math.hypot(R, Z)
    if rad == 0.0:
        if c / gamma > 0:
            raise ValueError("ray solution singular at the origin for c/gamma > 0")
        if c == 0:
            raise ValueError("trace direction undefined at the origin")
        return 0.0
    return rad ** (-c / gamma) * trace((R / rad, Z / rad))


def ray_field(gamma: float, c: float, trace: Callable,
              grid: HalfPlaneGrid) -> ScalarField2D:
    R, Z = grid.mesh()
    rad = np.hypot(R, Z)
    rad = np.where(rad == 0.0, np.nan, rad)
    vals = rad ** (-c / gamma) * trace((R / rad, Z / rad))
    vals = np.nan_to_num(vals, nan=0.0)
    return ScalarField2D(vals, grid.hR, grid.hZ, grid.R_min, grid.Z_min)


# ---------------------------------------------------------------------------
# separability


def separability_check(U2: ScalarField2D):
    """Least-squares additive split U^2 ~ f(Z) + g(R), g mean-zero.

    Returns (f, g, residual) with residual the max absolute deviation of
    the two-way additive fit (axis 0 = R, axis 1 = Z).
    """
    M = U2.values
    m = M.mean()
    g = M.mean(axis=1) - m  # over R, mean-zero
    f = M.mean(axis=0)      # over Z, absorbs the overall level
    fit = g[:, None] + f[None, :]
    residual = float(np.max(np.abs(M - fit)))
    return f, g, residual


# ---------------------------------------------------------------------------
# maximum-principle scan


@dataclass(frozen=True)
class ExtremumReport:
    location: tuple  # (R, Z)
    value: float
    on_boundary: bool
    transport_residual: float
    dZ_at_point: float
    drift_normal: float  # gamma R - d_Z Psi at the point


@dataclass(frozen=True)
class MaxPrincipleReport:
    nonzero_extremum: bool
    maximum: Optional[ExtremumReport] = None
    minimum: Optional[ExtremumReport] = None

    def to_json(self) -> dict:
        def conv(e):
            if e is None:
                return None
            return {
                "location": list(e.location),
                "value": e.value,
                "on_boundary": e.on_boundary,
                "transport_residual": e.transport_residual,
                "dZ_at_point": e.dZ_at_point,
                "drift_normal": e.drift_normal,
            }

        return {
            "schema": SCHEMA,
            "nonzero_extremum": self.nonzero_extremum,
            "maximum": conv(self.maximum),
            "minimum": conv(self.minimum),
        }


def max_principle_scan(F: ScalarField2D, Psi: ScalarField2D, gamma: float,
                       c: float, bc_tol: float = 1e-6) -> MaxPrincipleReport:
    """Locate the grid extrema of F and evaluate the transport residual
    c F + gamma Y.grad F + (perp-grad Psi).grad F there.

    At an interior stationary point the residual reduces to c*F; at a
    boundary extremum (R = 0) the tangential derivative d_Z F must vanish
    and the normal drift gamma R - d_Z Psi vanishes by the boundary
    condition on Psi.
    """
    psi_R, psi_Z = gradient(Psi)
    if float(np.max(np.abs(psi_Z[-1, :]))) > bc_tol:
        raise BoundaryViolation("d_Z Psi != 0 on the R = 0 column")
    vals = F.values
    if float(np.max(np.abs(vals))) == 0.0:
        return MaxPrincipleReport(nonzero_extremum=False)
    F_R, F_Z = gradient(F)
    Rax = F.axis1()
    Zax = F.axis2()

    def report(idx) -> ExtremumReport:
        i, j = idx
        R, Z = Rax[i], Zax[j]
        resid = (c * vals[i, j]
                 + gamma * (R * F_R[i, j] + Z * F_Z[i, j])
                 - psi_Z[i, j] * F_R[i, j] + psi_R[i, j] * F_Z[i, j])
        return ExtremumReport(
            (float(R), float(Z)), float(vals[i, j]),
            on_boundary=(i == vals.shape[0] - 1),
            transport_residual=float(resid),
            dZ_at_point=float(F_Z[i, j]),
            drift_normal=float(gamma * R - psi_Z[i, j]),
        )

    imax = np.unravel_index(np.argmax(vals), vals.shape)
    imin = np.unravel_index(np.argmin(vals), vals.shape)
    return MaxPrincipleReport(True, report(imax), report(imin))


# ---------------------------------------------------------------------------
# cutoff and integration by parts


def smooth_cutoff(t: np.ndarray) -> np.ndarray:
    """Quintic-smoothstep cutoff: 1 on [0,1], 0 on [2,inf), C^2 across."""
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def smooth_cutoff_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    s = t - 1.0
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, -30.0 * s ** 2 * (1.0 - s) ** 2, 0.0)


@dataclass(frozen=True)
class IbpResult:
    lhs: float
    rhs: float
    boundary_term: float
    cutoff_term: float
    transport_term: float

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "boundary_term": self.boundary_term,
            "cutoff_term": self.cutoff_term,
            "transport_term": self.transport_term,
        }


def ibp_identity_check(U: ScalarField2D, Psi: ScalarField2D, gamma: float,
                       p: int = 2, rho: float = 10.0,
                       dU=None, dPsi=None,
                       bc_tol: float = 1e-8) -> IbpResult:
    """Cutoff integration-by-parts identity on the half-plane.

    With b = gamma Y + perp-grad Psi and sigma_rho the scaled cutoff,

        2 gamma int U^p sigma_rho
            = - int U^p grad sigma_rho . b  -  int sigma_rho b . grad U^p
              + boundary flux at R = 0,

    which is the divergence theorem for U^p sigma_rho b; the transport
    integral drops exactly when U solves b . grad U = 0, recovering the
    two-sided display used in the triviality proof.  Returns lhs, rhs
    (sum of the two volume integrals) and the R = 0 boundary flux, which
    is zero when d_Z Psi vanishes there.

    dU/dPsi may supply analytic gradients as (d/dR, d/dZ) array pairs;
    otherwise centered differences are used and the achievable tolerance
    degrades to O(h^2).
    """
    if p < 2 or p % 2:
        raise ValueError("p must be a positive even integer")
    hR, hZ = U.h1, U.h2
    R, Z = np.meshgrid(U.axis1(), U.axis2(), indexing="ij")
    rad = np.hypot(R, Z)

    psi_R, psi_Z = dPsi if dPsi is not None else gradient(Psi)
    bc_resid = float(np.max(np.abs(psi_Z[-1, :])))
    if bc_resid > bc_tol:
        raise BoundaryViolation(
            f"max |d_Z Psi| on R=0 column is {bc_resid:.3e} > {bc_tol:.3e}")

    U_R, U_Z = dU if dU is not None else gradient(U)

    sigma = smooth_cutoff(rad / rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        sfac = smooth_cutoff_deriv(rad / rho) / (rho * rad)
    sfac = np.nan_to_num(sfac, nan=0.0, posinf=0.0, neginf=0.0)
    dsig_R = sfac * R
    dsig_Z = sfac * Z

    bR = gamma * R - psi_Z
    bZ = gamma * Z + psi_R
    Up = U.values ** p
    gradUp_R = p * U.values ** (p - 1) * U_R
    gradUp_Z = p * U.values ** (p - 1) * U_Z

    lhs = 2.0 * gamma * trapezoid_2d(Up * sigma, hR, hZ)
    cutoff_term = -trapezoid_2d(Up * (dsig_R * bR + dsig_Z * bZ), hR, hZ)
    transport_term = trapezoid_2d(sigma * (bR * gradUp_R + bZ * gradUp_Z), hR, hZ)
    rhs = cutoff_term - transport_term

    # outward normal (1, 0) on the R = 0 column; gamma*R vanishes there
    flux = (Up[-1, :] * sigma[-1, :] * (gamma * R[-1, :] - psi_Z[-1, :]))
    boundary = float(np.trapezoid(flux, dx=hZ))
    return IbpResult(float(lhs), float(rhs), boundary,
                     float(cutoff_term), float(-transport_term))


# ---------------------------------------------------------------------------
# harmonic stream-function endgame


@dataclass(frozen=True)
class PsiEndgameReport:
    a: float
    b: float
    fit_residual: float
    bc_residual: float
    solver_residual: float
    dZ_interior: tuple = ()  # ((half_width, max |d_Z Psi| in the core), ...)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "a": self.a,
            "b": self.b,
            "fit_residual": self.fit_residual,
            "bc_residual": self.bc_residual,
            "solver_residual": self.solver_residual,
            "dZ_interior": [list(x) for x in self.dZ_interior],
        }


def _laplace_solve(grid: HalfPlaneGrid, boundary: Callable) -> ScalarField2D:
    """Dirichlet Laplace solve on the truncated half-plane."""
    nR, nZ = grid.nR, grid.nZ
    hR, hZ = grid.hR, grid.hZ
    R, Z = grid.mesh()
    psi = np.asarray(boundary(R, Z), dtype=float).copy()

    ni, nj = nR - 2, nZ - 2
    main = -2.0 / hR ** 2 - 2.0 / hZ ** 2
    Ar = sp.diags([np.full(ni - 1, 1.0 / hR ** 2)] * 2, [-1, 1],
                  shape=(ni, ni))
    Az = sp.diags([np.full(nj - 1, 1.0 / hZ ** 2)] * 2, [-1, 1],
                  shape=(nj, nj))
    L = sp.kron(sp.eye(ni), Az) + sp.kron(Ar, sp.eye(nj)) \
        + main * sp.eye(ni * nj)
    rhs = np.zeros((ni, nj))
    rhs[0, :] -= psi[0, 1:-1] / hR ** 2
    rhs[-1, :] -= psi[-1, 1:-1] / hR ** 2
    rhs[:, 0] -= psi[1:-1, 0] / hZ ** 2
    rhs[:, -1] -= psi[1:-1, -1] / hZ ** 2
    sol = spla.spsolve(L.tocsc(), rhs.ravel())
    interior = sol.reshape(ni, nj)
    out = psi.copy()
    out[1:-1, 1:-1] = interior
    return ScalarField2D(out, hR, hZ, grid.R_min, grid.Z_min)


def psi_endgame(omega_is_zero: bool, grid: HalfPlaneGrid,
                far_field: Callable, bc_tol: float = 1e-8,
                radii: Sequence[float] = ()) -> PsiEndgameReport:
    """Solve Laplace Psi = 0 with boundary data and fit Psi ~ a R + b.

    Requires omega_is_zero (the elliptic equation must be homogeneous).
    Boundary data with d_Z != 0 on the R = 0 edge is rejected.  When
    `radii` are given the solve is repeated on proportionally scaled
    truncations and the interior max |d_Z Psi| on a fixed core is
    reported as a decay consistency check.
    """
    if not omega_is_zero:
        raise ValueError("endgame applies only once the vorticity profile is zero")
    Zb = np.linspace(grid.Z_min, grid.Z_max, grid.nZ)
    edge = np.asarray(far_field(np.zeros_like(Zb), Zb), dtype=float)
    bc_residual = float(np.max(np.abs(np.diff(edge) / grid.hZ)))
    if bc_residual > max(bc_tol, 1e-12 * (1 + np.max(np.abs(edge)))):
        raise BoundaryViolation(
            f"far-field data varies along R=0 (max |d_Z| ~ {bc_residual:.3e})")

    psi = _laplace_solve(grid, far_field)
    lap = _discrete_laplacian(psi)
    solver_residual = float(np.max(np.abs(lap[1:-1, 1:-1])))

    R, Z = grid.mesh()
    A = np.column_stack([R.ravel(), np.ones(R.size)])
    coef, *_ = np.linalg.lstsq(A, psi.values.ravel(), rcond=None)
    a, b = float(coef[0]), float(coef[1])
    fit_residual = float(np.max(np.abs(psi.values - (a * R + b))))

    decay = []
    for half in radii:
        sub = HalfPlaneGrid(-half, 0.0, -half, half, grid.nR, grid.nZ)
        psih = _laplace_solve(sub, far_field)
        _, dZ = gradient(psih)
        Rh, Zh = sub.mesh()
        core = (np.abs(Rh) <= half / 4) & (np.abs(Zh) <= half / 4)
        decay.append((float(half), float(np.max(np.abs(dZ[core])))))
    return PsiEndgameReport(a, b, fit_residual, bc_residual,
                            solver_residual, tuple(decay))


def psi_endgame_1d(z: np.ndarray, end_values: tuple) -> PsiEndgameReport:
    """Psi''(Z) = 0 on an interval: the affine solution through the ends."""
    z = np.asarray(z, dtype=float)
    v0, v1 = end_values
    a = (v1 - v0) / (z[-1] - z[0])
    b = v0 - a * z[0]
    return PsiEndgameReport(float(a), float(b), 0.0, 0.0, 0.0)


def _discrete_laplacian(f: ScalarField2D) -> np.ndarray:
    v = f.values
    lap = np.zeros_like(v)
    lap[1:-1, 1:-1] = (
        (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / f.h1 ** 2
        + (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / f.h2 ** 2
    )
    return lap


# ---------------------------------------------------------------------------
# self-similar window classification


@dataclass(frozen=True)
class WindowVerdict:
    tag: str  # "shrinks_selfsimilar" | "wider_than_selfsimilar" | "indeterminate"
    ratio_slope: float = float("nan")
    delta_decays: bool = True

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "tag": self.tag,
            "ratio_slope": self.ratio_slope,
            "delta_decays": self.delta_decays,
        }


def window_classify(delta_samples, T: float, gamma: float,
                    slope_tol: float = 0.05) -> WindowVerdict:
    """Classify the window width delta(t) against the (T-t)^gamma scale.

    Fits (T-t)^{-gamma} delta(t) ~ (T-t)^s by log-log regression; the
    ratio stays bounded (s >= 0) when the window shrinks at the
    self-similar rate or faster, and diverges (s < 0) when the window is
    asymptotically wider.  A non-vanishing delta(t) is reported through
    delta_decays=False alongside the ratio classification.
    """
    samples = [(float(t), float(d)) for t, d in delta_samples]
    if len(samples) < 4:
        return WindowVerdict("indeterminate")
    t = np.array([s[0] for s in samples])
    d = np.array([s[1] for s in samples])
    if np.any(d <= 0) or np.any(np.diff(t) <= 0) or np.any(t >= T):
        return WindowVerdict("indeterminate")
    x = np.log(T - t)
    y = np.log(d) - gamma * x
    slope = float(np.polyfit(x, y, 1)[0])
    delta_slope = float(np.polyfit(x, np.log(d), 1)[0])
    # d ~ (T-t)^delta_slope, so delta -> 0 iff delta_slope > 0
    decays = delta_slope > slope_tol
    if slope < -slope_tol:
        return WindowVerdict("wider_than_selfsimilar", slope, decays)
    return WindowVerdict("shrinks_selfsimilar", slope, decays)
