"""Classical kicked top and kicked rotor: stroboscopic maps, tangent maps,
the rotor-limit rescaling, and the Kolmogorov-Sinai entropy estimator.

The top map is the composition of a precession around x by alpha with a
position-dependent torsion rotation around z; the rotor map is the standard
(Chirikov) map with kick strength K and inertia I.  KSE is estimated
Benettin-style from a single renormalized tangent vector: the maps are
effectively two-dimensional and area-preserving, so the single-vector growth
rate equals the sum of positive Lyapunov exponents.  All rates are in bits
per kick (base-2 logarithms).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericalError, OutOfBandError

__all__ = [
    "TopParams",
    "RotorParams",
    "SpherePoint",
    "RotorPoint",
    "TangentVector",
    "KseEstimate",
    "top_step",
    "top_tangent_step",
    "rotor_step",
    "rotor_tangent_step",
    "rotor_limit_params",
    "embed_rotor_on_sphere",
    "project_sphere_to_rotor",
    "rotor_distance",
    "kse_estimate",
    "trajectory",
    "batch_top_kse",
    "batch_rotor_kse",
    "batch_top_trajectories",
    "batch_rotor_trajectories",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TopParams:
    """Kicked-top parameters: precession angle alpha, torsion strength beta."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise InvalidParameterError("alpha and beta must be finite")
        if self.beta < 0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class RotorParams:
    """Kicked-rotor parameters: kick strength K, moment of inertia I > 0."""

    kick: float
    inertia: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kick) and math.isfinite(self.inertia)):
            raise InvalidParameterError("kick and inertia must be finite")
        if self.inertia <= 0:
            raise InvalidParameterError(f"inertia must be > 0, got {self.inertia}")
        if self.kick < 0:
            raise InvalidParameterError(f"kick must be >= 0, got {self.kick}")


@dataclass(frozen=True)
class SpherePoint:
    """Normalized classical angular momentum X = <J>/j on the unit sphere."""

    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, phi: float, theta: float) -> "SpherePoint":
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def angles(self) -> tuple[float, float]:
        """(phi in [0, 2pi), theta in [0, pi])."""
        phi = math.atan2(self.y, self.x) % TWO_PI
        theta = math.acos(max(-1.0, min(1.0, self.z)))
        return phi, theta

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class RotorPoint:
    """Cylinder phase-space point: phi wrapped to [0, 2pi), p unbounded."""

    phi: float
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", self.phi % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.p])


@dataclass
class TangentVector:
    """Linearized perturbation; ``growth`` is the latest stretch factor l_n."""

    components: np.ndarray
    growth: float = 1.0

    def renormalize(self) -> float:
        l = float(np.linalg.norm(self.components))
        if not math.isfinite(l) or l == 0.0:
            raise NumericalError(f"tangent norm degenerate: {l!r}")
        self.components = self.components / l
        self.growth = l
        return l


@dataclass
class KseEstimate:
    """KSE in bits per kick with the running-average history, if requested."""

    value: float
    steps: int
    history: np.ndarray | None = None


def top_step(p: SpherePoint, params: TopParams) -> SpherePoint:
    """One kick of the classical top: x-precession by alpha then z-torsion."""
    sa, ca = math.sin(params.alpha), math.cos(params.alpha)
    z_new = p.y * sa + p.z * ca  # z after the x-rotation
    w = p.y * ca - p.z * sa      # y after the x-rotation
    gamma = params.beta * z_new
    sg, cg = math.sin(gamma), math.cos(gamma)
    return SpherePoint(p.x * cg - w * sg, p.x * sg + w * cg, z_new)


def top_tangent_step(p: SpherePoint, dv: TangentVector, params: TopParams) -> TangentVector:
    """Apply the top map's Jacobian at ``p`` to ``dv`` (un-normalized output)."""
    d = np.asarray(dv.components, dtype=np.float64)
    if d.shape != (3,):
        raise InvalidParameterError(f"top tangent vector must have 3 components, got {d.shape}")
    sa, ca = math.sin(params.alpha), math.cos(params.alpha)
    b = params.beta
    gamma = b * (p.y * sa + p.z * ca)
    sg, cg = math.sin(gamma), math.cos(gamma)
    w = p.y * ca - p.z * sa
    dgam_dy = b * sa
    dgam_dz = b * ca
    dx, dy, dz = d
    out = np.array(
        [
            cg * dx
            + (-p.x * sg * dgam_dy - ca * sg - w * cg * dgam_dy) * dy
            + (-p.x * sg * dgam_dz + sa * sg - w * cg * dgam_dz) * dz,
            sg * dx
            + (p.x * cg * dgam_dy + ca * cg - w * sg * dgam_dy) * dy
            + (p.x * cg * dgam_dz - sa * cg - w * sg * dgam_dz) * dz,
            sa * dy + ca * dz,
        ]
    )
    norm_in = float(np.linalg.norm(d))
    norm_out = float(np.linalg.norm(out))
    return TangentVector(components=out, growth=norm_out / norm_in if norm_in else math.inf)


def rotor_step(p: RotorPoint, params: RotorParams) -> RotorPoint:
    """Standard-map kick: P' = P + K sin(phi); phi' = phi + P'/I (wrapped)."""
    p_new = p.p + params.kick * math.sin(p.phi)
    return RotorPoint(phi=p.phi + p_new / params.inertia, p=p_new)


def rotor_tangent_step(p: RotorPoint, dv: TangentVector, params: RotorParams) -> TangentVector:
    """Apply the rotor map's Jacobian at ``p``; exact, determinant 1."""
    d = np.asarray(dv.components, dtype=np.float64)
    if d.shape != (2,):
        raise InvalidParameterError(f"rotor tangent vector must have 2 components, got {d.shape}")
    dphi, dp = d
    k_cos = params.kick * math.cos(p.phi)
    dp_new = dp + k_cos * dphi
    dphi_new = (1.0 + k_cos / params.inertia) * dphi + dp / params.inertia
    out = np.array([dphi_new, dp_new])
    norm_in = float(np.linalg.norm(d))
    norm_out = float(np.linalg.norm(out))
    return TangentVector(components=out, growth=norm_out / norm_in if norm_in else math.inf)


def rotor_limit_params(kick: float, inertia: float, j_r: float) -> TopParams:
    """Rotor-limit rescaling of the top: alpha = K/j_r, beta = j_r/I."""
    if not j_r > 0:
        raise InvalidParameterError(f"j_r must be > 0, got {j_r}")
    if not inertia > 0:
        raise InvalidParameterError(f"inertia must be > 0, got {inertia}")
    return TopParams(alpha=kick / j_r, beta=j_r / inertia)


def embed_rotor_on_sphere(p: RotorPoint, j_r: float, branch: int = 1) -> SpherePoint:
    """Place a cylinder point on the unit sphere: Z = P/j_r, (X,Y) along phi.

    (X, Y) carry a sqrt(1 - Z^2) factor so the point is exactly on the
    sphere.  ``branch`` selects the polar-angle reading theta =
    branch * arccos(P/j_r): the negative branch flips the sign of (X, Y),
    which is the same as reading phi offset by pi.
    """
    if branch not in (1, -1):
        raise InvalidParameterError(f"branch must be +1 or -1, got {branch}")
    z = p.p / j_r
    if abs(z) > 1.0:
        raise OutOfBandError(f"|P| = {abs(p.p)} exceeds j_r = {j_r}; point leaves the sphere")
    s = branch * math.sqrt(max(0.0, 1.0 - z * z))
    return SpherePoint(s * math.cos(p.phi), s * math.sin(p.phi), z)


def project_sphere_to_rotor(sp: SpherePoint, j_r: float, branch: int = 1) -> RotorPoint:
    """Inverse of embed_rotor_on_sphere: phi from (X, Y), P = Z * j_r."""
    if branch not in (1, -1):
        raise InvalidParameterError(f"branch must be +1 or -1, got {branch}")
    return RotorPoint(phi=math.atan2(branch * sp.y, branch * sp.x), p=sp.z * j_r)


def rotor_distance(a: RotorPoint, b: RotorPoint) -> float:
    """Cylinder distance: shortest angular difference combined with delta P."""
    dphi = (a.phi - b.phi + math.pi) % TWO_PI - math.pi
    return math.hypot(dphi, a.p - b.p)


def _initial_tangent(ndim: int, seed: int | None) -> np.ndarray:
    if seed is None:
        d = np.zeros(ndim)
        d[0] = 1.0
        return d
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d = rng.standard_normal(ndim)
    return d / np.linalg.norm(d)


def kse_estimate(
    start,
    params,
    steps: int,
    *,
    direction: np.ndarray | None = None,
    seed: int | None = None,
    keep_history: bool = False,
) -> KseEstimate:
    """Kolmogorov-Sinai entropy (1/t) sum log2 l_n from the tangent map.

    The tangent vector starts along (1,0,0) / (1,0) unless ``direction`` or
    ``seed`` overrides it; it is renormalized after every kick and the
    stretch factors l_n accumulate in base-2 logs.  ``history[t-1]`` is the
    running average after t kicks.
    """
    if steps < 1:
        raise InvalidParameterError(f"steps must be >= 1, got {steps}")
    if isinstance(params, TopParams):
        if not isinstance(start, SpherePoint):
            raise InvalidParameterError("top KSE needs a SpherePoint start")
        point, tangent_step, step = start, top_tangent_step, top_step
        ndim = 3
    elif isinstance(params, RotorParams):
        if not isinstance(start, RotorPoint):
            raise InvalidParameterError("rotor KSE needs a RotorPoint start")
        point, tangent_step, step = start, rotor_tangent_step, rotor_step
        ndim = 2
    else:
        raise InvalidParameterError(f"unsupported params type {type(params).__name__}")

    if direction is not None:
        d = np.asarray(direction, dtype=np.float64)
        if d.shape != (ndim,):
            raise InvalidParameterError(f"direction must have shape ({ndim},)")
        dv = TangentVector(d / np.linalg.norm(d))
    else:
        dv = TangentVector(_initial_tangent(ndim, seed))

    acc = 0.0
    history = np.empty(steps) if keep_history else None
    for n in range(steps):
        dv = tangent_step(point, dv, params)
        try:
            l = dv.renormalize()
        except NumericalError as exc:
            raise NumericalError(f"tangent blow-up at step {n + 1}: {exc}") from exc
        if not math.isfinite(l):
            raise NumericalError(f"non-finite stretch factor at step {n + 1}")
        acc += math.log2(l)
        if history is not None:
            history[n] = acc / (n + 1)
        point = step(point, params)
    return KseEstimate(value=acc / steps, steps=steps, history=history)


def trajectory(start, params, kicks: int):
    """[start, f(start), ..., f^kicks(start)] under the matching step map."""
    if kicks < 0:
        raise InvalidParameterError(f"kicks must be >= 0, got {kicks}")
    if isinstance(params, TopParams):
        if not isinstance(start, SpherePoint):
            raise InvalidParameterError("top trajectory needs a SpherePoint start")
        step = top_step
    elif isinstance(params, RotorParams):
        if not isinstance(start, RotorPoint):
            raise InvalidParameterError("rotor trajectory needs a RotorPoint start")
        step = rotor_step
    else:
        raise InvalidParameterError(f"unsupported params type {type(params).__name__}")
    out = [start]
    point = start
    for _ in range(kicks):
        point = step(point, params)
        out.append(point)
    return out


# --- vectorized kernels (one array slot per grid cell / trajectory) -------
#
# Elementwise numpy ops keep cells independent, so any fixed partition of a
# grid into batches yields identical per-cell values; scan chunk boundaries
# are fixed constants for exactly this reason.


def _batch_top_arrays(phi: np.ndarray, theta: np.ndarray):
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta)


def batch_top_kse(
    phi: np.ndarray,
    theta: np.ndarray,
    params: TopParams,
    steps: int,
    directions: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized top KSE over many initial conditions; bits per kick.

    Non-finite entries in the result mark cells whose tangent dynamics
    overflowed; callers decide whether that is an error.
    """
    x, y, z = _batch_top_arrays(np.asarray(phi, float), np.asarray(theta, float))
    n = x.shape[0]
    if directions is None:
        dx = np.ones(n)
        dy = np.zeros(n)
        dz = np.zeros(n)
    else:
        d = np.asarray(directions, float)
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        dx, dy, dz = d[:, 0].copy(), d[:, 1].copy(), d[:, 2].copy()
    sa, ca = math.sin(params.alpha), math.cos(params.alpha)
    b = params.beta
    acc = np.zeros(n)
    for _ in range(steps):
        gamma = b * (y * sa + z * ca)
        sg, cg = np.sin(gamma), np.cos(gamma)
        w = y * ca - z * sa
        ndx = cg * dx + (-x * sg * b * sa - ca * sg - w * cg * b * sa) * dy + (
            -x * sg * b * ca + sa * sg - w * cg * b * ca
        ) * dz
        ndy = sg * dx + (x * cg * b * sa + ca * cg - w * sg * b * sa) * dy + (
            x * cg * b * ca - sa * cg - w * sg * b * ca
        ) * dz
        ndz = sa * dy + ca * dz
        l = np.sqrt(ndx * ndx + ndy * ndy + ndz * ndz)
        acc += np.log2(l)
        dx, dy, dz = ndx / l, ndy / l, ndz / l
        zn = y * sa + z * ca
        x, y, z = x * cg - w * sg, x * sg + w * cg, zn
    return acc / steps


def batch_rotor_kse(
    phi: np.ndarray,
    p: np.ndarray,
    params: RotorParams,
    steps: int,
    directions: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized rotor KSE over many initial conditions; bits per kick."""
    phi = np.asarray(phi, float).copy()
    p = np.asarray(p, float).copy()
    n = phi.shape[0]
    if directions is None:
        dphi = np.ones(n)
        dp = np.zeros(n)
    else:
        d = np.asarray(directions, float)
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        dphi, dp = d[:, 0].copy(), d[:, 1].copy()
    k, inertia = params.kick, params.inertia
    acc = np.zeros(n)
    for _ in range(steps):
        k_cos = k * np.cos(phi)
        ndp = dp + k_cos * dphi
        ndphi = (1.0 + k_cos / inertia) * dphi + dp / inertia
        l = np.sqrt(ndphi * ndphi + ndp * ndp)
        acc += np.log2(l)
        dphi, dp = ndphi / l, ndp / l
        p = p + k * np.sin(phi)
        phi = (phi + p / inertia) % TWO_PI
    return acc / steps


def batch_top_trajectories(
    phi0: np.ndarray, theta0: np.ndarray, params: TopParams, kicks: int
) -> tuple[np.ndarray, np.ndarray]:
    """(phi, theta) arrays of shape (n, kicks+1) for n initial conditions."""
    x, y, z = _batch_top_arrays(np.asarray(phi0, float), np.asarray(theta0, float))
    n = x.shape[0]
    phis = np.empty((n, kicks + 1))
    thetas = np.empty((n, kicks + 1))
    sa, ca = math.sin(params.alpha), math.cos(params.alpha)
    b = params.beta
    for k in range(kicks + 1):
        phis[:, k] = np.arctan2(y, x) % TWO_PI
        thetas[:, k] = np.arccos(np.clip(z, -1.0, 1.0))
        if k == kicks:
            break
        zn = y * sa + z * ca
        w = y * ca - z * sa
        gamma = b * zn
        sg, cg = np.sin(gamma), np.cos(gamma)
        x, y, z = x * cg - w * sg, x * sg + w * cg, zn
    return phis, thetas


def batch_rotor_trajectories(
    phi0: np.ndarray, p0: np.ndarray, params: RotorParams, kicks: int
) -> tuple[np.ndarray, np.ndarray]:
    """(phi, p) arrays of shape (n, kicks+1); p is never wrapped here."""
    phi = np.asarray(phi0, float) % TWO_PI
    p = np.asarray(p0, float).copy()
    n = phi.shape[0]
    phis = np.empty((n, kicks + 1))
    ps = np.empty((n, kicks + 1))
    for k in range(kicks + 1):
        phis[:, k] = phi
        ps[:, k] = p
        if k == kicks:
            break
        p = p + params.kick * np.sin(phi)
        phi = (phi + p / params.inertia) % TWO_PI
    return phis, ps
