"""Floquet evolution of the quantum kicked top and its rotor-limit, with the
chaos diagnostics: single-spin linear entanglement entropy, time-averaged EE,
time-averaged density matrices, ergodicity fidelity against the normalized
microcanonical state, Uhlmann fidelity between states, and Husimi
distributions over spin coherent states.

One kick is U = exp(-i (beta/2j) Jz^2) exp(-i alpha Jx); evolution is a
single matrix-vector product per kick once the operator is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import TWO_PI, TopParams
from .errors import InvalidParameterError, InvariantViolationError, OutOfBandError
from .spin import (
    PSD_CLAMP,
    AngularMomentumRep,
    DensityMatrix,
    QuantumState,
    coherent_state,
    hermitian_expi,
    hermitian_sqrt,
)

__all__ = [
    "FloquetOperator",
    "EvolutionRecord",
    "HusimiGridSpec",
    "HusimiGrid",
    "CoherentFrame",
    "build_floquet",
    "evolve",
    "linear_ee",
    "time_averaged_ee",
    "ergodicity_fidelity",
    "state_fidelity",
    "ergodicity_series",
    "husimi",
    "rotor_limit_initial_state",
]


@dataclass(frozen=True)
class FloquetOperator:
    """One-kick unitary u = exp(-i (beta/2j) Jz^2) exp(-i alpha Jx)."""

    rep: AngularMomentumRep
    params: TopParams
    u: np.ndarray


def build_floquet(
    rep: AngularMomentumRep,
    params: TopParams,
    *,
    jx_eig: tuple[np.ndarray, np.ndarray] | None = None,
) -> FloquetOperator:
    """Build the kick unitary; pass a cached eigh(jx) to amortize scans over
    alpha (the torsion factor is diagonal and costs nothing)."""
    if jx_eig is None:
        rotation = hermitian_expi(rep.jx, -params.alpha)
    else:
        w, v = jx_eig
        rotation = (v * np.exp(-1j * params.alpha * w)) @ v.conj().T
    torsion = np.exp(-1j * (params.beta / (2.0 * rep.j)) * rep.m**2)
    u = torsion[:, None] * rotation
    u.setflags(write=False)
    return FloquetOperator(rep=rep, params=params, u=u)


def linear_ee(jx_exp: float, jy_exp: float, jz_exp: float, j: float) -> float:
    """Single-spin linear entanglement entropy (1/2)(1 - |<J>|^2 / j^2).

    Zero for coherent (product) states, 1/2 when <J> = 0.
    """
    mag2 = jx_exp**2 + jy_exp**2 + jz_exp**2
    if mag2 > (j * (1.0 + 1e-9)) ** 2:
        raise InvariantViolationError(
            f"|<J>| = {math.sqrt(mag2)} exceeds j = {j} beyond tolerance"
        )
    return min(0.5, max(0.0, 0.5 * (1.0 - mag2 / j**2)))


@dataclass
class EvolutionRecord:
    """Per-kick series; index n holds values after n kicks (n = 0 included)."""

    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    entropy: np.ndarray
    final_state: QuantumState
    rho_bar: DensityMatrix | None = None

    @property
    def kicks(self) -> int:
        return len(self.entropy) - 1


def evolve(
    state: QuantumState,
    flo: FloquetOperator,
    kicks: int,
    *,
    accumulate_rho: bool = False,
    rho_include_initial: bool = False,
) -> EvolutionRecord:
    """Apply the kick unitary ``kicks`` times, recording <J> and S(n).

    The running time-averaged density matrix is opt-in (O(dim^2) memory) and
    by default averages |psi_n><psi_n| over kicks 1..kicks, excluding the
    initial coherent state.
    """
    if kicks < 0:
        raise InvalidParameterError(f"kicks must be >= 0, got {kicks}")
    if state.rep.dim != flo.rep.dim:
        raise InvalidParameterError(
            f"state dim {state.rep.dim} != Floquet dim {flo.rep.dim}"
        )
    rep = state.rep
    psi = state.amplitudes.astype(np.complex128, copy=True)
    jx = np.empty(kicks + 1)
    jy = np.empty(kicks + 1)
    jz = np.empty(kicks + 1)
    entropy = np.empty(kicks + 1)
    rho_acc = None
    rho_count = 0
    if accumulate_rho:
        rho_acc = np.zeros((rep.dim, rep.dim), dtype=np.complex128)
        if rho_include_initial:
            rho_acc += np.outer(psi, psi.conj())
            rho_count = 1

    current = QuantumState(rep=rep, amplitudes=psi)
    for n in range(kicks + 1):
        ex, ey, ez = current.j_expectations()
        jx[n], jy[n], jz[n] = ex, ey, ez
        entropy[n] = linear_ee(ex, ey, ez, rep.j)
        if n == kicks:
            break
        psi = flo.u @ psi
        current = QuantumState(rep=rep, amplitudes=psi)
        current.check_norm(1e-10)
        if rho_acc is not None:
            rho_acc += np.outer(psi, psi.conj())
            rho_count += 1

    rho_bar = None
    if rho_acc is not None and rho_count:
        rho_bar = DensityMatrix(dim=rep.dim, elements=rho_acc / rho_count)
    return EvolutionRecord(
        jx=jx, jy=jy, jz=jz, entropy=entropy, final_state=current, rho_bar=rho_bar
    )


def time_averaged_ee(record: EvolutionRecord, t: int, *, include_initial: bool = False) -> float:
    """Mean of S(1)..S(t) (post-kick values; the initial state is excluded
    unless ``include_initial``, which averages S(0)..S(t))."""
    if t < 1 or t > record.kicks:
        raise InvalidParameterError(
            f"t = {t} outside the recorded range 1..{record.kicks}"
        )
    if include_initial:
        return float(np.mean(record.entropy[: t + 1]))
    return float(np.mean(record.entropy[1 : t + 1]))


def _clamped_sqrt_eigvals(matrix: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(matrix)
    if w.min(initial=0.0) < PSD_CLAMP:
        raise InvalidParameterError(
            f"matrix is not PSD: smallest eigenvalue {w.min():.3e}"
        )
    return np.sqrt(np.clip(w, 0.0, None))


def ergodicity_fidelity(rho_bar: DensityMatrix) -> float:
    """Fidelity of rho_bar with the microcanonical state I/dim.

    Equals sum_i sqrt(lambda_i) / sqrt(dim); ranges from 1/sqrt(dim) for a
    pure state to 1 when the spectrum is uniform.
    """
    roots = _clamped_sqrt_eigvals(rho_bar.elements)
    return float(roots.sum() / math.sqrt(rho_bar.dim))


def state_fidelity(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(a) b sqrt(a)) between density matrices."""
    if rho_a.dim != rho_b.dim:
        raise InvalidParameterError(f"dims differ: {rho_a.dim} != {rho_b.dim}")
    root_a = hermitian_sqrt(rho_a.elements)
    inner = root_a @ rho_b.elements @ root_a
    inner = (inner + inner.conj().T) / 2.0
    return float(_clamped_sqrt_eigvals(inner).sum())


def ergodicity_series(
    state: QuantumState,
    flo: FloquetOperator,
    kicks: int,
    *,
    stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """F(rho_bar_n, I/dim) sampled every ``stride`` kicks; returns (n, F)."""
    if kicks < 1:
        raise InvalidParameterError(f"kicks must be >= 1, got {kicks}")
    if stride < 1:
        raise InvalidParameterError(f"stride must be >= 1, got {stride}")
    rep = state.rep
    psi = state.amplitudes.astype(np.complex128, copy=True)
    rho_acc = np.zeros((rep.dim, rep.dim), dtype=np.complex128)
    steps = []
    values = []
    inv_sqrt_dim = 1.0 / math.sqrt(rep.dim)
    for n in range(1, kicks + 1):
        psi = flo.u @ psi
        rho_acc += np.outer(psi, psi.conj())
        if n % stride == 0 or n == kicks:
            w = np.linalg.eigvalsh(rho_acc / n)
            values.append(float(np.sqrt(np.clip(w, 0.0, None)).sum() * inv_sqrt_dim))
            steps.append(n)
    return np.asarray(steps), np.asarray(values)


class CoherentFrame:
    """Coherent states in bulk via exp(i theta K(phi)) = D(phi) exp(-i theta Jy) D(phi)^dag.

    D(phi) = exp(-i phi Jz) is a diagonal phase, so one eigendecomposition of
    Jy serves every grid point; a whole constant-phi column of coherent
    states costs one (dim x dim) @ (dim x n) product.  Identical to
    ``coherent_state`` to roundoff (the identity is exact), which makes
    dense Husimi grids affordable.
    """

    def __init__(self, rep: AngularMomentumRep):
        self.rep = rep
        wy, vy = np.linalg.eigh(rep.jy)
        self._wy = wy
        self._vy = vy
        self._w0 = vy.conj().T[:, -1]  # Vy^dag |j,j>

    def column(self, phi: float, thetas: np.ndarray) -> np.ndarray:
        """Amplitudes of |phi, theta_k> as columns of a (dim, n) array."""
        thetas = np.atleast_1d(np.asarray(thetas, float))
        core = self._vy @ (self._w0[:, None] * np.exp(-1j * np.outer(self._wy, thetas)))
        phase = np.exp(1j * phi * (self.rep.j - self.rep.m))
        return phase[:, None] * core


@dataclass(frozen=True)
class HusimiGridSpec:
    """Cell-center grid over (phi, theta), optionally parameterized by a
    rotor band (phi, p) with theta = branch * arccos(p / j_r)."""

    phi_centers: np.ndarray
    theta_centers: np.ndarray
    p_centers: np.ndarray | None = None
    j_r: float | None = None
    branch: int = 1

    @classmethod
    def sphere(
        cls,
        n_phi: int,
        n_theta: int,
        phi_range: tuple[float, float] = (0.0, TWO_PI),
        theta_range: tuple[float, float] = (0.0, math.pi),
    ) -> "HusimiGridSpec":
        if n_phi < 2 or n_theta < 2:
            raise InvalidParameterError("husimi grid needs at least 2x2 cells")
        return cls(
            phi_centers=_centers(*phi_range, n_phi),
            theta_centers=_centers(*theta_range, n_theta),
        )

    @classmethod
    def band(
        cls,
        n_phi: int,
        n_p: int,
        p_range: tuple[float, float],
        j_r: float,
        branch: int = 1,
        phi_range: tuple[float, float] = (0.0, TWO_PI),
    ) -> "HusimiGridSpec":
        if n_phi < 2 or n_p < 2:
            raise InvalidParameterError("husimi grid needs at least 2x2 cells")
        if branch not in (1, -1):
            raise InvalidParameterError(f"branch must be +1 or -1, got {branch}")
        p_centers = _centers(*p_range, n_p)
        if np.max(np.abs(p_centers)) > j_r:
            raise OutOfBandError(f"p range {p_range} exceeds j_r = {j_r}")
        thetas = branch * np.arccos(p_centers / j_r)
        return cls(
            phi_centers=_centers(*phi_range, n_phi),
            theta_centers=thetas,
            p_centers=p_centers,
            j_r=j_r,
            branch=branch,
        )


def _centers(lo: float, hi: float, count: int) -> np.ndarray:
    h = (hi - lo) / count
    return lo + h * (np.arange(count) + 0.5)


@dataclass
class HusimiGrid:
    """values[i, k] = (2j+1)/(4 pi) <c|rho|c> at (phi_i, theta_k); >= 0."""

    spec: HusimiGridSpec
    values: np.ndarray

    def solid_angle_quadrature(self) -> float:
        """Midpoint quadrature of values over sin(theta) dtheta dphi.

        Only meaningful for sphere grids with uniform spacing; approaches 1
        from the resolution of identity as the grid refines.
        """
        phis = self.spec.phi_centers
        thetas = self.spec.theta_centers
        dphi = phis[1] - phis[0]
        dtheta = abs(thetas[1] - thetas[0])
        return float(np.sum(self.values * np.sin(np.abs(thetas))[None, :]) * dphi * dtheta)

    def support_fraction(self, level: float = 0.1) -> float:
        """Fraction of cells above ``level`` times the peak value."""
        peak = float(self.values.max())
        if peak <= 0.0:
            return 0.0
        return float(np.mean(self.values > level * peak))


def _weight_factors(rho: DensityMatrix) -> np.ndarray:
    """Columns b_k with rho = sum_k b_k b_k^dag; tiny eigenvalues dropped."""
    w, v = np.linalg.eigh(rho.elements)
    if w.min(initial=0.0) < PSD_CLAMP:
        raise InvalidParameterError(
            f"density matrix is not PSD: smallest eigenvalue {w.min():.3e}"
        )
    keep = w > max(0.0, float(w.max()) * rho.dim * 1e-15)
    return v[:, keep] * np.sqrt(w[keep])


def husimi(
    rho: DensityMatrix,
    rep: AngularMomentumRep,
    grid: HusimiGridSpec,
    *,
    frame: CoherentFrame | None = None,
) -> HusimiGrid:
    """Husimi distribution of rho on the coherent-state grid."""
    if rho.dim != rep.dim:
        raise InvalidParameterError(f"rho dim {rho.dim} != rep dim {rep.dim}")
    if frame is None:
        frame = CoherentFrame(rep)
    b_dag = _weight_factors(rho).conj().T
    prefactor = (2.0 * rep.j + 1.0) / (4.0 * math.pi)
    values = np.empty((len(grid.phi_centers), len(grid.theta_centers)))
    for i, phi in enumerate(grid.phi_centers):
        c = frame.column(float(phi), grid.theta_centers)
        values[i, :] = prefactor * np.sum(np.abs(b_dag @ c) ** 2, axis=0)
    return HusimiGrid(spec=grid, values=values)


def rotor_limit_initial_state(
    rep: AngularMomentumRep, phi: float, p: float, j_r: float, branch: int = 1
) -> QuantumState:
    """Coherent state at the rotor-band point: theta = branch * arccos(p/j_r)."""
    if branch not in (1, -1):
        raise InvalidParameterError(f"branch must be +1 or -1, got {branch}")
    if not j_r > 0:
        raise InvalidParameterError(f"j_r must be > 0, got {j_r}")
    if abs(p) > j_r:
        raise OutOfBandError(f"|p| = {abs(p)} exceeds j_r = {j_r}")
    theta = branch * math.acos(p / j_r)
    return coherent_state(rep, theta, phi)
