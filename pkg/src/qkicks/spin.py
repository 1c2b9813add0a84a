"""Exact angular-momentum algebra in the Dicke basis |j,m>, m = -j..j ascending.

Everything quantum in this package is built on the (2j+1)-dimensional irrep
constructed here: the J matrices, Hermitian matrix functions (exp, sqrt) via
spectral decomposition, spin coherent states and density-matrix utilities.
All constructed objects are immutable and safe to share across workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, InvariantViolationError

__all__ = [
    "AngularMomentumRep",
    "QuantumState",
    "DensityMatrix",
    "build_rep",
    "hermitian_expi",
    "hermitian_sqrt",
    "coherent_state",
]

# Eigenvalues of a positive-semidefinite matrix may dip slightly negative from
# roundoff; anything above this is clamped to zero, anything below is an error.
PSD_CLAMP = -1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AngularMomentumRep:
    """Spin-j irrep: dim = 2j+1 matrices in the Dicke basis (index 0 <-> m=-j).

    ``m`` is the diagonal of jz; ``ladder`` holds <m+1|J+|m> so expectation
    values of Jx, Jy cost O(dim) instead of a matrix-vector product.
    """

    j: float
    dim: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    m: np.ndarray
    ladder: np.ndarray


def build_rep(j: float) -> AngularMomentumRep:
    """Construct the spin-j operators from the standard ladder matrix elements.

    j must be a positive integer or half-integer; raises
    InvalidParameterError otherwise.
    """
    two_j = 2.0 * j
    if not np.isfinite(two_j) or two_j <= 0 or round(two_j) != two_j:
        raise InvalidParameterError(f"j must be a positive half-integer, got {j!r}")
    dim = int(round(two_j)) + 1
    m = np.arange(dim, dtype=np.float64) - j
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    ladder = np.sqrt(j * (j + 1.0) - m[:-1] * (m[:-1] + 1.0))
    jplus = np.zeros((dim, dim), dtype=np.complex128)
    jplus[np.arange(1, dim), np.arange(dim - 1)] = ladder
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2.0
    jy = (jplus - jminus) / 2.0j
    jz = np.diag(m.astype(np.complex128))
    return AngularMomentumRep(
        j=float(j),
        dim=dim,
        jx=_readonly(jx),
        jy=_readonly(jy),
        jz=_readonly(jz),
        m=_readonly(m),
        ladder=_readonly(ladder),
    )


def _check_hermitian(h: np.ndarray, tol: float, what: str) -> None:
    scale = max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
    resid = float(np.max(np.abs(h - h.conj().T)))
    if resid > tol * scale:
        raise InvalidParameterError(
            f"{what} is not Hermitian: max|H - H^dag| = {resid:.3e} (tol {tol:.0e})"
        )


def hermitian_expi(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(i * scale * H) for Hermitian H, by full eigendecomposition.

    Exact to roundoff and unitary by construction; the preferred route for
    Floquet operators that are built once and applied many times.
    """
    h = np.asarray(h, dtype=np.complex128)
    _check_hermitian(h, 1e-10, "hermitian_expi input")
    w, v = np.linalg.eigh(h)
    phases = np.exp(1j * scale * w)
    return (v * phases) @ v.conj().T


def hermitian_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a positive-semidefinite Hermitian matrix.

    Eigenvalues in [PSD_CLAMP, 0) are treated as roundoff and clamped to
    zero; anything more negative raises InvalidParameterError.
    """
    m = np.asarray(m, dtype=np.complex128)
    _check_hermitian(m, 1e-10, "hermitian_sqrt input")
    w, v = np.linalg.eigh(m)
    if w.min(initial=0.0) < PSD_CLAMP:
        raise InvalidParameterError(
            f"matrix is not PSD: smallest eigenvalue {w.min():.3e} < {PSD_CLAMP:.0e}"
        )
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return (root + root.conj().T) / 2.0


@dataclass
class QuantumState:
    """Complex amplitudes over the Dicke basis of ``rep``; unit norm."""

    rep: AngularMomentumRep
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol: float = 1e-10) -> None:
        n2 = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(n2 - 1.0) > tol:
            raise InvariantViolationError(f"state norm^2 drifted to {n2!r}")

    def j_expectations(self) -> tuple[float, float, float]:
        """(<Jx>, <Jy>, <Jz>) via the tridiagonal structure, O(dim)."""
        c = self.amplitudes
        # <J+> = sum_m conj(c[m+1]) * ladder[m] * c[m]
        jplus = np.sum(c[1:].conj() * self.rep.ladder * c[:-1])
        jz = float(np.sum(self.rep.m * np.abs(c) ** 2))
        return float(jplus.real), float(jplus.imag), jz

    def density_matrix(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(dim=self.rep.dim, elements=rho)


def coherent_state(rep: AngularMomentumRep, theta: float, phi: float) -> QuantumState:
    """Spin coherent state: exp{i theta (Jx sin phi - Jy cos phi)} |j, j>.

    <J>/j of the result is the classical unit vector
    (sin theta cos phi, sin theta sin phi, cos theta).
    """
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise InvalidParameterError("theta and phi must be finite")
    axis = np.sin(phi) * rep.jx - np.cos(phi) * rep.jy
    u = hermitian_expi(axis, theta)
    amps = u[:, -1].copy()  # |j, j> is the last basis vector (m ascending)
    amps /= np.linalg.norm(amps)
    return QuantumState(rep=rep, amplitudes=amps)


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace matrix; PSD up to roundoff (checked where used)."""

    dim: int
    elements: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.elements, dtype=np.complex128)
        if e.shape != (self.dim, self.dim):
            raise InvalidParameterError(
                f"elements shape {e.shape} != ({self.dim}, {self.dim})"
            )
        herm = float(np.max(np.abs(e - e.conj().T))) if self.dim else 0.0
        if herm > 1e-12 * max(1.0, float(np.max(np.abs(e)))):
            raise InvariantViolationError(f"density matrix not Hermitian: {herm:.3e}")
        tr = float(e.trace().real)
        if abs(tr - 1.0) > 1e-10:
            raise InvariantViolationError(f"density matrix trace {tr!r} != 1")
        self.elements = e

    @classmethod
    def microcanonical(cls, dim: int) -> "DensityMatrix":
        """Normalized identity I/dim: every state equally probable."""
        return cls(dim=dim, elements=np.eye(dim, dtype=np.complex128) / dim)

    def purity(self) -> float:
        """tr rho^2; 1/dim for the microcanonical state, 1 for pure states."""
        return float(np.vdot(self.elements, self.elements).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.elements)
