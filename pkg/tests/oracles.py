"""Independent reference implementations used to pin expected values.

Nothing here may call the code path it checks: finite differences check the
tangent maps, two-trajectory re-separation checks the tangent-map KSE, the
explicit two-qubit partial trace checks the collective-spin entropy formula,
and scipy's Pade expm checks the spectral exponentials.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

from qkicks.classical import RotorPoint, SpherePoint, rotor_step, top_step


def fd_jacobian_top(point: SpherePoint, params, delta: float = 1e-8) -> np.ndarray:
    """Finite-difference Jacobian of the top map at ``point``."""
    base = top_step(point, params).as_array()
    jac = np.empty((3, 3))
    for k in range(3):
        shifted = point.as_array()
        shifted[k] += delta
        jac[:, k] = (top_step(SpherePoint(*shifted), params).as_array() - base) / delta
    return jac


def fd_jacobian_rotor(point: RotorPoint, params, delta: float = 1e-8) -> np.ndarray:
    """Finite-difference Jacobian of the rotor map, rows (phi, p)."""
    base = rotor_step(point, params)
    jac = np.empty((2, 2))
    for k, (dphi, dp) in enumerate(((delta, 0.0), (0.0, delta))):
        stepped = rotor_step(RotorPoint(phi=point.phi + dphi, p=point.p + dp), params)
        wrapped = (stepped.phi - base.phi + math.pi) % (2 * math.pi) - math.pi
        jac[:, k] = (wrapped / delta, (stepped.p - base.p) / delta)
    return jac


def two_trajectory_kse_top(
    start: SpherePoint, params, steps: int, delta0: float = 1e-9, seed: int = 3
) -> float:
    """KSE from the separation of two nearby trajectories, re-separated to
    delta0 after every kick; bits per kick."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(3)
    d /= np.linalg.norm(d)
    x = start
    y = SpherePoint(*(start.as_array() + delta0 * d))
    acc = 0.0
    for _ in range(steps):
        x = top_step(x, params)
        y = top_step(y, params)
        sep = y.as_array() - x.as_array()
        dist = np.linalg.norm(sep)
        acc += math.log2(dist / delta0)
        y = SpherePoint(*(x.as_array() + sep * (delta0 / dist)))
    return acc / steps


# --- explicit two-qubit (N=2) machinery ------------------------------------

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
_I2 = np.eye(2, dtype=complex)

JX2 = np.kron(_SX, _I2) + np.kron(_I2, _SX)
JY2 = np.kron(_SY, _I2) + np.kron(_I2, _SY)
JZ2 = np.kron(_SZ, _I2) + np.kron(_I2, _SZ)


def two_qubit_coherent(theta: float, phi: float) -> np.ndarray:
    up = np.array([1, 0], dtype=complex)  # single-spin m = +1/2
    gen = math.sin(phi) * JX2 - math.cos(phi) * JY2
    return sla.expm(1j * theta * gen) @ np.kron(up, up)


def two_qubit_floquet(alpha: float, beta: float) -> np.ndarray:
    # j = N/2 = 1, so the torsion coefficient is beta / (2 j) = beta / 2
    return sla.expm(-1j * (beta / 2.0) * JZ2 @ JZ2) @ sla.expm(-1j * alpha * JX2)


def one_qubit_linear_entropy(psi4: np.ndarray) -> float:
    """1 - tr rho_1^2 from the explicit partial trace over the second qubit."""
    rho = np.outer(psi4, psi4.conj()).reshape(2, 2, 2, 2)
    rho1 = np.trace(rho, axis1=1, axis2=3)
    return 1.0 - float(np.trace(rho1 @ rho1).real)


def su2_expi_closed_form(nx: float, ny: float, nz: float, angle: float) -> np.ndarray:
    """exp(i angle (n . sigma)/2) from the closed-form 2x2 rotation."""
    n = np.array([nx, ny, nz])
    n = n / np.linalg.norm(n)
    sigma = np.array([2 * _SX, 2 * _SY, 2 * _SZ])
    ndots = np.tensordot(n, sigma, axes=1)
    return math.cos(angle / 2) * np.eye(2) + 1j * math.sin(angle / 2) * ndots
