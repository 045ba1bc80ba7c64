"""
Exact linear algebra for the 2x2 and 3x3 complex matrices that carry
Hamiltonians, propagators and density matrices (hbar = 1 throughout).
"""

import logging

import numpy as np
import scipy.linalg as la

from .exceptions import BranchCutError, DimensionError, HermiticityError, UnitarityError
from .models import PauliCoeffs

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
BRANCH_TOL = 1e-9
# eigenvalues this close to -1 are taken to lie on the cut itself (phase +pi)
ON_CUT_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_BASIS = (I2, X, Y, Z)


def as_matrix(m) -> np.ndarray:
    """Coerce to a complex square array of dimension 2 or 3."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in (2, 3):
        raise DimensionError(f"Expected a 2x2 or 3x3 matrix, got shape {arr.shape}")
    return arr


def hermiticity_defect(m) -> float:
    """max|M - M^dagger|, taken over a whole stack when ``m`` has shape (..., d, d)."""
    arr = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(arr - np.swapaxes(arr.conj(), -1, -2))))


def unitarity_defect(u) -> float:
    """max|U^dagger U - I|, taken over a whole stack when ``u`` has shape (..., d, d)."""
    arr = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(np.swapaxes(arr.conj(), -1, -2) @ arr - np.eye(arr.shape[-1]))))


def ensure_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    arr = as_matrix(m)
    defect = hermiticity_defect(arr)
    if defect > tol:
        raise HermiticityError(f"Matrix is not Hermitian: max|M - M^dagger| = {defect:.3e} > {tol:.0e}")
    return arr


def ensure_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    arr = as_matrix(u)
    defect = unitarity_defect(arr)
    if defect > tol:
        raise UnitarityError(f"Matrix is not unitary: max|U^dagger U - I| = {defect:.3e} > {tol:.0e}")
    return arr


def pauli_decompose(op) -> PauliCoeffs:
    """
    Coefficients of a 2x2 Hermitian operator in the basis {I, X, Y, Z}.

    c_K = Tr(op K) / 2, so that op = c_I I + c_X X + c_Y Y + c_Z Z.
    """
    arr = ensure_hermitian(op)
    if arr.shape != (2, 2):
        raise DimensionError(f"Pauli decomposition needs a 2x2 matrix, got {arr.shape}")
    c_i, c_x, c_y, c_z = (float(np.real(np.trace(arr @ k))) / 2.0 for k in PAULI_BASIS)
    return PauliCoeffs(c_i=c_i, c_x=c_x, c_y=c_y, c_z=c_z)


def pauli_compose(coeffs: PauliCoeffs) -> np.ndarray:
    return coeffs.c_i * I2 + coeffs.c_x * X + coeffs.c_y * Y + coeffs.c_z * Z


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real eigenvalues and orthonormal eigenvector columns."""
    arr = ensure_hermitian(m)
    # exact symmetrisation keeps eigh on the Hermitian part only
    values, vectors = np.linalg.eigh(0.5 * (arr + arr.conj().T))
    return values, vectors


def mat_exp_i(h, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h``, via its eigendecomposition."""
    values, vectors = hermitian_eig(h)
    return (vectors * np.exp(-1j * values * t)) @ vectors.conj().T


def mat_exp_i_stack(h_stack: np.ndarray, t: float) -> np.ndarray:
    """
    exp(-i h t) for a stack of Hermitian matrices with shape (..., d, d).

    Used in the ensemble hot loop; callers guarantee Hermiticity.
    """
    values, vectors = np.linalg.eigh(h_stack)
    phases = np.exp(-1j * values * t)
    return (vectors * phases[..., None, :]) @ np.swapaxes(vectors.conj(), -1, -2)


def eigenphases(u) -> tuple[np.ndarray, np.ndarray]:
    """
    Principal eigenphases in (-pi, pi] and the unitary diagonalising ``u``.

    The complex Schur form of a normal matrix is diagonal, which keeps the
    eigenbasis orthonormal even for degenerate spectra.
    """
    arr = ensure_unitary(u)
    triangular, basis = la.schur(arr, output="complex")
    diag = np.diag(triangular)

    phases = np.angle(diag)
    on_cut = np.abs(diag + 1.0) <= ON_CUT_TOL
    phases = np.where(on_cut, np.pi, phases)

    near_cut = (~on_cut) & (phases <= -np.pi + BRANCH_TOL)
    if np.any(near_cut):
        raise BranchCutError(
            f"Eigenphase {phases[near_cut][0]:.12f} lies within {BRANCH_TOL:.0e} of -pi; "
            "perturb the phases of the target unitary"
        )
    return phases, basis


def unitary_log(u) -> np.ndarray:
    """Hermitian A with exp(iA) = u, eigenphases on the principal branch."""
    phases, basis = eigenphases(u)
    log_u = (basis * phases) @ basis.conj().T
    return 0.5 * (log_u + log_u.conj().T)


def exp_i(a) -> np.ndarray:
    """exp(+iA) for Hermitian ``a``; the inverse of ``unitary_log``."""
    return mat_exp_i(a, -1.0)
