"""Small dense complex linear algebra for bipartite pure states and qubits.

Every array function here broadcasts over leading axes, so a batch of
``k`` density matrices is just an array of shape ``(k, m, m)``.  States,
density matrices and spectra are plain numpy arrays; the ``validate_*``
helpers check the invariants when a caller wants them checked.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError, ValidationError

__all__ = [
    "CompositeShape",
    "PAULI",
    "validate_pure_state",
    "validate_density_matrix",
    "validate_spectrum",
    "partial_trace_A",
    "partial_trace_S",
    "jacobi_eigh",
    "eig_hermitian",
    "schmidt_spectrum",
    "entanglement_entropy",
    "bloch_from_density",
    "density_from_bloch",
    "trace_distance",
]

STATE_ATOL = 1e-12
SPECTRUM_ATOL = 1e-10
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class CompositeShape:
    """Dimensions ``(m, n)`` of the system and the auxiliary space."""

    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise ShapeError(f"composite dimensions must be positive integers, got {self.m}x{self.n}")

    @property
    def dim(self) -> int:
        return self.m * self.n


def _as_shape(shape) -> CompositeShape:
    if isinstance(shape, CompositeShape):
        return shape
    m, n = shape
    return CompositeShape(int(m), int(n))


def validate_pure_state(psi, atol: float = STATE_ATOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim < 1 or psi.shape[-1] < 1:
        raise ShapeError("a pure state needs at least one amplitude")
    norms = np.linalg.norm(psi, axis=-1)
    if np.any(np.abs(norms - 1.0) > atol):
        raise ValidationError(f"state norm deviates from 1 by {np.max(np.abs(norms - 1.0)):.3g}")
    return psi


def validate_density_matrix(rho, atol: float = STATE_ATOL) -> np.ndarray:
    """Check hermiticity, unit trace and positivity; return ``rho`` as complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim < 2 or rho.shape[-1] != rho.shape[-2]:
        raise ShapeError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0)
    if herm > atol:
        raise ValidationError(f"matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1.0) > atol):
        raise ValidationError("density matrix trace is not 1")
    w, _ = jacobi_eigh(rho)
    if np.any(w < -SPECTRUM_ATOL):
        raise ValidationError(f"negative eigenvalue {w.min():.3g}")
    return rho


def validate_spectrum(spec, atol: float = SPECTRUM_ATOL) -> np.ndarray:
    spec = np.asarray(spec, dtype=float)
    if spec.ndim < 1 or spec.shape[-1] < 1:
        raise ShapeError("empty spectrum")
    if np.any(spec < -atol) or np.any(spec > 1 + atol):
        raise DomainError("spectrum entries must lie in [0, 1]")
    if np.any(np.abs(spec.sum(axis=-1) - 1.0) > atol):
        raise DomainError("spectrum does not sum to 1")
    return spec


def partial_trace_A(psi, shape) -> np.ndarray:
    """Reduced density matrix of the system after tracing out the auxiliary space.

    ``psi[..., i*n + j]`` is the amplitude of ``|u_i> (x) |v_j>``, and the
    result is ``rho[i, i'] = sum_j c[i, j] conj(c[i', j])``.
    """
    shape = _as_shape(shape)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != shape.dim:
        raise ShapeError(f"state of dimension {psi.shape[-1]} does not match {shape.m}x{shape.n}")
    c = psi.reshape(psi.shape[:-1] + (shape.m, shape.n))
    return c @ np.conj(np.swapaxes(c, -1, -2))


def partial_trace_S(psi, shape) -> np.ndarray:
    """Reduced density matrix of the auxiliary space (``n x n``)."""
    shape = _as_shape(shape)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != shape.dim:
        raise ShapeError(f"state of dimension {psi.shape[-1]} does not match {shape.m}x{shape.n}")
    c = psi.reshape(psi.shape[:-1] + (shape.m, shape.n))
    return np.swapaxes(c, -1, -2) @ np.conj(c)


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigensolver for (stacks of) Hermitian matrices.

    Each ``(p, q)`` step removes the phase of ``a[p, q]`` and then applies a
    real plane rotation, so the combined unitary acting on columns p and q
    is ``[[c, s], [-s e^{-i phi}, c e^{-i phi}]]``.  All matrices in the
    stack are rotated together; sweeps stop once every matrix has an
    off-diagonal Frobenius norm below ``tol * ||a||_F``.

    Returns
    -------
    w : ndarray, shape (..., n)
        Real eigenvalues in descending order.
    v : ndarray, shape (..., n, n)
        Unitary whose columns are the matching eigenvectors, so that
        ``a = v @ diag(w) @ v^H``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"expected square matrices, got shape {a.shape}")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    A = a.reshape((-1, n, n)).copy()
    V = np.broadcast_to(np.eye(n, dtype=complex), A.shape).copy()
    offmask = ~np.eye(n, dtype=bool)
    scale = np.maximum(np.linalg.norm(A, axis=(1, 2)), np.finfo(float).tiny)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(A[:, offmask]) ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                g = np.abs(apq)
                rot = g > 0
                if not np.any(rot):
                    continue
                gs = np.where(rot, g, 1.0)
                phase = np.where(rot, apq / gs, 1.0)
                theta = (A[:, q, q].real - A[:, p, p].real) / (2.0 * gs)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ph = np.conj(phase)
                gpp, gpq, gqp, gqq = c, s, -s * ph, c * ph

                for M in (A, V):
                    cp = M[:, :, p].copy()
                    cq = M[:, :, q]
                    M[:, :, p] = cp * gpp[:, None] + cq * gqp[:, None]
                    M[:, :, q] = cp * gpq[:, None] + cq * gqq[:, None]
                rp = A[:, p, :].copy()
                rq = A[:, q, :]
                A[:, p, :] = rp * np.conj(gpp)[:, None] + rq * np.conj(gqp)[:, None]
                A[:, q, :] = rp * np.conj(gpq)[:, None] + rq * np.conj(gqq)[:, None]
                A[rot, p, q] = 0.0
                A[rot, q, p] = 0.0
                A[:, p, p] = A[:, p, p].real
                A[:, q, q] = A[:, q, q].real

    w = np.real(np.diagonal(A, axis1=1, axis2=2))
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n))


def eig_hermitian(rho):
    """Spectrum (descending) and eigenbasis of a Hermitian matrix or stack."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim < 2 or rho.shape[-1] != rho.shape[-2]:
        raise ShapeError(f"expected square matrices, got shape {rho.shape}")
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0)
    if herm > STATE_ATOL:
        raise ValidationError(f"matrix is not Hermitian (deviation {herm:.3g})")
    return jacobi_eigh(rho)


def schmidt_spectrum(psi, shape) -> np.ndarray:
    """Schmidt coefficients ``lambda_k`` of ``psi``, length ``m``, descending."""
    w, _ = eig_hermitian(partial_trace_A(psi, shape))
    return w


def _clamp(spec) -> np.ndarray:
    spec = np.asarray(spec, dtype=float)
    if np.any(spec < -SPECTRUM_ATOL):
        raise DomainError(f"eigenvalue {spec.min():.3g} is too negative to be rounding noise")
    return np.clip(spec, 0.0, None)


def entanglement_entropy(spec) -> np.ndarray | float:
    """Shannon entropy in bits of a spectrum, with ``0 log 0 = 0``.

    Broadcasts over leading axes; returns a float for a single spectrum.
    """
    lam = _clamp(spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    out = terms.sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def density_from_bloch(r) -> np.ndarray:
    """``(1 + r . sigma) / 2`` for a Bloch vector or an array of them."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise ShapeError("Bloch vectors have three components")
    if np.any(np.linalg.norm(r, axis=-1) > 1 + STATE_ATOL):
        raise DomainError("Bloch vector lies outside the unit ball")
    return 0.5 * (np.eye(2, dtype=complex) + np.einsum("...k,kij->...ij", r, PAULI))


def bloch_from_density(rho) -> np.ndarray:
    """Bloch vector ``r_k = tr(rho sigma_k)`` of a qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise ShapeError("Bloch representation is defined for 2x2 matrices only")
    return np.real(np.einsum("...ij,kji->...k", rho, PAULI))


def trace_distance(rho, sigma) -> np.ndarray | float:
    """``(1/2) ||rho - sigma||_1`` computed from the Jacobi spectrum."""
    w, _ = jacobi_eigh(np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex))
    out = 0.5 * np.abs(w).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out
