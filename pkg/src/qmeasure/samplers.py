"""Random states, unitaries and density-matrix ensembles.

Every sampler takes ``rng`` as either a :class:`numpy.random.Generator` or
an :class:`RngStream`.  An ``RngStream`` is turned into a fresh generator
on each call, so passing the same stream twice replays the same numbers;
hand a Generator through when consecutive calls should continue the
stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .analytic import EigenDensity, get_density
from .exceptions import ConfigurationError, DomainError, EfficiencyError
from .linalg import CompositeShape, _as_shape, bloch_from_density, jacobi_eigh, partial_trace_A

__all__ = [
    "GENERATOR_NAME",
    "RngStream",
    "EnsembleSpec",
    "as_generator",
    "haar_pure_state",
    "haar_unitary",
    "sample_induced",
    "sample_bures_qubit",
    "sample_hs_qubit",
    "bures_radius_ppf",
    "uniform_directions",
    "sample_simplex_density",
    "lift_to_density",
    "spectra_from_bloch",
    "sample_ensemble",
]

GENERATOR_NAME = "numpy.random.Philox(SeedSequence(seed, spawn_key=(stream_id,)))"

# Gaussian draws held in memory at once by sample_induced (complex entries).
_CHUNK_ENTRIES = 1 << 22
_CALIBRATION_PROPOSALS = 1 << 20
_MIN_ACCEPTANCE = 1e-6
MAX_SIMPLEX_DIM = 6


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams with equal seeds and different ids are independent children of
    the same :class:`numpy.random.SeedSequence`; bits come from Philox,
    a counter-based generator.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2**64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(seq))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


def _check_dim(dim) -> int:
    if int(dim) != dim or dim < 1:
        raise DomainError(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def _complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    z = gen.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def haar_pure_state(dim: int, rng, size: int | None = None) -> np.ndarray:
    """Uniformly distributed unit vector(s) in C^dim.

    A standard complex Gaussian vector has a unitarily invariant law, so its
    normalisation is distributed according to the unique invariant measure.
    """
    dim = _check_dim(dim)
    gen = as_generator(rng)
    shape = (dim,) if size is None else (size, dim)
    z = _complex_gaussian(gen, shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def haar_unitary(dim: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitary matrix (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix, with each column of Q multiplied by the
    phase of the matching diagonal entry of R.  Without that correction the
    result is not Haar distributed.
    """
    dim = _check_dim(dim)
    gen = as_generator(rng)
    shape = (dim, dim) if size is None else (size, dim, dim)
    q, r = np.linalg.qr(_complex_gaussian(gen, shape))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * ph[..., None, :]


def sample_induced(shape, rng, size: int | None = None) -> np.ndarray:
    """Reduced states ``tr_A |psi><psi|`` of uniformly random ``psi`` in C^m (x) C^n."""
    shape = _as_shape(shape)
    gen = as_generator(rng)
    if size is None:
        return partial_trace_A(haar_pure_state(shape.dim, gen), shape)
    chunk = max(1, _CHUNK_ENTRIES // shape.dim)
    out = np.empty((size, shape.m, shape.m), dtype=complex)
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        out[start:stop] = partial_trace_A(haar_pure_state(shape.dim, gen, stop - start), shape)
    return out


def uniform_directions(rng, size: int | None = None) -> np.ndarray:
    gen = as_generator(rng)
    shape = (3,) if size is None else (size, 3)
    v = gen.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def bures_radius_ppf(u, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Inverse of ``F(r) = (2/pi)(arcsin r - r sqrt(1 - r^2))``.

    With ``r = sin(phi/2)`` the equation becomes ``phi - sin(phi) = pi u`` on
    ``[0, pi]``, solved by Newton steps safeguarded with bisection.
    """
    u = np.asarray(u, dtype=float)
    target = math.pi * u
    lo = np.zeros_like(u)
    hi = np.full_like(u, math.pi)
    phi = np.cbrt(6.0 * target).clip(0.0, math.pi)  # phi - sin(phi) ~ phi^3 / 6
    for _ in range(max_iter):
        g = phi - np.sin(phi) - target
        lo = np.where(g < 0, phi, lo)
        hi = np.where(g > 0, phi, hi)
        dg = 1.0 - np.cos(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg > 0, g / dg, np.inf)
        new = phi - step
        bad = ~np.isfinite(new) | (new <= lo) | (new >= hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - phi) <= tol
        phi = new
        if np.all(done):
            break
    return np.where(target > 0, np.sin(0.5 * phi), 0.0)


def sample_bures_qubit(rng, size: int | None = None) -> np.ndarray:
    """Bloch vectors distributed by the normalised Bures volume of the qubit."""
    gen = as_generator(rng)
    u = gen.random(size)
    r = bures_radius_ppf(u)
    return r[..., None] * uniform_directions(gen, size)


def sample_hs_qubit(rng, size: int | None = None) -> np.ndarray:
    """Bloch vectors uniform in the unit ball (Hilbert-Schmidt volume)."""
    gen = as_generator(rng)
    r = np.cbrt(gen.random(size))
    return r[..., None] * uniform_directions(gen, size)


def spectra_from_bloch(r) -> np.ndarray:
    """Descending eigenvalues ``((1 + |r|)/2, (1 - |r|)/2)``."""
    rad = np.linalg.norm(np.asarray(r, dtype=float), axis=-1)
    return np.stack([0.5 * (1 + rad), 0.5 * (1 - rad)], axis=-1)


def _propose(gen: np.random.Generator, alpha: float, m: int, k: int) -> np.ndarray:
    if alpha == 0.5:
        # lambda = z^2/|z|^2 with z uniform on the sphere
        z = gen.standard_normal((k, m))
        z2 = z * z
        return z2 / z2.sum(axis=1, keepdims=True)
    e = gen.standard_exponential((k, m))
    return e / e.sum(axis=1, keepdims=True)


@lru_cache(maxsize=None)
def _acceptance_rate(dens: EigenDensity) -> float:
    gen = np.random.Generator(np.random.Philox(0xCA11B8A7E))
    bound = dens.envelope_bound()
    lam = _propose(gen, dens.proposal_alpha, dens.m, _CALIBRATION_PROPOSALS)
    return float(np.mean(dens.factor(lam) / bound))


def sample_simplex_density(m: int, density, rng, size: int | None = None) -> np.ndarray:
    """Rejection-sample spectra on the (m-1)-simplex from a registered eigenvalue density.

    ``density`` is an :class:`EigenDensity` or an id (``"hs"``, ``"bures"``,
    ``"induced-N"``).  Proposals are Dirichlet(``density.proposal_alpha``);
    a proposal is kept with probability ``factor / bound``.  Returned
    spectra are sorted descending.

    Raises
    ------
    ConfigurationError
        ``m`` above the supported cap, or no finite envelope bound.
    EfficiencyError
        Acceptance rate below 1e-6 on the calibration batch.
    """
    if int(m) != m or not 2 <= m <= MAX_SIMPLEX_DIM:
        raise ConfigurationError(f"simplex rejection sampling supports 2 <= m <= {MAX_SIMPLEX_DIM}")
    dens = get_density(density, int(m))
    rate = _acceptance_rate(dens)
    if rate < _MIN_ACCEPTANCE:
        raise EfficiencyError(f"acceptance rate {rate:.2e} for {dens.name} at m={m} is below 1e-6")
    bound = dens.envelope_bound()
    gen = as_generator(rng)
    want = 1 if size is None else int(size)
    batch = int(min(max(1024, 1.2 * want / rate), 1 << 20))
    kept = []
    have = 0
    while have < want:
        lam = _propose(gen, dens.proposal_alpha, dens.m, batch)
        ratio = dens.factor(lam) / bound
        if np.any(ratio > 1.0):
            raise ConfigurationError(f"envelope bound for {dens.name} was exceeded")
        acc = lam[gen.random(batch) < ratio]
        kept.append(acc)
        have += len(acc)
    out = -np.sort(-np.concatenate(kept)[:want], axis=1)
    return out[0] if size is None else out


def lift_to_density(spec, rng) -> np.ndarray:
    """``U diag(spec) U^H`` with ``U`` Haar distributed; broadcasts over a batch of spectra."""
    spec = np.asarray(spec, dtype=float)
    m = spec.shape[-1]
    size = None if spec.ndim == 1 else spec.shape[0]
    u = haar_unitary(m, rng, size)
    return (u * spec[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble to sample.

    ``kind`` is one of ``"induced"`` (uses ``m``, ``n``), ``"bures-qubit"``,
    ``"hs-qubit"`` or ``"simplex"`` (uses ``m`` and ``density``).  The
    string form round-trips through :meth:`parse`, e.g. ``induced:2,3``,
    ``bures-qubit``, ``simplex:3,hs``.
    """

    kind: str
    m: int = 2
    n: int | None = None
    density: str | None = None

    def __post_init__(self):
        if self.kind == "induced":
            if self.n is None or self.m < 1 or self.n < 1:
                raise ConfigurationError("induced ensembles need m >= 1 and n >= 1")
        elif self.kind in ("bures-qubit", "hs-qubit"):
            if self.m != 2:
                raise ConfigurationError(f"{self.kind} is a qubit ensemble (m = 2)")
        elif self.kind == "simplex":
            if self.density is None:
                raise ConfigurationError("simplex ensembles need a density id")
            get_density(self.density, self.m)
        else:
            raise ConfigurationError(f"unknown ensemble kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "EnsembleSpec":
        kind, _, args = text.strip().partition(":")
        parts = [p.strip() for p in args.split(",")] if args else []
        try:
            if kind == "induced":
                m, n = (int(p) for p in parts)
                return cls("induced", m, n)
            if kind in ("bures-qubit", "hs-qubit") and not parts:
                return cls(kind)
            if kind == "simplex":
                m, density = parts
                return cls("simplex", int(m), density=density)
        except ValueError:
            pass
        raise ConfigurationError(f"cannot parse ensemble {text!r}")

    def __str__(self) -> str:
        if self.kind == "induced":
            return f"induced:{self.m},{self.n}"
        if self.kind == "simplex":
            return f"simplex:{self.m},{self.density}"
        return self.kind


def sample_ensemble(spec: EnsembleSpec, rng, size: int):
    """Draw ``size`` members; return ``(spectra, bloch)``.

    ``bloch`` is None unless the states are qubits.  Simplex qubit spectra
    are lifted with a Haar unitary to obtain a Bloch direction.
    """
    gen = as_generator(rng)
    if spec.kind == "induced":
        rho = sample_induced(CompositeShape(spec.m, spec.n), gen, size)
        spectra, _ = jacobi_eigh(rho)
        bloch = bloch_from_density(rho) if spec.m == 2 else None
        return spectra, bloch
    if spec.kind in ("bures-qubit", "hs-qubit"):
        sampler = sample_bures_qubit if spec.kind == "bures-qubit" else sample_hs_qubit
        bloch = sampler(gen, size)
        return spectra_from_bloch(bloch), bloch
    spectra = sample_simplex_density(spec.m, spec.density, gen, size)
    bloch = bloch_from_density(lift_to_density(spectra, gen)) if spec.m == 2 else None
    return spectra, bloch
