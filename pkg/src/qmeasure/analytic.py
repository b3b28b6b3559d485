"""Closed-form eigenvalue densities, marginals, entropy averages and metrics.

Conventions
-----------
* Eigenvalue densities live on the probability simplex and are densities
  with respect to the flat measure ``d lambda_1 ... d lambda_{m-1}`` (the
  last eigenvalue is ``1 - sum`` of the others).
* They are densities of *unordered* tuples.  A histogram of descending
  sorted spectra sees ``m!`` times this density on the ordered chamber.
* Entropies are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .exceptions import ConfigurationError, DomainError, EfficiencyError, ShapeError, ValidationError
from .linalg import STATE_ATOL, jacobi_eigh

__all__ = [
    "SINGULAR",
    "EigenDensity",
    "get_density",
    "haar_normalization",
    "simplex_integral",
    "density_induced",
    "density_bures",
    "density_hs",
    "density_p22_bloch",
    "density_hs_bloch",
    "density_bures_bloch",
    "bures_bloch_constant",
    "radial_density_uniform_ball",
    "radial_cdf_uniform_ball",
    "radial_density_bures",
    "radial_cdf_bures",
    "BlochRadialLaw",
    "avg_entropy_induced_2N",
    "avg_entropy_page",
    "expected_entropy",
    "marginal_x_density",
    "marginal_x_cdf",
    "overlap_density",
    "overlap_cdf",
    "radial_density_induced",
    "radial_cdf_induced",
    "diagonal_density",
    "diagonal_marginal_cdf",
    "bures_line_element",
    "bures_quadratic_form",
    "perturbation_from_generators",
    "hs_line_element",
    "bures_bloch_line_element",
]

#: Value returned where a density or line element diverges.
SINGULAR = math.inf

SERIES_MAX_N = 60
LOG2E = math.log2(math.e)
_SIMPLEX_ATOL = 1e-10


def haar_normalization(d: int) -> float:
    """Normalisation ``(d-1)!/pi^d`` of the uniform measure on unit vectors in C^d."""
    if d < 1:
        raise DomainError("dimension must be positive")
    return math.exp(_log_haar_normalization(d))


def _log_haar_normalization(d: int) -> float:
    return math.lgamma(d) - d * math.log(math.pi)


def _check_simplex(lam, m: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != m:
        raise ShapeError(f"expected spectra of length {m}, got {lam.shape[-1]}")
    if np.any(lam < -_SIMPLEX_ATOL) or np.any(np.abs(lam.sum(axis=-1) - 1.0) > _SIMPLEX_ATOL):
        raise DomainError("spectrum is not on the probability simplex")
    return np.clip(lam, 0.0, None)


def _vandermonde_sq(lam) -> np.ndarray:
    m = lam.shape[-1]
    if lam.ndim == 1:
        # scalar path, hit once per quadrature node
        x = lam.tolist()
        return math.prod((x[j] - x[k]) ** 2 for j in range(m) for k in range(j + 1, m))
    out = np.ones(lam.shape[:-1])
    for j in range(m):
        for k in range(j + 1, m):
            out = out * (lam[..., j] - lam[..., k]) ** 2
    return out


def _bures_pair_factor(lam) -> np.ndarray:
    m = lam.shape[-1]
    if lam.ndim == 1:
        x = lam.tolist()
        return math.prod((x[j] - x[k]) ** 2 / (x[j] + x[k]) if x[j] + x[k] > 0 else 0.0
                         for j in range(m) for k in range(j + 1, m))
    out = np.ones(lam.shape[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(m):
            for k in range(j + 1, m):
                s = lam[..., j] + lam[..., k]
                out = out * np.where(s > 0, (lam[..., j] - lam[..., k]) ** 2 / np.where(s > 0, s, 1.0), 0.0)
    return out


def simplex_integral(func, m: int, edge_exponent: float = 0.0,
                     epsabs: float = 1e-13, epsrel: float = 1e-11) -> float:
    """Integrate ``func(lam) * prod(lam_k ** edge_exponent)`` over the (m-1)-simplex.

    Adaptive Gauss-Kronrod; the product factor, which may be singular on the
    faces, is handled as an algebraic quadrature weight rather than sampled.
    ``func`` takes a length-``m`` array.  Only ``m = 2`` (one quad) and
    ``m = 3`` (nested quad) are supported.
    """
    e = edge_exponent
    smooth = func

    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=400)
    if m == 2:
        if e:
            kw.update(weight="alg", wvar=(e, e))
        val, _ = integrate.quad(lambda a: smooth(np.array([a, 1.0 - a])), 0.0, 1.0, **kw)
        return val

    if m == 3:
        def inner(a):
            ikw = dict(kw, weight="alg", wvar=(e, e)) if e else kw
            v, _ = integrate.quad(lambda b: smooth(np.array([a, b, 1.0 - a - b])), 0.0, 1.0 - a, **ikw)
            return v

        okw = dict(kw, weight="alg", wvar=(e, 0.0)) if e else kw
        val, _ = integrate.quad(inner, 0.0, 1.0, **okw)
        return val
    raise ConfigurationError(f"simplex quadrature is implemented for m <= 3, got m={m}")


@lru_cache(maxsize=None)
def _quadrature_log_constant(kind: str, m: int, n: int | None) -> float:
    """``-log`` of the simplex integral of ``factor * prod(lambda ** edge_exponent)``."""
    dens = EigenDensity(kind, m, n)
    total = simplex_integral(lambda lam: float(dens.factor(lam)), m, dens.edge_exponent,
                             epsabs=1e-12, epsrel=1e-9)
    return -math.log(total)


@dataclass(frozen=True)
class EigenDensity:
    """Eigenvalue density of an ensemble of ``m x m`` density matrices.

    ``kind`` is ``"induced"`` (needs ``n >= m``), ``"bures"``, ``"hs"`` or
    ``"uniform"`` (flat on the simplex; a negative control).
    Normalisation is exact for ``m = 2``, by quadrature for ``m = 3`` and
    absent for larger ``m`` (``normalized`` is then False and calling the
    object returns the unnormalised value).
    """

    kind: str
    m: int
    n: int | None = None

    def __post_init__(self):
        if self.kind not in ("induced", "bures", "hs", "uniform"):
            raise ConfigurationError(f"unknown eigenvalue density kind {self.kind!r}")
        if self.m < 2:
            raise DomainError("eigenvalue densities need m >= 2")
        if self.kind == "induced":
            if self.n is None or self.n < self.m:
                raise DomainError("induced density needs n >= m; swap the subsystems first")
        elif self.n is not None:
            raise ConfigurationError(f"{self.kind} density takes no auxiliary dimension")

    @property
    def name(self) -> str:
        return f"induced-{self.n}" if self.kind == "induced" else self.kind

    @property
    def proposal_alpha(self) -> float:
        """Dirichlet exponent of the rejection proposal.

        The Bures factor ``prod lambda^{-1/2}`` is absorbed by proposing
        ``lambda = z^2 / |z|^2`` with ``z`` uniform on the sphere, which is
        Dirichlet(1/2).  Everything else uses uniform proposals.
        """
        return 0.5 if self.kind == "bures" else 1.0

    @property
    def edge_exponent(self) -> float:
        """Exponent e with ``unnormalized = factor * prod(lambda_k ** e)``."""
        return self.proposal_alpha - 1.0

    @property
    def log_scale(self) -> float:
        """``log(unnormalized / (factor * prod(lambda ** edge_exponent)))``.

        The induced factor is evaluated as ``prod (m lambda)^(n-m)`` so that it
        stays O(1) near the centre of the simplex instead of underflowing.
        """
        if self.kind == "induced":
            return -self.m * (self.n - self.m) * math.log(self.m)
        return 0.0

    def factor(self, lam) -> np.ndarray:
        """Part of the unnormalised density left after dividing out the proposal kernel (up to ``log_scale``)."""
        lam = np.asarray(lam, dtype=float)
        if self.kind == "hs":
            return _vandermonde_sq(lam)
        if self.kind == "uniform":
            return np.ones(lam.shape[:-1]) if lam.ndim > 1 else 1.0
        if self.kind == "bures":
            return _bures_pair_factor(lam)
        # prod(m lambda) <= 1 on the simplex, so the log form cannot overflow
        with np.errstate(divide="ignore"):
            logp = np.sum(np.log(self.m * lam), axis=-1)
        return _vandermonde_sq(lam) * np.exp((self.n - self.m) * logp)

    def _scaled(self, lam) -> np.ndarray:
        f = self.factor(lam)
        if self.kind != "bures":
            return f
        p = np.prod(lam, axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(p > 0, f / np.sqrt(np.where(p > 0, p, 1.0)), SINGULAR)

    def unnormalized(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        f = self._scaled(lam)
        return f * math.exp(self.log_scale) if self.log_scale else f

    @property
    def log_factor_constant(self) -> float | None:
        """``log`` of ``1 / integral(factor * prod(lambda ** edge_exponent))``, or None for m > 3."""
        if self.kind == "uniform":
            return math.lgamma(self.m)
        if self.m == 2:
            if self.kind == "hs":
                return math.log(3.0)
            if self.kind == "bures":
                return math.log(2.0 / math.pi)
            n = self.n
            return math.lgamma(2 * n) - math.log(2) - math.lgamma(n - 1) - math.lgamma(n) + self.log_scale
        if self.m == 3:
            return _quadrature_log_constant(self.kind, self.m, self.n)
        return None

    @property
    def constant(self) -> float | None:
        """Normalisation constant multiplying :meth:`unnormalized`."""
        lc = self.log_factor_constant
        if lc is None:
            return None
        return math.exp(lc - self.log_scale) if lc - self.log_scale < 709.0 else math.inf

    @property
    def normalized(self) -> bool:
        return self.log_factor_constant is not None

    def __call__(self, lam):
        """Normalised density, or :meth:`unnormalized` when no constant is available."""
        lam = _check_simplex(lam, self.m)
        lc = self.log_factor_constant
        val = self.unnormalized(lam) if lc is None else math.exp(lc) * self._scaled(lam)
        return float(val) if np.ndim(val) == 0 else val

    def envelope_bound(self) -> float:
        return _envelope_bound(self)


@lru_cache(maxsize=None)
def _envelope_bound(dens: EigenDensity) -> float:
    """Upper bound of ``factor`` on the simplex: coarse search, local polish, 10% margin."""
    m = dens.m
    rng = np.random.default_rng(0x5EED)
    pts = rng.dirichlet(np.ones(m), size=20000)
    vals = dens.factor(pts)
    if not np.all(np.isfinite(vals)):
        raise ConfigurationError(f"density {dens.name} has no finite envelope on the simplex")

    def neg(z):
        w = np.exp(z - z.max())
        return -float(dens.factor(w / w.sum()))

    best = float(vals.max())
    for i in np.argsort(vals)[-8:]:
        res = optimize.minimize(neg, np.log(pts[i]), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        best = max(best, -res.fun)
    if not math.isfinite(best):
        raise ConfigurationError(f"density {dens.name} has no finite envelope on the simplex")
    if best <= 0:
        raise EfficiencyError(f"proposal search found no mass for {dens.name}; acceptance would be negligible")
    return 1.1 * best


def get_density(density, m: int) -> EigenDensity:
    """Resolve ``"hs"``, ``"bures"``, ``"uniform"`` or ``"induced-N"`` to an :class:`EigenDensity`."""
    if isinstance(density, EigenDensity):
        if density.m != m:
            raise ShapeError(f"density is for m={density.m}, not m={m}")
        return density
    if density in ("hs", "bures", "uniform"):
        return EigenDensity(density, m)
    if isinstance(density, str) and density.startswith("induced-"):
        try:
            n = int(density.split("-", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad density id {density!r}") from None
        return EigenDensity("induced", m, n)
    raise ConfigurationError(f"unknown density id {density!r}")


def density_induced(spec, m: int, n: int):
    """Eigenvalue density of the reduced state of a random ``m x n`` pure state."""
    return EigenDensity("induced", m, n)(spec)


def density_bures(spec, m: int):
    """Bures-volume eigenvalue density; returns :data:`SINGULAR` on the boundary."""
    return EigenDensity("bures", m)(spec)


def density_hs(spec, m: int):
    return EigenDensity("hs", m)(spec)


# -- qubit (Bloch ball) densities ------------------------------------------------

def _check_radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1):
        raise DomainError("Bloch radius must lie in [0, 1]")
    return r


def density_p22_bloch(r=0.0):
    """Bloch-ball density of the two-qubit induced ensemble: uniform, 3/(4 pi)."""
    r = _check_radius(r)
    out = np.full(r.shape, 3.0 / (4.0 * math.pi))
    return float(out) if out.ndim == 0 else out


def density_hs_bloch(r=0.0):
    """Bloch-ball density of the Hilbert-Schmidt ensemble: uniform, 3/(4 pi)."""
    return density_p22_bloch(r)


@lru_cache(maxsize=None)
def bures_bloch_constant() -> float:
    """Normalisation ``c`` of ``c (1 - r^2)^{-1/2}`` over the unit ball.

    Found by quadrature with the ``(1 - r)^{-1/2}`` endpoint factor handled
    as an algebraic weight; the result is ``1/pi^2``.
    """
    val, _ = integrate.quad(lambda r: 4.0 * math.pi * r * r / math.sqrt(1.0 + r), 0.0, 1.0,
                            weight="alg", wvar=(0.0, -0.5), epsabs=1e-14, epsrel=1e-13)
    return 1.0 / val


def density_bures_bloch(r):
    r = _check_radius(r)
    c = bures_bloch_constant()
    with np.errstate(divide="ignore"):
        out = np.where(r < 1.0, c / np.sqrt(np.where(r < 1.0, 1.0 - r * r, 1.0)), SINGULAR)
    return float(out) if out.ndim == 0 else out


def radial_density_uniform_ball(r):
    r = _check_radius(r)
    return 3.0 * r * r


def radial_cdf_uniform_ball(r):
    return np.clip(np.asarray(r, dtype=float), 0.0, 1.0) ** 3


def radial_density_bures(r):
    """Radial law ``4 pi r^2 c (1 - r^2)^{-1/2}`` of Bures qubit states."""
    r = _check_radius(r)
    return 4.0 * math.pi * r * r * density_bures_bloch(r)


def radial_cdf_bures(r):
    """``(2/pi) (arcsin r - r sqrt(1 - r^2))``."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
    return (2.0 / math.pi) * (np.arcsin(r) - r * np.sqrt(1.0 - r * r))


class BlochRadialLaw:
    """Radial CDF of an isotropic Bloch-ball density, built by quadrature.

    Works in the angle ``theta`` with ``r = sin(theta)``: the integrand
    ``4 pi sin^2(theta) rho(sin theta) cos(theta)`` stays bounded even when
    ``rho`` diverges like ``(1 - r^2)^{-1/2}`` at the surface, so a fixed
    Gauss-Legendre rule per grid cell is accurate.  The CDF is tabulated on
    the uniform ``theta`` grid and interpolated linearly in ``theta``.
    ``total`` is the integral over the whole ball (1 for a normalised
    density).  ``density`` must accept arrays of radii in ``[0, 1)``.
    """

    def __init__(self, density, cells: int = 8192, order: int = 16):
        self.density = density
        theta = np.linspace(0.0, 0.5 * math.pi, cells + 1)
        x, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * (theta[1] - theta[0])
        nodes = 0.5 * (theta[1:] + theta[:-1])[:, None] + half * x[None, :]
        r = np.sin(nodes)
        vals = 4.0 * math.pi * r * r * np.asarray(density(np.minimum(r, np.nextafter(1.0, 0.0)))) * np.cos(nodes)
        pieces = half * (vals @ w)
        self._theta = theta
        self._cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self.total = float(self._cum[-1])

    def cdf(self, r):
        th = np.arcsin(np.clip(np.asarray(r, dtype=float), 0.0, 1.0))
        return np.interp(th, self._theta, self._cum) / self.total

    __call__ = cdf


# -- average entanglement entropy -------------------------------------------------

def _series_2N_exact(n: int) -> Fraction:
    pref = Fraction(math.factorial(2 * n - 1), math.factorial(n - 2) * math.factorial(n - 1) * 4 ** (n - 1))
    total = Fraction(0)
    odd = Fraction(0)
    for s in range(n - 1):
        # odd harmonic sum up to t = s + 1
        if s == 0:
            odd = Fraction(1) + Fraction(1, 3)
        else:
            odd += Fraction(1, 2 * s + 3)
        term = Fraction(math.comb(n - 2, s), (s + 2) * (2 * s + 3)) * odd
        total += -term if s % 2 else term
    return pref * total


def avg_entropy_induced_2N(n: int, method: str = "auto") -> float:
    """Mean entanglement entropy (bits) of a qubit randomly correlated with C^n.

    ``method="series"`` evaluates the binomial double sum in exact rational
    arithmetic (allowed for ``n <= 60``); ``"page"`` uses the harmonic-sum
    formula; ``"auto"`` picks the series up to ``n = 60``.
    """
    if int(n) != n or n < 2:
        raise DomainError("the qubit series needs n >= 2")
    n = int(n)
    if method == "auto":
        method = "series" if n <= SERIES_MAX_N else "page"
    if method == "page":
        return avg_entropy_page(2, n)
    if method != "series":
        raise ConfigurationError(f"unknown method {method!r}")
    if n > SERIES_MAX_N:
        raise DomainError(f"series evaluation is restricted to n <= {SERIES_MAX_N}")
    return float(_series_2N_exact(n)) * LOG2E


def avg_entropy_page(m: int, n: int, swap: bool = True) -> float:
    """``(sum_{k=n+1}^{mn} 1/k - (m-1)/(2n)) log2 e`` for ``m <= n``."""
    if m < 1 or n < 1:
        raise DomainError("dimensions must be positive")
    if m > n:
        if not swap:
            raise DomainError("Page formula needs m <= n")
        m, n = n, m
    harmonic = math.fsum(1.0 / k for k in range(n + 1, m * n + 1))
    return (harmonic - (m - 1) / (2.0 * n)) * LOG2E


def _entropy_bits(lam) -> float:
    return -math.fsum(x * math.log2(x) for x in lam.tolist() if x > 0)


def expected_entropy(density: EigenDensity, epsrel: float = 1e-10) -> float:
    """Mean entropy under a normalised eigenvalue density, by simplex quadrature."""
    if not density.normalized:
        raise ConfigurationError("expected entropy needs a normalised density")
    c = math.exp(density.log_factor_constant)
    return simplex_integral(lambda lam: c * float(density.factor(lam)) * _entropy_bits(lam),
                            density.m, density.edge_exponent, epsabs=1e-12, epsrel=epsrel)


# -- marginals of the randomly correlated qubit ------------------------------------

def _check_unit(x, n: int) -> np.ndarray:
    if int(n) != n or n < 2:
        raise DomainError("marginal densities need n >= 2")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("argument must lie in [0, 1]")
    return x


def marginal_x_density(x, n: int):
    """Density of the diagonal weight ``x_1``: Beta(n, n)."""
    x = _check_unit(x, n)
    logc = _log_haar_normalization(2 * n) - 2 * _log_haar_normalization(n)
    with np.errstate(divide="ignore"):
        return np.exp(logc + (n - 1) * np.log(x * (1.0 - x)))


def marginal_x_cdf(x, n: int):
    return special.betainc(n, n, _check_unit(x, n))


def overlap_density(y, n: int):
    """Density ``(n-1)(1-y)^{n-2}`` of ``|<a|b>|^2`` for independent uniform a, b in C^n."""
    y = _check_unit(y, n)
    c = math.pi * math.exp(_log_haar_normalization(n) - _log_haar_normalization(n - 1))
    return c * (1.0 - y) ** (n - 2)


def overlap_cdf(y, n: int):
    y = _check_unit(y, n)
    return 1.0 - (1.0 - y) ** (n - 1)


def radial_density_induced(r, n: int):
    """Density of ``r = lambda_1 - lambda_2`` for a qubit correlated with C^n."""
    r = _check_unit(r, n)
    logc = math.lgamma(2 * n) - math.log(2) - math.lgamma(n) - math.lgamma(n - 1)
    with np.errstate(divide="ignore"):
        tail = (n - 2) * np.log((1.0 - r * r) / 4.0) if n > 2 else 0.0
        return r * r * np.exp(logc + tail)


def radial_cdf_induced(r, n: int):
    """CDF of :func:`radial_density_induced`; ``r^2`` is Beta(3/2, n-1)."""
    r = _check_unit(r, n)
    return special.betainc(1.5, n - 1, r * r)


def diagonal_density(x, n: int):
    """Joint density of the diagonal entries of an induced ``m x m`` state (Dirichlet(n, ..., n)).

    ``x`` has shape ``(..., m)`` and is evaluated w.r.t. ``dx_1 ... dx_{m-1}``.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    x = _check_simplex(x, m)
    logc = _log_haar_normalization(m * n) - m * _log_haar_normalization(n)
    with np.errstate(divide="ignore"):
        tail = (n - 1) * np.sum(np.log(x), axis=-1) if n > 1 else np.zeros(x.shape[:-1])
        return np.exp(logc + tail)


def diagonal_marginal_cdf(x, m: int, n: int):
    """CDF of a single diagonal entry: Beta(n, (m-1) n)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return special.betainc(n, (m - 1) * n, x)


# -- line elements ---------------------------------------------------------------------

def _check_perturbation(drho) -> np.ndarray:
    drho = np.asarray(drho, dtype=complex)
    if drho.ndim != 2 or drho.shape[0] != drho.shape[1]:
        raise ShapeError("perturbation must be a square matrix")
    if np.max(np.abs(drho - drho.conj().T), initial=0.0) > STATE_ATOL:
        raise ValidationError("perturbation is not Hermitian")
    return drho


def bures_line_element(rho, drho) -> float:
    """``ds^2 = 2 sum_{jk} |<j|drho|k>|^2 / (lambda_j + lambda_k)`` in the eigenbasis of rho."""
    rho = np.asarray(rho, dtype=complex)
    drho = _check_perturbation(drho)
    if rho.shape != drho.shape:
        raise ShapeError("state and perturbation differ in shape")
    if abs(np.trace(drho)) > STATE_ATOL:
        raise ValidationError("perturbation must be traceless")
    lam, u = jacobi_eigh(rho)
    pair = lam[:, None] + lam[None, :]
    if np.any(pair <= 1e-12):
        return SINGULAR
    d = u.conj().T @ drho @ u
    return float(2.0 * np.sum(np.abs(d) ** 2 / pair))


def bures_quadratic_form(lam, dlam, dx, dy) -> float:
    """``sum dlam^2/lam + 4 sum_{j<k} (lam_j - lam_k)^2/(lam_j + lam_k) (dx_jk^2 + dy_jk^2)``.

    ``dx`` and ``dy`` are ``m x m`` arrays of which only the strict upper
    triangle is read.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.size
    if np.any(lam <= 0):
        return SINGULAR
    iu = np.triu_indices(m, 1)
    lj, lk = lam[iu[0]], lam[iu[1]]
    dx = np.asarray(dx, dtype=float)[iu]
    dy = np.asarray(dy, dtype=float)[iu]
    radial = math.fsum(np.asarray(dlam, dtype=float) ** 2 / lam)
    angular = math.fsum(4.0 * (lj - lk) ** 2 / (lj + lk) * (dx * dx + dy * dy))
    return radial + angular


def perturbation_from_generators(lam, basis, dlam, dx, dy) -> np.ndarray:
    """First-order change of ``rho = V diag(lam) V^H`` under an eigenvalue shift and a unitary step.

    Returns ``V (dLambda + [dU, diag(lam)]) V^H`` with
    ``dU = sum_{j<k} (dx_jk + i dy_jk)|j><k| - h.c.``.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.size
    du = np.triu(np.asarray(dx, dtype=float) + 1j * np.asarray(dy, dtype=float), 1)
    du = du - du.conj().T
    lam_mat = np.diag(lam).astype(complex)
    local = np.diag(np.asarray(dlam, dtype=float)).astype(complex) + du @ lam_mat - lam_mat @ du
    v = np.asarray(basis, dtype=complex).reshape(m, m)
    return v @ local @ v.conj().T


def hs_line_element(drho) -> float:
    """``tr(drho^2)``."""
    drho = _check_perturbation(drho)
    return float(np.real(np.trace(drho @ drho)))


def bures_bloch_line_element(r, dr) -> float:
    """Bures ``ds^2`` for a qubit in Bloch coordinates: ``|dr|^2 + (r.dr)^2 / (1 - r^2)``.

    This is the round metric of the unit 3-sphere written in the chart
    ``r = sin(chi) n``.
    """
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    r2 = float(r @ r)
    if r2 >= 1.0:
        return SINGULAR
    return float(dr @ dr + (r @ dr) ** 2 / (1.0 - r2))
