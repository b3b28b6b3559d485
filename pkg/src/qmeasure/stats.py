"""Goodness-of-fit tests and Monte-Carlo summaries.

KS thresholds use the asymptotic Kolmogorov distribution: the default
critical value ``1.63/sqrt(n)`` corresponds to alpha ~ 0.01 and is only
offered for ``n >= 1000``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate
from scipy import stats as sps

from .analytic import EigenDensity
from .exceptions import ConfigurationError, DomainError

__all__ = [
    "KS_COEFFICIENT",
    "Histogram",
    "GofReport",
    "ks_statistic",
    "ks_test",
    "ks_2sample",
    "chi_square_simplex",
    "mean_with_stderr",
]

KS_COEFFICIENT = 1.63
KS_MIN_SAMPLES = 1000
CHI_SQUARE_ALPHA = 0.01
MIN_EXPECTED = 5.0


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int = field(default=0)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.edges.ndim != 1 or np.any(np.diff(self.edges) <= 0):
            raise DomainError("histogram edges must be strictly increasing")
        if self.counts.shape != (self.edges.size - 1,):
            raise DomainError("need one count per bin")
        if np.any(self.counts < 0):
            raise DomainError("negative bin count")
        self.total = int(self.counts.sum())

    @classmethod
    def from_samples(cls, values, edges) -> "Histogram":
        """Bin ``values``; anything outside ``[edges[0], edges[-1]]`` is dropped."""
        counts, _ = np.histogram(np.asarray(values, dtype=float), bins=np.asarray(edges, dtype=float))
        return cls(edges, counts)

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.edges, other.edges):
            raise DomainError("cannot merge histograms with different edges")
        return Histogram(self.edges, self.counts + other.counts)

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist(), "total": self.total}

    @classmethod
    def from_dict(cls, d: dict) -> "Histogram":
        h = cls(d["edges"], d["counts"])
        if h.total != d.get("total", h.total):
            raise DomainError("histogram total does not match its counts")
        return h


@dataclass(frozen=True)
class GofReport:
    """Outcome of a goodness-of-fit test.

    For ``test == "KS"`` the report passes when ``statistic <= threshold``;
    for ``"ChiSquare"`` when ``p_value >= threshold``.
    """

    test: str
    statistic: float
    n_samples: int
    threshold: float
    passed: bool
    p_value: float | None = None
    dof: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GofReport":
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)


def ks_statistic(samples, cdf) -> float:
    """``sup |F_n - F|`` for a continuous CDF ``F`` (callable, vectorised)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("KS test needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_test(samples, cdf, threshold: float | None = None) -> GofReport:
    """One-sample Kolmogorov-Smirnov test against ``cdf``.

    ``threshold`` defaults to ``1.63/sqrt(n)``; that asymptotic value needs
    ``n >= 1000``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise DomainError("KS test needs at least one sample")
    if threshold is None:
        if n < KS_MIN_SAMPLES:
            raise ConfigurationError(f"asymptotic KS threshold needs n >= {KS_MIN_SAMPLES}, got {n}")
        threshold = KS_COEFFICIENT / math.sqrt(n)
    d = ks_statistic(x, cdf)
    p = float(sps.kstwobign.sf(d * math.sqrt(n)))
    return GofReport("KS", d, n, float(threshold), d <= threshold, p_value=p)


def ks_2sample(a, b, threshold: float | None = None) -> GofReport:
    """Two-sample KS test; default threshold ``1.63 sqrt((n+m)/(n m))``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DomainError("KS test needs at least one sample in each group")
    both = np.concatenate([a, b])
    fa = np.searchsorted(a, both, side="right") / a.size
    fb = np.searchsorted(b, both, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    ne = a.size * b.size / (a.size + b.size)
    if threshold is None:
        threshold = KS_COEFFICIENT / math.sqrt(ne)
    p = float(sps.kstwobign.sf(d * math.sqrt(ne)))
    return GofReport("KS", d, int(a.size + b.size), float(threshold), d <= threshold, p_value=p)


def mean_with_stderr(values) -> tuple[float, float]:
    """Sample mean and ``sqrt(s^2 / n)`` with the unbiased variance, both via ``math.fsum``."""
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        raise DomainError("need at least two values for a standard error")
    mean = math.fsum(v.tolist()) / n
    var = math.fsum(((v - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n)


# -- chi-square on the ordered eigenvalue chamber --------------------------------------
#
# m = 2 cells are intervals of the largest eigenvalue a in [1/2, 1].
# m = 3 cells are rectangles in (a, t): a = lambda_1 in [1/3, 1] and t in [0, 1]
# places lambda_2 between lo(a) = (1-a)/2 (where lambda_2 = lambda_3) and
# hi(a) = min(a, 1-a).  The third eigenvalue vanishes only on t = 1 with a >= 1/2,
# which is where a Bures-type factor lambda^e is singular.

def _chamber_lo_hi(a):
    return 0.5 * (1.0 - a), np.minimum(a, 1.0 - a)


def _chamber_point(a, t):
    a, t = np.broadcast_arrays(a, t)
    lo, hi = _chamber_lo_hi(a)
    b = lo + t * (hi - lo)
    return np.stack([a, b, 1.0 - a - b], axis=-1), hi - lo


def _quantile_cuts(weights, grid_edges, k):
    cdf = np.concatenate([[0.0], np.cumsum(weights)])
    cdf /= cdf[-1]
    cuts = np.interp(np.linspace(0, 1, k + 1)[1:-1], cdf, grid_edges)
    return np.concatenate([[grid_edges[0]], np.unique(cuts), [grid_edges[-1]]])


def _mass_m2(dens: EigenDensity, a0: float, a1: float) -> float:
    e = dens.edge_exponent

    def smooth(a):
        lam = np.array([a, 1.0 - a])
        return float(dens.factor(lam)) * a ** e

    if e and a1 >= 1.0:
        val, _ = integrate.quad(smooth, a0, 1.0, weight="alg", wvar=(0.0, e), epsabs=1e-12, epsrel=1e-9)
        return val
    val, _ = integrate.quad(lambda a: smooth(a) * (1.0 - a) ** e, a0, a1, epsabs=1e-12, epsrel=1e-9)
    return val


def _mass_m3(dens: EigenDensity, a0: float, a1: float, t0: float, t1: float) -> float:
    e = dens.edge_exponent

    def inner(a):
        lo, hi = 0.5 * (1.0 - a), min(a, 1.0 - a)
        width = hi - lo
        if width <= 0:
            return 0.0
        if e and a >= 0.5 and t1 >= 1.0:
            # lambda_3 = width (1 - t): carry (1 - t)^e as a quadrature weight
            def smooth(t):
                b = lo + t * width
                lam = np.array([a, b, 1.0 - a - b])
                return float(dens.factor(lam)) * (a * b * width) ** e * width

            v, _ = integrate.quad(smooth, t0, 1.0, weight="alg", wvar=(0.0, e), epsabs=1e-12, epsrel=1e-8)
            return v

        def plain(t):
            b = lo + t * width
            lam = np.array([a, b, 1.0 - a - b])
            return float(dens.factor(lam)) * (a * b * (1.0 - a - b)) ** e * width

        v, _ = integrate.quad(plain, t0, t1, epsabs=1e-12, epsrel=1e-8)
        return v

    pieces = [(a0, a1)] if not a0 < 0.5 < a1 else [(a0, 0.5), (0.5, a1)]
    return sum(integrate.quad(inner, lo, hi, epsabs=1e-12, epsrel=1e-8)[0] for lo, hi in pieces)


def _merge_small(observed, expected):
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= MIN_EXPECTED:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp:
        obs[-1] += acc_o
        exp[-1] += acc_e
    return np.array(obs), np.array(exp)


def chi_square_simplex(spectra, density: EigenDensity, bins=None,
                       alpha: float = CHI_SQUARE_ALPHA) -> GofReport:
    """Pearson chi-square test of sampled spectra against an eigenvalue density.

    Spectra are sorted descending and binned on the ordered chamber.  Cell
    boundaries are placed at approximate equal-probability quantiles of the
    density (from a fine midpoint tabulation); each cell's exact probability
    then comes from adaptive quadrature, so the cut placement only affects
    power, not validity.  Cells expecting fewer than 5 counts are merged
    with their neighbours.

    ``bins`` is an int for ``m = 2`` (default 20) and a pair
    ``(slabs, cells_per_slab)`` for ``m = 3`` (default ``(10, 10)``).
    """
    lam = -np.sort(-np.asarray(spectra, dtype=float), axis=-1)
    if lam.ndim != 2 or lam.shape[1] != density.m:
        raise ConfigurationError(f"spectra must have shape (k, {density.m})")
    n = lam.shape[0]
    m = density.m

    if m == 2:
        k = 20 if bins is None else int(bins)
        grid = np.linspace(0.5, 1.0, 4001)
        mid = 0.5 * (grid[1:] + grid[:-1])
        w = density.unnormalized(np.stack([mid, 1.0 - mid], axis=-1))
        cuts = _quantile_cuts(w, grid, k)
        masses = np.array([_mass_m2(density, cuts[i], cuts[i + 1]) for i in range(cuts.size - 1)])
        idx = np.clip(np.searchsorted(cuts, lam[:, 0], side="right") - 1, 0, cuts.size - 2)
        observed = np.bincount(idx, minlength=cuts.size - 1)
    elif m == 3:
        k1, k2 = (10, 10) if bins is None else bins
        na, nt = 600, 400
        ag = np.linspace(1.0 / 3.0, 1.0, na + 1)
        tg = np.linspace(0.0, 1.0, nt + 1)
        am = 0.5 * (ag[1:] + ag[:-1])
        tm = 0.5 * (tg[1:] + tg[:-1])
        pts, width = _chamber_point(am[:, None], tm[None, :])
        w = density.unnormalized(pts) * width
        a_cuts = _quantile_cuts(w.sum(axis=1), ag, k1)
        slab_of_row = np.clip(np.searchsorted(a_cuts, am, side="right") - 1, 0, a_cuts.size - 2)
        t_cuts = [_quantile_cuts(w[slab_of_row == s].sum(axis=0), tg, k2) for s in range(a_cuts.size - 1)]

        masses = []
        for s in range(a_cuts.size - 1):
            for j in range(t_cuts[s].size - 1):
                masses.append(_mass_m3(density, a_cuts[s], a_cuts[s + 1], t_cuts[s][j], t_cuts[s][j + 1]))
        masses = np.array(masses)

        a = lam[:, 0]
        lo, hi = _chamber_lo_hi(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(np.where(hi > lo, (lam[:, 1] - lo) / (hi - lo), 0.0), 0.0, 1.0)
        slab = np.clip(np.searchsorted(a_cuts, a, side="right") - 1, 0, a_cuts.size - 2)
        offsets = np.concatenate([[0], np.cumsum([c.size - 1 for c in t_cuts])])
        idx = np.empty(n, dtype=np.int64)
        for s in range(a_cuts.size - 1):
            sel = slab == s
            j = np.clip(np.searchsorted(t_cuts[s], t[sel], side="right") - 1, 0, t_cuts[s].size - 2)
            idx[sel] = offsets[s] + j
        observed = np.bincount(idx, minlength=masses.size)
    else:
        raise ConfigurationError("chi-square binning is implemented for m = 2 and m = 3")

    expected = n * masses / masses.sum()
    obs, exp = _merge_small(observed.astype(float), expected)
    if obs.size < 2:
        raise ConfigurationError("fewer than two bins left after merging")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = int(obs.size - 1)
    p = float(sps.chi2.sf(stat, dof))
    return GofReport("ChiSquare", stat, int(n), float(alpha), p >= alpha, p_value=p, dof=dof)
