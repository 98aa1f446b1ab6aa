"""Densities of walk sums: exact convolution, contour integral, Gaussian leading term.

Three independent engines serve every comparison:

* fft_exact builds the full pmf/pdf table by convolution (direct convolution
  below a size threshold, FFT above it, with a relative noise floor),
* saddle evaluates the tilted contour integral at one location,
* gaussian_asymptotic is the closed-form leading term.

Midpoint laws (the law of the walk's value at the split of a pinned walk) are
derived from the convolution tables and power both the coupler and the
Gaussian-approximation diagnostics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve

from .cramer import solve_saddle
from .errors import GridTooCoarseError, NumericError, SpecError, TableUnderflowError
from .jump_dist import JumpDistribution

_FFT_MIN = 4096          # direct convolution below this output size, FFT above
_FFT_FLOOR = 1e-13       # FFT results below max*this are noise; zero them
MIN_SADDLE_N = 32        # auto engine switches to the contour integral here


# ---------------------------------------------------------------------------
# convolution machinery


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out_len = a.size + b.size - 1
    if out_len < _FFT_MIN:
        w = np.convolve(a, b)
    else:
        w = fftconvolve(a, b)
        w[w < w.max() * _FFT_FLOOR] = 0.0
    return w / w.sum()


def _trim(origin: int, w: np.ndarray, unbounded_tail: bool) -> tuple[int, np.ndarray]:
    # drop exact zeros at the ends; for laws with an infinite tail also drop
    # entries so small that conditioning on them is meaningless
    cut = w.max() * 1e-30 if unbounded_tail else 0.0
    nz = np.flatnonzero(w > cut)
    if nz.size == 0:
        raise TableUnderflowError("convolution table lost all mass")
    lo, hi = int(nz[0]), int(nz[-1])
    w = w[lo:hi + 1].copy()
    return origin + lo, w / w.sum()


def walk_pmf_tables(dist: JumpDistribution, sizes) -> dict:
    """Normalized pmf tables {size: (origin, probs)} for every requested size.

    Built by halving recursion so a dyadic family of sizes shares work; the
    identical arrays back both sampling backends.
    """
    if dist.kind != "discrete":
        raise SpecError("walk_pmf_tables needs a discrete law")
    unbounded = not math.isfinite(dist.support_hi) or not math.isfinite(dist.support_lo)
    base = dist.pmf_table()
    tables: dict[int, tuple[int, np.ndarray]] = {1: base}

    def build(s: int) -> tuple[int, np.ndarray]:
        if s in tables:
            return tables[s]
        k, m = s // 2, s - s // 2
        (ko, kw), (mo, mw) = build(k), build(m)
        origin, w = _trim(ko + mo, _conv(kw, mw), unbounded)
        tables[s] = (origin, w)
        return tables[s]

    for s in sorted(set(int(s) for s in sizes)):
        if s < 1:
            raise SpecError(f"table size must be >= 1, got {s}")
        build(s)
    return tables


# ---------------------------------------------------------------------------
# density tables


@dataclass
class DensityTable:
    """Log density of the N-step sum on a lattice (pmf) or uniform grid (pdf_grid)."""

    n: int
    kind: str               # 'pmf' | 'pdf_grid'
    origin: float
    step: float
    log_values: np.ndarray
    engine: str

    def mass(self) -> float:
        w = np.exp(self.log_values - self.log_values.max())
        total = w.sum() * math.exp(self.log_values.max())
        return total * (self.step if self.kind == "pdf_grid" else 1.0)

    def log_value_at(self, x: float) -> float:
        """Log pmf at a lattice point, or log pdf linearly interpolated."""
        pos = (x - self.origin) / self.step
        if self.kind == "pmf":
            idx = int(round(pos))
            if abs(pos - idx) > 1e-9 or not 0 <= idx < self.log_values.size:
                return -math.inf
            return float(self.log_values[idx])
        if not 0 <= pos <= self.log_values.size - 1:
            return -math.inf
        i = min(int(pos), self.log_values.size - 2)
        frac = pos - i
        return float((1 - frac) * self.log_values[i] + frac * self.log_values[i + 1])


def pmf_exact_convolution(dist: JumpDistribution, N: int) -> DensityTable:
    """Exact pmf of the N-step sum by halving convolutions."""
    if N < 1:
        raise SpecError(f"N must be >= 1, got {N}")
    origin, w = walk_pmf_tables(dist, {N})[N]
    with np.errstate(divide="ignore"):
        logv = np.where(w > 0, np.log(np.clip(w, 1e-320, None)), -np.inf)
    return DensityTable(n=N, kind="pmf", origin=origin, step=1.0,
                        log_values=logv, engine="fft_exact")


def pdf_grid_convolution(dist: JumpDistribution, N: int, h: float | None = None) -> DensityTable:
    """Sampled-density convolution for continuous laws.

    The density is sampled on a step-h grid and convolved N-fold, which
    carries an O(h^2) discretization bias; h defaults to sd/96.  Mass drift
    beyond 1e-4 before renormalization raises GridTooCoarseError.
    """
    if dist.kind != "continuous":
        raise SpecError("pdf_grid_convolution needs a continuous law")
    if N < 1:
        raise SpecError(f"N must be >= 1, got {N}")
    sd = math.sqrt(dist.variance())
    if h is None:
        h = sd / 96.0
    mean = dist.mean()
    lo = dist.support_lo if math.isfinite(dist.support_lo) else mean - 40.0 * sd
    hi = dist.support_hi if math.isfinite(dist.support_hi) else mean + 40.0 * sd
    grid = np.arange(lo, hi + h / 2, h)
    f = np.array([math.exp(max(dist.log_weight(float(x)), -700.0)) for x in grid])
    # trapezoid cell masses: half-weight endpoints keep support edges second order
    f[0] *= 0.5
    f[-1] *= 0.5
    mass = f.sum() * h
    if abs(mass - 1.0) > 1e-4:
        raise GridTooCoarseError(
            f"one-step grid mass {mass:.6g} drifts beyond 1e-4; shrink h")
    f /= f.sum()                      # unit discrete mass; h carried separately

    tables = {1: (0, f)}

    def build(s):
        if s in tables:
            return tables[s]
        k, m = s // 2, s - s // 2
        (ko, kw), (mo, mw) = build(k), build(m)
        w = _conv(kw, mw)
        nz = np.flatnonzero(w > w.max() * 1e-16)
        o = ko + mo + int(nz[0])
        tables[s] = (o, w[nz[0]:nz[-1] + 1] / w[nz[0]:nz[-1] + 1].sum())
        return tables[s]

    off, w = build(N)
    dens = w / h                     # back to density units
    with np.errstate(divide="ignore"):
        logv = np.where(dens > 0, np.log(np.clip(dens, 1e-320, None)), -np.inf)
    return DensityTable(n=N, kind="pdf_grid", origin=N * lo + off * h, step=h,
                        log_values=logv, engine="fft_exact")


def density_saddle(dist: JumpDistribution, N: int, z: float) -> float:
    """Log density (or log pmf) of the N-step sum at slope z via the tilted
    contour integral; exact up to quadrature error."""
    if N < 1:
        raise SpecError(f"N must be >= 1, got {N}")
    sd = solve_saddle(dist, z)
    u, G = sd.u_z, sd.g_value

    if dist.kind == "discrete":
        l = N * z
        if abs(l - round(l)) > 1e-6:
            raise SpecError(f"slope {z} does not hit the lattice at N={N}")
        K = 8 * math.ceil(math.sqrt(N))

        def trap(k_panels):
            y = -math.pi + 2.0 * math.pi * np.arange(k_panels) / k_panels
            lam = dist.log_mgf_complex(u, y)
            w = N * (lam - (u + 1j * y) * z - G)
            return float(np.exp(w).real.mean())

        val, val2 = trap(K), trap(2 * K)
        if not val2 > 0:
            raise NumericError(f"contour integral non-positive at N={N}, z={z}")
        if abs(val - val2) > 1e-8 * abs(val2):
            val3 = trap(4 * K)
            if abs(val2 - val3) > 1e-6 * abs(val3):
                warnings.warn(f"contour integral refinement moved by "
                              f"{abs(val2 - val3) / abs(val3):.2e} at N={N}")
            val2 = val3
        return N * G + math.log(val2)

    sig2 = sd.sigma_z_sq

    def exponent(y):
        lam = dist.log_mgf_complex(u, np.array([y]))[0]
        return N * (lam - (u + 1j * y) * z - G)

    # truncate where the integrand has decayed to exp(-40)
    y_max = 3.0 * math.sqrt(80.0 / (N * sig2))
    for _ in range(80):
        if exponent(y_max).real < -40.0:
            break
        y_max *= 2.0
    else:
        raise NumericError("contour integrand refuses to decay; no valid truncation")

    val, _err = quad(lambda y: math.exp(min(exponent(y).real, 50.0))
                     * math.cos(exponent(y).imag), 0.0, y_max,
                     limit=300, epsabs=1e-13, epsrel=1e-9)
    if not val > 0:
        raise NumericError(f"contour integral non-positive at N={N}, z={z}")
    return N * G + math.log(val / math.pi)


def density_gaussian_asymptotic(dist: JumpDistribution, N: int, z: float) -> float:
    """Leading Gaussian term N G_z - log sqrt(2 pi N sigma_z^2)."""
    if N < 1:
        raise SpecError(f"N must be >= 1, got {N}")
    sd = solve_saddle(dist, z)
    return N * sd.g_value - 0.5 * math.log(2.0 * math.pi * N * sd.sigma_z_sq)


def density(dist: JumpDistribution, N: int, z: float,
            engine: str = "auto", min_N: int = MIN_SADDLE_N) -> float:
    """Log density at slope z by the chosen engine ('auto' prefers the exact
    table below min_N and the contour integral above)."""
    if engine == "auto":
        engine = "fft_exact" if N < min_N else "saddle"
    if engine == "saddle":
        return density_saddle(dist, N, z)
    if engine == "gaussian_asymptotic":
        return density_gaussian_asymptotic(dist, N, z)
    if engine != "fft_exact":
        raise SpecError(f"unknown engine {engine!r}")
    if dist.kind == "discrete":
        table = pmf_exact_convolution(dist, N)
    else:
        table = pdf_grid_convolution(dist, N)
    val = table.log_value_at(N * z)
    if val == -math.inf:
        raise TableUnderflowError(f"location {N * z} not attainable at N={N}")
    return val


# ---------------------------------------------------------------------------
# midpoint laws


@dataclass
class MidpointLaw:
    """Conditional law of the walk's value after n of n+m steps, given the
    endpoint z.  Discrete supports are lattice arrays; continuous supports are
    uniform grids with linearly interpolated CDF."""

    n: int
    m: int
    z: float
    kind: str
    support: np.ndarray
    log_weights: np.ndarray
    cdf: np.ndarray
    normalizer: float           # log density of the endpoint under n+m steps

    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def quantile(self, u: float) -> float:
        if not 0.0 <= u <= 1.0:
            raise SpecError(f"quantile argument must lie in [0,1], got {u}")
        if self.kind == "discrete":
            idx = int(np.searchsorted(self.cdf, u, side="left"))
            idx = min(idx, self.support.size - 1)
            return float(self.support[idx])
        return float(np.interp(u, self.cdf, self.support))

    def cdf_at(self, x: float) -> float:
        if self.kind == "discrete":
            idx = int(np.searchsorted(self.support, x, side="right")) - 1
            if idx < 0:
                return 0.0
            return float(self.cdf[min(idx, self.cdf.size - 1)])
        return float(np.interp(x, self.support, self.cdf))


def midpoint_law(dist: JumpDistribution, n: int, m: int, z: float) -> MidpointLaw:
    """Exact discrete midpoint law from the convolution tables."""
    if dist.kind != "discrete":
        return midpoint_law_continuous(dist, n, m, z)
    if abs(n - m) > 1:
        raise SpecError(f"midpoint split must be balanced, got n={n}, m={m}")
    if n < 1 or m < 1:
        raise SpecError("midpoint split needs n, m >= 1")
    l = int(round(z))
    if abs(z - l) > 1e-9:
        raise SpecError(f"endpoint {z} is not a lattice point")
    tables = walk_pmf_tables(dist, {n, m, n + m})
    (no, nw), (mo, mw), (so, sw) = tables[n], tables[m], tables[n + m]
    lo = max(no, l - (mo + mw.size - 1))
    hi = min(no + nw.size - 1, l - mo)
    if lo > hi:
        raise TableUnderflowError(f"endpoint {l} not attainable for split {n}+{m}")
    w = nw[lo - no:hi - no + 1] * mw[l - hi - mo:l - lo - mo + 1][::-1]
    total = w.sum()
    if total <= 0.0:
        raise TableUnderflowError(f"endpoint {l} carries no float64 mass for split {n}+{m}")
    w = w / total
    support = np.arange(lo, hi + 1, dtype=float)
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log(np.clip(w, 1e-320, None)), -np.inf)
    cdf = np.cumsum(w)
    cdf[-1] = 1.0
    idx = l - so
    norm = float(np.log(sw[idx])) if 0 <= idx < sw.size and sw[idx] > 0 else -math.inf
    return MidpointLaw(n=n, m=m, z=float(l), kind="discrete", support=support,
                       log_weights=logw, cdf=cdf, normalizer=norm)


def midpoint_law_continuous(dist: JumpDistribution, n: int, m: int, z: float,
                            points: int = 4096) -> MidpointLaw:
    """Grid midpoint law for continuous jumps: density f_n(x) f_m(z-x)/f_{n+m}(z)
    tabulated on a grid around the conditional mean, widened until it holds
    mass 1 - 1e-10."""
    if abs(n - m) > 1 or n < 1 or m < 1:
        raise SpecError(f"midpoint split must be balanced, got n={n}, m={m}")
    N = n + m
    sd_data = solve_saddle(dist, z / N)
    sig = math.sqrt(sd_data.sigma_z_sq)
    center = z * n / N
    cond_sd = sig * math.sqrt(n * m / N)
    tab_n = pdf_grid_convolution(dist, n)
    tab_m = tab_n if m == n else pdf_grid_convolution(dist, m)
    walk_sum_tab = pdf_grid_convolution(dist, N)

    span = 8.0
    for _ in range(12):
        xs = np.linspace(center - span * cond_sd, center + span * cond_sd, points)
        logw = np.array([tab_n.log_value_at(x) + tab_m.log_value_at(z - x) for x in xs])
        live = np.isfinite(logw)
        if not live.any():
            raise TableUnderflowError(f"endpoint {z} not attainable for split {n}+{m}")
        shifted = np.where(live, logw - logw[live].max(), -np.inf)
        w = np.exp(shifted)
        h = xs[1] - xs[0]
        # fraction of mass at the window edges decides whether to widen
        edge = (w[0] + w[-1]) / max(w.max(), 1e-300)
        cdf = np.cumsum(w)
        if edge < 1e-10 and cdf[-1] > 0:
            break
        span *= 1.6
    cdf = cdf / cdf[-1]
    cdf[-1] = 1.0
    total = w.sum() * h
    logw = shifted + logw[live].max() - math.log(total)
    return MidpointLaw(n=n, m=m, z=float(z), kind="continuous", support=xs,
                       log_weights=logw, cdf=cdf,
                       normalizer=walk_sum_tab.log_value_at(z))


def midpoint_gaussian_deviation(dist: JumpDistribution, N: int, z: float | None = None,
                                window: float | None = None) -> dict:
    """Worst normalized gap between the midpoint law and its Gaussian surrogate.

    Returns M_hat = max |dev(x)| / (N^{-1/2} + N |w|^3) over |x - z/2| <=
    window (w = (x - z/2)/N), plus the location where it is attained.  Stable
    M_hat across N is the empirical signature of the second-order accuracy of
    the Gaussian midpoint surrogate.
    """
    if N % 2 or N < 2:
        raise SpecError(f"midpoint deviation needs even N >= 2, got {N}")
    n = N // 2
    if z is None:
        z = float(round(N * dist.mean())) if dist.kind == "discrete" else N * dist.mean()
    law = midpoint_law(dist, n, n, z)
    sd_data = solve_saddle(dist, z / N)
    sig = math.sqrt(sd_data.sigma_z_sq)
    if window is None:
        window = 0.05 * N
    half = z / 2.0
    gauss = (math.log(2.0) - 0.5 * math.log(2.0 * math.pi * N) - math.log(sig)
             - 2.0 * (law.support - half) ** 2 / (N * sig * sig))
    dev = law.log_weights - gauss
    wslope = np.abs(law.support - half) / N
    denom = 1.0 / math.sqrt(N) + N * wslope ** 3
    inside = np.abs(law.support - half) <= window
    finite = np.isfinite(dev)
    use = inside & finite
    if not use.any():
        raise NumericError("no finite midpoint weights inside the window")
    ratio = np.abs(dev[use]) / denom[use]
    k = int(np.argmax(ratio))
    return {
        "M_hat": float(ratio[k]),
        "argmax_x": float(law.support[use][k]),
        "window": window,
        "N": N,
        "z": z,
    }


def tail_bound_check(dist: JumpDistribution, n: int, m: int, z: float,
                     A: float, a: float) -> dict:
    """Check w(x) <= (A/sqrt(N)) exp(-a (x - z/2)^2 / N) across the support.

    Returns pass/fail with the worst margin point (positive margin = slack).
    """
    law = midpoint_law(dist, n, m, z)
    N = n + m
    half = z / 2.0
    log_bound = math.log(A) - 0.5 * math.log(N) - a * (law.support - half) ** 2 / N
    margin = log_bound - law.log_weights
    finite = np.isfinite(law.log_weights)
    worst = int(np.argmin(margin[finite]))
    xs = law.support[finite]
    return {
        "ok": bool(np.all(margin[finite] >= 0)),
        "worst_x": float(xs[worst]),
        "worst_margin": float(margin[finite][worst]),
        "A": A, "a": a, "N": N, "z": z,
    }
