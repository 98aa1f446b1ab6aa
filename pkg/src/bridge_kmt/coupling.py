"""Dyadic quantile coupling of pinned walks to Brownian bridges.

A pinned n-step walk and a volatility-matched Brownian bridge are built from
one uniform stream: at every node of a halving tree the walk's midpoint is
drawn through the quantile transform of the same uniform that drives the
bridge's Gaussian midpoint, so the two paths agree wherever the midpoint laws
are close.  Leaves below the size cutoff fall back to stepwise conditional
sampling on the walk side and stepwise bridge conditionals on the Gaussian
side.

Two interchangeable kernels run the discrete tree walk: a Cython extension
and a pure-Python twin (forced via BRIDGE_KMT_PURE=1).  They share the same
pmf tables, conditional-table builder, and splitmix64 streams, so their
output is bit-identical; continuous laws always take the Python path.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .cramer import solve_saddle
from .density import MidpointLaw, midpoint_law, pdf_grid_convolution, walk_pmf_tables
from .errors import SpecError, TableUnderflowError
from .gaussian import std_normal_cdf, std_normal_quantile
from .jump_dist import JumpDistribution

_ZP_BIAS = 1 << 34          # packs signed node endpoints into dict keys

if os.environ.get("BRIDGE_KMT_PURE"):
    _speedups = None
else:
    try:
        from . import _speedups
    except ImportError:
        _speedups = None

from . import _kernel

MODES = ("pure_quantile", "truncated_paper")


@dataclass
class CouplerConfig:
    """Knobs of the dyadic construction.

    n_min is the leaf cutoff (leaves of size <= n_min are sampled stepwise);
    eps3 scales the truncation window of 'truncated_paper' mode; ref_slope
    fixes the bridge volatility (defaults to the root slope z/n).
    """

    n_min: int = 16
    coupling_mode: str = "pure_quantile"
    eps3: float = 0.05
    ref_slope: float | None = None
    engine: str = "auto"            # 'auto' | 'compiled' | 'pure'
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_min < 1:
            raise SpecError(f"n_min must be >= 1, got {self.n_min}")
        if self.coupling_mode not in MODES:
            raise SpecError(f"coupling_mode must be one of {MODES}")
        if not 0.0 < self.eps3 <= 0.5:
            raise SpecError(f"eps3 must lie in (0, 0.5], got {self.eps3}")
        if self.engine not in ("auto", "compiled", "pure"):
            raise SpecError(f"engine must be auto/compiled/pure, got {self.engine}")


@dataclass
class CoupledSample:
    n: int
    z: float
    s_path: np.ndarray
    b_path: np.ndarray
    delta: float
    xi_count: int


def backend_name(config: CouplerConfig | None = None) -> str:
    engine = config.engine if config else "auto"
    if engine == "pure" or _speedups is None:
        return "pure"
    return "compiled"


# ---------------------------------------------------------------------------
# midpoint coupling at one node


def couple_midpoint(law: MidpointLaw, xi: float, mode: str = "pure_quantile",
                    eps3: float = 0.05, tail_uniform: float | None = None) -> float:
    """Walk midpoint coupled to the Gaussian draw xi.

    pure_quantile maps xi through the law's quantile; truncated_paper keeps
    the quantile value only inside the window center +/- 2 eps3 k (k = half
    size) and otherwise redraws from the matching conditioned tail with the
    fresh uniform supplied by the caller, which leaves the marginal exact.
    """
    u = std_normal_cdf(xi)
    w = law.quantile(u)
    if mode == "pure_quantile":
        return w
    if mode != "truncated_paper":
        raise SpecError(f"unknown coupling mode {mode!r}")
    k = law.n
    center = law.z * law.n / (law.n + law.m)
    lo, hi = center - 2.0 * eps3 * k, center + 2.0 * eps3 * k
    if lo <= w <= hi:
        return w
    if tail_uniform is None:
        raise SpecError("truncated_paper mode needs a tail_uniform for out-of-window draws")
    if law.kind == "discrete":
        c_lo = law.cdf_at(math.ceil(lo) - 1)      # mass strictly below the window
    else:
        c_lo = law.cdf_at(lo)
    c_hi = law.cdf_at(hi)
    if w < lo:
        return law.quantile(tail_uniform * c_lo) if c_lo > 0 else w
    rest = 1.0 - c_hi
    return law.quantile(c_hi + tail_uniform * rest) if rest > 0 else w


# ---------------------------------------------------------------------------
# discrete sampling pack


class DiscretePack:
    """Shared state of the discrete sampler: pmf tables per tree size and the
    lazily grown cache of conditional midpoint tables.

    Cache keys pack (left size, right size, endpoint) into a single int so
    both kernels hit a plain int-keyed dict."""

    def __init__(self, dist: JumpDistribution, n: int, n_min: int):
        sizes = {1}
        stack = [n]
        while stack:
            s = stack.pop()
            if s <= n_min:
                sizes.update(range(1, s))
            else:
                k, m = s // 2, s - s // 2
                sizes.update((k, m))
                stack.extend((k, m))
        raw = walk_pmf_tables(dist, sizes)
        self.tables = {}
        for s, (origin, probs) in raw.items():
            with np.errstate(divide="ignore"):
                logp = np.where(probs > 0, np.log(np.clip(probs, 1e-320, None)), -np.inf)
            self.tables[s] = (origin, probs, logp)
        self.cond: dict[int, tuple[int, np.ndarray]] = {}

    @staticmethod
    def key(k: int, m: int, zp: int) -> int:
        if not (0 < k < (1 << 14) and 0 < m < (1 << 14)):
            raise SpecError(f"tree sizes {k}+{m} exceed the packable range")
        if not -_ZP_BIAS < zp < _ZP_BIAS:
            raise SpecError(f"node endpoint {zp} out of packable range")
        return (k << 49) | (m << 35) | (zp + _ZP_BIAS)

    def build_cond(self, k: int, m: int, zp: int) -> tuple[int, np.ndarray]:
        """Unnormalized conditional cdf of the value after k of k+m steps,
        pinned to end at zp.  Returns (first support point, running sums)."""
        ko, kw, klog = self.tables[k]
        mo, mw, mlog = self.tables[m]
        lo = max(ko, zp - mo - (mw.size - 1))
        hi = min(ko + kw.size - 1, zp - mo)
        if lo > hi:
            raise TableUnderflowError(
                f"endpoint {zp} not attainable across a {k}+{m} split")
        w = kw[lo - ko:hi - ko + 1] * mw[zp - hi - mo:zp - lo - mo + 1][::-1]
        cum = np.cumsum(w)
        if cum[-1] <= 0.0:
            lw = klog[lo - ko:hi - ko + 1] + mlog[zp - hi - mo:zp - lo - mo + 1][::-1]
            mx = lw.max()
            if mx == -np.inf:
                raise TableUnderflowError(
                    f"endpoint {zp} carries no float64 mass across a {k}+{m} split")
            cum = np.cumsum(np.exp(lw - mx))
        entry = (lo, cum)
        self.cond[self.key(k, m, zp)] = entry
        return entry


def _sigma_ref(dist: JumpDistribution, n: int, z: float, config: CouplerConfig) -> float:
    p = config.ref_slope if config.ref_slope is not None else z / n
    if not dist.support_lo < p < dist.support_hi:
        raise SpecError(f"reference slope {p} outside the open support range")
    return math.sqrt(solve_saddle(dist, p).sigma_z_sq)


# ---------------------------------------------------------------------------
# batch sampling


def sample_deltas(dist: JumpDistribution, n: int, z: float, samples: int,
                  config: CouplerConfig | None = None, seed: int | None = None,
                  threads: int | None = None, collect_paths: bool = False):
    """Draw coupled (walk, bridge) pairs and report sup-distance statistics.

    Returns a dict of arrays: delta, midpoint_w, xi_count, and with
    collect_paths also s_paths and b_paths as (samples, n+1) matrices.
    Results depend only on (dist, n, z, config, seed), never on threads.
    """
    config = config or CouplerConfig()
    if samples < 1:
        raise SpecError(f"samples must be >= 1, got {samples}")
    if n < 1:
        raise SpecError(f"n must be >= 1, got {n}")
    seed = config.rng_seed if seed is None else seed
    threads = _resolve_threads(threads)
    # a single pinned step has no interior points, so no bridge volatility;
    # skipping the solve keeps boundary endpoints like z = n * support_hi legal
    sigma_p = _sigma_ref(dist, n, z, config) if n > 1 else 0.0
    mode = 0 if config.coupling_mode == "pure_quantile" else 1

    if dist.kind == "discrete":
        l = int(round(z))
        if abs(z - l) > 1e-9:
            raise SpecError(f"endpoint {z} is not a lattice point")
        pack = DiscretePack(dist, n, config.n_min)
        if n > 1:
            k, m = (n // 2, n - n // 2) if n > config.n_min else (1, n - 1)
            pack.build_cond(k, m, l)          # surfaces unattainable endpoints early
        else:
            o, pr, _ = pack.tables[1]
            if not 0 <= l - o < pr.size or pr[l - o] <= 0:
                raise TableUnderflowError(f"endpoint {l} is not a jump value")
        kernel = _kernel if backend_name(config) == "pure" else _speedups
        runner = lambda i0, cnt: kernel.sample_batch(
            pack.cond, pack.build_cond, n, l, config.n_min,
            sigma_p, mode, config.eps3, seed, i0, cnt, collect_paths)
    else:
        cpack = ContinuousPack(dist, n, z, config)
        runner = lambda i0, cnt: _sample_batch_continuous(
            cpack, n, z, config, sigma_p, mode, seed, i0, cnt, collect_paths)

    chunks = _chunks(samples, threads)
    if len(chunks) == 1:
        parts = [runner(*chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: runner(*c), chunks))

    out = {
        "delta": np.concatenate([p[0] for p in parts]),
        "midpoint_w": np.concatenate([p[1] for p in parts]),
        "xi_count": np.concatenate([p[2] for p in parts]),
    }
    if collect_paths:
        out["s_paths"] = np.vstack([p[3] for p in parts])
        out["b_paths"] = np.vstack([p[4] for p in parts])
    return out


def sample_coupled_bridge(dist: JumpDistribution, n: int, z: float,
                          config: CouplerConfig | None = None,
                          samples: int = 1, seed: int | None = None) -> list[CoupledSample]:
    """Fully materialized coupled samples (paths included)."""
    res = sample_deltas(dist, n, z, samples, config=config, seed=seed,
                        collect_paths=True)
    out = []
    for i in range(samples):
        s_path = res["s_paths"][i]
        if dist.kind == "discrete":
            s_path = s_path.astype(np.int64)
        out.append(CoupledSample(
            n=n, z=z, s_path=s_path, b_path=res["b_paths"][i],
            delta=float(res["delta"][i]), xi_count=int(res["xi_count"][i])))
    return out


def compute_delta(s_path: np.ndarray, b_path: np.ndarray, z: float) -> float:
    """Sup distance between the walk and the drift-completed bridge on the
    integer grid (a lower bound for the continuum sup, which interpolation
    between grid points could only enlarge)."""
    n = s_path.size - 1
    t = np.arange(n + 1, dtype=float)
    return float(np.max(np.abs(b_path + t * (z / n) - s_path)))


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("BRIDGE_KMT_THREADS", "")
        threads = int(env) if env.isdigit() and int(env) > 0 else 1
    return max(1, threads)


def _chunks(samples: int, threads: int):
    if threads <= 1 or samples < 2 * threads:
        return [(0, samples)]
    size = (samples + threads - 1) // threads
    return [(i, min(size, samples - i)) for i in range(0, samples, size)]


# ---------------------------------------------------------------------------
# reference samplers (also the continuous backend)


def exact_bridge_sample(dist: JumpDistribution, n: int, z: float, seed: int = 0,
                        sample_idx: int = 0) -> np.ndarray:
    """Pinned walk by stepwise conditional sampling; the small-n reference."""
    if dist.kind != "discrete":
        raise SpecError("exact_bridge_sample serves discrete laws; continuous "
                        "pinned walks go through sample_coupled_bridge")
    l = int(round(z))
    pack = DiscretePack(dist, max(n, 2), n_min=max(n, 2))
    stream = rng.Stream(rng.node_seed(rng.sample_seed(seed, sample_idx), 1))
    path = np.zeros(n + 1, dtype=np.int64)
    path[n] = l
    s = 0
    for i in range(1, n):
        r = n - i
        zt = l - s
        key = DiscretePack.key(1, r, zt)
        entry = pack.cond.get(key)
        if entry is None:
            entry = pack.build_cond(1, r, zt)
        wmin, cum = entry
        u = stream.next_u01()
        idx = int(np.searchsorted(cum, u * cum[-1], side="left"))
        s += wmin + min(idx, cum.size - 1)
        path[i] = s
    return path


def brownian_bridge_sample(n: int, sigma: float, seed: int = 0,
                           sample_idx: int = 0) -> np.ndarray:
    """Brownian bridge pinned at 0 on both ends, by stepwise conditionals."""
    stream = rng.Stream(rng.node_seed(rng.sample_seed(seed, sample_idx), 1))
    path = np.zeros(n + 1)
    b = 0.0
    for t in range(1, n):
        r = n - t
        mean = b * r / (r + 1)
        sd = sigma * math.sqrt(r / (r + 1))
        b = mean + sd * std_normal_quantile(stream.next_u01())
        path[t] = b
    return path


class ContinuousPack:
    """Grid tables per tree size for continuous jump laws."""

    def __init__(self, dist: JumpDistribution, n: int, z: float, config: CouplerConfig):
        self.dist = dist
        sizes = {1}
        stack = [n]
        while stack:
            s = stack.pop()
            if s <= config.n_min:
                sizes.update(range(1, s))
            else:
                k, m = s // 2, s - s // 2
                sizes.update((k, m))
                stack.extend((k, m))
        self.tabs = {s: pdf_grid_convolution(dist, s) for s in sorted(sizes)}
        self.grid_points = 2048

    def cond_quantile_fn(self, k: int, m: int, zp: float, sigma: float):
        """CDF grid of the conditional value after k of k+m steps."""
        tk, tm = self.tabs[k], self.tabs[m]
        center = zp * k / (k + m)
        spread = sigma * math.sqrt(k * m / (k + m))
        span = 8.0
        for _ in range(12):
            xs = np.linspace(center - span * spread, center + span * spread,
                             self.grid_points)
            lw = np.array([tk.log_value_at(x) + tm.log_value_at(zp - x) for x in xs])
            live = np.isfinite(lw)
            if live.any():
                w = np.exp(np.where(live, lw - lw[live].max(), -np.inf))
                edge = (w[0] + w[-1]) / max(w.max(), 1e-300)
                if edge < 1e-10:
                    break
            span *= 1.6
        else:
            raise TableUnderflowError(f"no conditional mass near endpoint {zp}")
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        return xs, cdf


def _feasible_interval(dist: JumpDistribution, k: int, m: int, zp: float):
    """Values the k-step partial sum can take when the (k+m)-step sum is zp."""
    slo, shi = dist.support_lo, dist.support_hi
    lo = max(k * slo if math.isfinite(slo) else -math.inf,
             zp - (m * shi if math.isfinite(shi) else math.inf))
    hi = min(k * shi if math.isfinite(shi) else math.inf,
             zp - (m * slo if math.isfinite(slo) else -math.inf))
    return lo, hi


def _sample_batch_continuous(cpack: ContinuousPack, n, z, config, sigma_p, mode,
                             seed, idx0, count, collect):
    deltas = np.empty(count)
    wroots = np.empty(count)
    xicnt = np.zeros(count, dtype=np.int64)
    spaths = np.empty((count, n + 1)) if collect else None
    bpaths = np.empty((count, n + 1)) if collect else None
    s_path = np.zeros(n + 1)
    b_path = np.zeros(n + 1)

    for c in range(count):
        samp = rng.sample_seed(seed, idx0 + c)
        s_path[:] = 0.0
        b_path[:] = 0.0
        s_path[n] = z
        draws = 0
        wroot = math.nan

        def node(node_id, t0, size, zp):
            nonlocal draws, wroot
            stream = rng.Stream(rng.node_seed(samp, node_id))
            if size == 1:
                return
            if size <= config.n_min:
                # stepwise walk conditionals, then stepwise bridge conditionals
                s_rel = 0.0
                for i in range(1, size):
                    xs, cdf = cpack.cond_quantile_fn(1, size - i, zp - s_rel, sigma_p)
                    u = stream.next_u01()
                    # grid quantiles can overshoot the support edge by O(h);
                    # clamp each increment into its feasible cone
                    flo, fhi = _feasible_interval(cpack.dist, 1, size - i, zp - s_rel)
                    s_rel += min(max(float(np.interp(u, cdf, xs)), flo), fhi)
                    s_path[t0 + i] = s_path[t0] + s_rel
                    draws += 1
                b = 0.0
                for t in range(1, size):
                    r = size - t
                    b = b * r / (r + 1) + sigma_p * math.sqrt(r / (r + 1)) \
                        * std_normal_quantile(stream.next_u01())
                    b_path[t0 + t] = b
                    draws += 1
                return
            k, m = size // 2, size - size // 2
            u1 = stream.next_u01()
            xs, cdf = cpack.cond_quantile_fn(k, m, zp, sigma_p)
            w = float(np.interp(u1, cdf, xs))
            if mode == 1:
                center = zp * k / (k + m)
                lo, hi = center - 2 * config.eps3 * k, center + 2 * config.eps3 * k
                if not lo <= w <= hi:
                    u2 = stream.next_u01()
                    c_lo = float(np.interp(lo, xs, cdf))
                    c_hi = float(np.interp(hi, xs, cdf))
                    if w < lo and c_lo > 0:
                        w = float(np.interp(u2 * c_lo, cdf, xs))
                    elif w > hi and c_hi < 1:
                        w = float(np.interp(c_hi + u2 * (1 - c_hi), cdf, xs))
                    draws += 1
            flo, fhi = _feasible_interval(cpack.dist, k, m, zp)
            w = min(max(w, flo), fhi)
            xi = std_normal_quantile(u1)
            draws += 1
            if node_id == 1:
                wroot = w
            s_path[t0 + k] = s_path[t0] + w
            node(2 * node_id, t0, k, w)
            node(2 * node_id + 1, t0 + k, m, zp - w)
            gm = sigma_p * math.sqrt(k * m / size) * xi
            for t in range(1, k + 1):
                b_path[t0 + t] += gm * t / k
            for t in range(k + 1, size):
                b_path[t0 + t] += gm * (size - t) / m

        node(1, 0, n, z)
        deltas[c] = compute_delta(s_path, b_path, z)
        wroots[c] = wroot
        xicnt[c] = draws
        if collect:
            spaths[c] = s_path
            bpaths[c] = b_path
    return deltas, wroots, xicnt, spaths, bpaths
