"""Experiment drivers: scaling sweeps, tail studies, the spiky-law
demonstration, density validation, and CSV/JSON persistence.

All drivers are deterministic in (spec, seed): per-cell seeds are derived by
hashing, sample order is fixed, and floats are serialized with repr, so a
rerun reproduces output files byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .coupling import CouplerConfig, sample_deltas
from .density import density, midpoint_law, midpoint_law_continuous
from .errors import NumericError, SpecError, TableUnderflowError
from .jump_dist import JumpDistribution, make_builtin

KINDS = ("analyze", "density", "couple", "scaling", "tails", "counterexample")
FORMATS = ("csv", "json")


@dataclass
class ExperimentSpec:
    """One experiment request, shared by the library drivers and the CLI."""

    kind: str
    dist: JumpDistribution | None = None
    n_list: tuple[int, ...] = ()
    z_rule: object = "mean_slope"      # "mean_slope" | ("fixed", z) | ("offset", c)
    samples: int = 1000
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"
    a: float = 0.1                     # exponent knob of the e^{a delta} summary
    coupler: CouplerConfig = field(default_factory=CouplerConfig)
    threads: int | None = None
    engine: str = "all"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.fmt not in FORMATS:
            raise SpecError(f"format must be csv or json, got {self.fmt!r}")
        if self.samples < 1:
            raise SpecError(f"samples must be >= 1, got {self.samples}")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise SpecError("n_list must be strictly increasing")
        if self.a <= 0:
            raise SpecError(f"a must be positive, got {self.a}")


@dataclass
class ScalingResult:
    rows: list[dict]
    fit: dict | None                  # {'a0','b0'} of median ~ a0 + b0 log n
    residual_rms: float | None
    diffusive: dict | None            # {'c','rms'} of the sqrt(n) alternative

    def to_rows(self) -> list[dict]:
        return self.rows


@dataclass
class TailResult:
    n: int
    z: float
    m0: float
    rows: list[dict]                  # {'x','survival'}
    lam: float | None
    r2: float | None
    window: tuple[float, float] | None

    def to_rows(self) -> list[dict]:
        return self.rows


@dataclass
class CounterexampleResult:
    rows: list[dict]
    budget_exceeded: bool = False

    def to_rows(self) -> list[dict]:
        return self.rows


# ---------------------------------------------------------------------------
# persistence


def write_rows(rows: list[dict], fieldnames: list[str], out: str | None,
               fmt: str) -> None:
    """RFC-4180 CSV (one header row) or a JSON array of row objects."""
    text = render_rows(rows, fieldnames, fmt)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def render_rows(rows: list[dict], fieldnames: list[str], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: _json_cell(r.get(k)) for k in fieldnames} for r in rows]
        return json.dumps(clean, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(fieldnames)
    for r in rows:
        w.writerow([_csv_cell(r.get(k)) for k in fieldnames])
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _json_cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)              # JSON has no inf/nan literals
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# z selection


def resolve_z(dist: JumpDistribution, n: int, z_rule) -> float:
    """Endpoint for one sweep cell; lattice laws round to the nearest integer."""
    p = dist.mean()
    if z_rule == "mean_slope":
        target = p * n
    elif isinstance(z_rule, tuple) and z_rule[0] == "fixed":
        target = float(z_rule[1])
    elif isinstance(z_rule, tuple) and z_rule[0] == "offset":
        target = p * n + z_rule[1] * math.sqrt(n)
    else:
        raise SpecError(f"unknown z_rule {z_rule!r}")
    if dist.kind != "discrete":
        return target
    t = round(target)
    lo = dist.support_lo * n
    hi = dist.support_hi * n
    if math.isfinite(lo):
        t = max(t, math.floor(lo) + 1)
    if math.isfinite(hi):
        t = min(t, math.ceil(hi) - 1)
    return float(t)


def _cell_seed(seed: int, n: int) -> int:
    return rng.mix64(seed + n * rng.GAMMA)


def _sample_cell(dist, n, z_rule, samples, coupler, seed, threads):
    """Draw one sweep cell, nudging a discrete z onto an attainable point."""
    z = resolve_z(dist, n, z_rule)
    last = None
    shifts = (0, 1, -1, 2, -2, 3, -3) if dist.kind == "discrete" else (0,)
    for dz in shifts:
        try:
            res = sample_deltas(dist, n, z + dz, samples, config=coupler,
                                seed=_cell_seed(seed, n), threads=threads)
            return z + dz, res
        except TableUnderflowError as exc:
            last = exc
    raise last


# ---------------------------------------------------------------------------
# scaling


def run_scaling(spec: ExperimentSpec) -> ScalingResult:
    """Delta-vs-n sweep with a log-growth fit and a diffusive alternative."""
    if spec.dist is None or not spec.n_list:
        raise SpecError("scaling needs a jump law and a non-empty n_list")
    p = spec.dist.mean()
    rows: list[dict] = []
    try:
        for n in spec.n_list:
            z, res = _sample_cell(spec.dist, n, spec.z_rule, spec.samples,
                                  spec.coupler, spec.seed, spec.threads)
            d = res["delta"]
            lme, se = _log_mean_exp_jackknife(spec.a * d)
            rows.append({
                "n": n,
                "z": float(z),
                "z_dev_sq_over_n": (z - p * n) ** 2 / n,
                "delta_median": float(np.median(d)),
                "delta_mean": float(np.mean(d)),
                "delta_q95": float(np.quantile(d, 0.95)),
                "log_E_exp_a_delta": lme,
                "log_E_exp_a_delta_se": se,
            })
            _flush(spec, rows, SCALING_FIELDS)
    except (NumericError, SpecError):
        _flush(spec, rows, SCALING_FIELDS)
        raise
    fit = residual = diffusive = None
    if len(rows) >= 3:
        ns = np.array([r["n"] for r in rows], dtype=float)
        med = np.array([r["delta_median"] for r in rows])
        b0, a0 = np.polyfit(np.log(ns), med, 1)
        pred = a0 + b0 * np.log(ns)
        fit = {"a0": float(a0), "b0": float(b0)}
        residual = float(np.sqrt(np.mean((med - pred) ** 2)))
        c = float(np.sum(med * np.sqrt(ns)) / np.sum(ns))
        diffusive = {"c": c,
                     "rms": float(np.sqrt(np.mean((med - c * np.sqrt(ns)) ** 2)))}
    result = ScalingResult(rows, fit, residual, diffusive)
    _flush(spec, rows, SCALING_FIELDS)
    return result


SCALING_FIELDS = ["n", "z", "z_dev_sq_over_n", "delta_median", "delta_mean",
                  "delta_q95", "log_E_exp_a_delta", "log_E_exp_a_delta_se"]


def _flush(spec, rows, fields):
    if spec.out is not None:
        write_rows(rows, fields, spec.out, spec.fmt)


def _log_mean_exp_jackknife(y: np.ndarray) -> tuple[float, float]:
    """log mean(e^y) with a leave-one-out error bar."""
    m = y.size
    ey = np.exp(y)
    s = ey.sum()
    full = math.log(s / m)
    if m < 2:
        return full, math.nan
    loo = np.log(np.clip(s - ey, 1e-300, None) / (m - 1))
    return full, float(math.sqrt((m - 1) * np.mean((loo - loo.mean()) ** 2)))


# ---------------------------------------------------------------------------
# tails


TAIL_FIELDS = ["x", "survival"]


def run_tails(spec: ExperimentSpec, n_points: int = 41,
              window: tuple[float, float] = (0.25, 0.002)) -> TailResult:
    """Empirical survival of delta beyond m0 log n on an x grid, with a
    log-linear tail-rate fit on the mid-tail window (survival levels)."""
    if spec.dist is None or len(spec.n_list) != 1:
        raise SpecError("tails needs a jump law and exactly one n")
    n = spec.n_list[0]
    z, res = _sample_cell(spec.dist, n, spec.z_rule, spec.samples,
                          spec.coupler, spec.seed, spec.threads)
    d = np.sort(res["delta"])
    m0 = float(np.median(d) / math.log(n))        # centers x=0 inside (0,1)
    base = m0 * math.log(n)
    top = float(np.quantile(d, 1.0 - 5.0 / d.size)) if d.size >= 10 else float(d[-1])
    xs = np.linspace(0.0, max(top - base, 1e-9), n_points)
    surv = np.array([np.mean(d >= base + x) for x in xs])
    rows = [{"x": float(x), "survival": float(s)} for x, s in zip(xs, surv)]
    lam = r2 = None
    win = None
    mask = (surv <= window[0]) & (surv >= window[1]) & (surv > 0)
    if mask.sum() >= 3:
        xw, yw = xs[mask], np.log(surv[mask])
        slope, icpt = np.polyfit(xw, yw, 1)
        pred = icpt + slope * xw
        ss_res = float(np.sum((yw - pred) ** 2))
        ss_tot = float(np.sum((yw - yw.mean()) ** 2))
        lam = float(-slope)
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        win = (float(xw[0]), float(xw[-1]))
    result = TailResult(n=n, z=float(z), m0=m0, rows=rows, lam=lam, r2=r2,
                        window=win)
    _flush(spec, rows, TAIL_FIELDS)
    return result


# ---------------------------------------------------------------------------
# the spiky two-step law, enumerated exactly in log space


COUNTER_FIELDS = ["row_kind", "label", "m", "z", "spike_mass",
                  "conditional_std", "log10_conditional_std", "jump_sd"]

_LOG_FLOOR_EXP = 300          # off-spike weights clamp at exp(-10^300)


def _spiky_log_weight(k: int, spikes: frozenset) -> int:
    """Exact integer log-weight: -k^2 on spikes, -min(10^10^|k|, 10^300) off."""
    if k in spikes:
        return -(k * k)
    ak = abs(k)
    e = 10 ** ak if ak <= 2 else _LOG_FLOOR_EXP
    return -(10 ** e)


def _log10_int(v: int) -> float:
    bl = v.bit_length()
    scale = bl - 53 if bl > 53 else 0
    return scale * math.log10(2.0) + math.log10(v >> scale if scale else v)


def spiky_conditional(z: int, k_max: int = 50, budget: int = 60000):
    """Exact conditional law of the first of two spiky steps given sum z.

    Returns (atoms, weights, spike_mass, mean, std, log10_std, exceeded):
    atoms are Python ints, weights float64 normalized; arithmetic on the
    weights is exact in log space (integer log-weights, no rounding until
    the final exp)."""
    r_max = max(40, z)
    spikes = frozenset(3 ** r + r for r in range(1, r_max + 1)) \
        | frozenset(-(3 ** r) for r in range(1, r_max + 1))
    cands = set()
    for v in spikes:
        cands.add(v)
        cands.add(z - v)
    cands.update(range(-k_max, k_max + 1))
    exceeded = len(cands) > budget
    if exceeded:
        keep = {k for k in cands if k in spikes or z - k in spikes or abs(k) <= k_max}
        cands = set(sorted(keep, key=abs)[:budget])
    atoms = sorted(cands)
    lws = [_spiky_log_weight(k, spikes) + _spiky_log_weight(z - k, spikes)
           for k in atoms]
    mx = max(lws)
    ws = np.array([math.exp(d) if (d := lw - mx) >= -745 else 0.0 for lw in lws])
    ws /= ws.sum()
    a_z, b_z = 3 ** z + z, -(3 ** z)
    idx = {k: i for i, k in enumerate(atoms)}
    spike_mass = float(ws[idx[a_z]] + ws[idx[b_z]]) \
        if a_z in idx and b_z in idx else 0.0
    live = [(k, Fraction(w)) for k, w in zip(atoms, ws.tolist()) if w > 0]
    mean = sum(fw * k for k, fw in live)
    var = sum(fw * (k - mean) ** 2 for k, fw in live)
    log10_std = _log10_int(max(var.numerator, 1)) / 2 - _log10_int(var.denominator) / 2 \
        if var > 0 else -math.inf
    std = 10.0 ** log10_std if log10_std < 308 else math.inf
    return atoms, ws, spike_mass, mean, std, log10_std, exceeded


_CONTRAST = (
    ("bernoulli(1/2)", ("bernoulli", {"p": 0.5}), 1),
    ("uniform_int(0,2)", ("uniform_int", {"lo": 0, "hi": 2}), 2),
    ("geometric(1/2)", ("geometric", {"q": 0.5}), 2),
    ("exponential(1)", ("exponential", {"mu": 1.0}), 2),
    ("log_gamma(2)", ("log_gamma", {"gamma": 2.0}), 0),
)


def run_counterexample(m_list=(1, 2), k_max: int = 50, contrast: bool = True,
                       out: str | None = None, fmt: str = "csv") -> CounterexampleResult:
    """Spiky-law table: mass and spread of the midpoint given S_2 = 2 3^m,
    next to the same statistic for the log-concave built-ins."""
    if any(not 1 <= m <= 8 for m in m_list):
        raise SpecError("m_list entries must lie in 1..8")
    rows = []
    exceeded = False
    for m in m_list:
        z = 2 * 3 ** m
        _, _, mass, _, std, lstd, exc = spiky_conditional(z, k_max=k_max)
        exceeded = exceeded or exc
        rows.append({"row_kind": "spiky", "label": f"spiky m={m}", "m": m,
                     "z": z, "spike_mass": mass, "conditional_std": std,
                     "log10_conditional_std": lstd, "jump_sd": None})
    if contrast:
        for label, (family, params), z in _CONTRAST:
            dist = make_builtin(family, params)
            if dist.kind == "discrete":
                law = midpoint_law(dist, 1, 1, z)
                w = law.weights()
            else:
                law = midpoint_law_continuous(dist, 1, 1, float(z))
                w = law.weights()
                w = w / w.sum()
            vals = law.support
            mu = float(np.sum(w * vals))
            sd = float(math.sqrt(max(np.sum(w * (vals - mu) ** 2), 0.0)))
            rows.append({"row_kind": "contrast", "label": label, "m": None,
                         "z": z, "spike_mass": None, "conditional_std": sd,
                         "log10_conditional_std": math.log10(sd) if sd > 0 else None,
                         "jump_sd": math.sqrt(dist.variance())})
    if out is not None:
        write_rows(rows, COUNTER_FIELDS, out, fmt)
    return CounterexampleResult(rows, exceeded)


# ---------------------------------------------------------------------------
# density validation


DENSITY_FIELDS = ["engine", "N", "z", "log_density", "diff_vs_fft"]


def run_density_validation(spec: ExperimentSpec) -> dict:
    """Per-engine log-densities over n_list plus the decay fit of the
    saddle-vs-leading-term gap."""
    if spec.dist is None or not spec.n_list:
        raise SpecError("density validation needs a jump law and n_list")
    engines = ("saddle", "fft_exact", "gaussian_asymptotic") if spec.engine == "all" \
        else (spec.engine,)
    rows = []
    gaps = []
    for n in spec.n_list:
        z = resolve_z(spec.dist, n, spec.z_rule) / n
        vals = {eng: density(spec.dist, n, z, engine=eng) for eng in engines}
        fft_ld = vals.get("fft_exact")
        for eng in engines:
            rows.append({"engine": eng, "N": n, "z": z,
                         "log_density": vals[eng],
                         "diff_vs_fft": (vals[eng] - fft_ld)
                         if fft_ld is not None else None})
        if "saddle" in vals and "gaussian_asymptotic" in vals:
            gap = abs(vals["saddle"] - vals["gaussian_asymptotic"])
            if gap > 0:
                gaps.append((n, gap))
    fit = None
    if len(gaps) >= 3:
        ls = np.log([g[0] for g in gaps])
        lg = np.log([g[1] for g in gaps])
        slope, icpt = np.polyfit(ls, lg, 1)
        fit = {"slope": float(slope), "intercept": float(icpt)}
    if spec.out is not None:
        write_rows(rows, DENSITY_FIELDS, spec.out, spec.fmt)
    return {"rows": rows, "rate_fit": fit}
