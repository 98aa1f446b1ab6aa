"""Discrete tree-walk sampling kernel, pure-Python edition.

This module and _speedups.pyx are twins: same draw order, same dict layout,
same floating-point expression shapes (left-associated, libm scalars), so a
batch sampled here matches the compiled kernel bit for bit.  Any edit to one
kernel must be mirrored in the other.
"""
from __future__ import annotations

import math

import numpy as np

from .gaussian import std_normal_quantile
from .rng import node_seed, sample_seed, u01_at

ZP_BIAS = 1 << 34


def _cond_lookup(cond, build_cond, k, m, zp):
    key = (k << 49) | (m << 35) | (zp + ZP_BIAS)
    entry = cond.get(key)
    if entry is None:
        entry = build_cond(k, m, zp)
    return entry


def _node(cond, build_cond, s, b, t0, size, zp, samp, node_id, n_min,
          sigma_p, mode, eps3):
    """Fill s/b interiors of [t0, t0+size] given s[t0] and endpoint gain zp.

    Returns the number of uniforms consumed in this subtree."""
    if size == 1:
        return 0
    state = node_seed(samp, node_id)
    if size <= n_min:
        draws = 0
        j = 0
        s_rel = 0
        for i in range(1, size):
            wmin, cum = _cond_lookup(cond, build_cond, 1, size - i, zp - s_rel)
            u = u01_at(state, j)
            j += 1
            idx = int(np.searchsorted(cum, u * cum[-1], side="left"))
            if idx >= cum.size:
                idx = cum.size - 1
            s_rel += wmin + idx
            s[t0 + i] = s[t0] + s_rel
            draws += 1
        bb = 0.0
        for t in range(1, size):
            r = size - t
            u = u01_at(state, j)
            j += 1
            bb = bb * r / (r + 1) + sigma_p * math.sqrt(r / (r + 1)) \
                * std_normal_quantile(u)
            b[t0 + t] = bb
            draws += 1
        return draws

    k = size >> 1
    m = size - k
    u1 = u01_at(state, 0)
    wmin, cum = _cond_lookup(cond, build_cond, k, m, zp)
    total = cum[-1]
    idx = int(np.searchsorted(cum, u1 * total, side="left"))
    if idx >= cum.size:
        idx = cum.size - 1
    w = wmin + idx
    draws = 1
    if mode == 1:
        center = zp * k / size
        lo = center - 2.0 * eps3 * k
        hi = center + 2.0 * eps3 * k
        if not lo <= w <= hi:
            u2 = u01_at(state, 1)
            draws += 1
            if w < lo:
                ilo = math.ceil(lo) - wmin          # values below index ilo lie under the window
                clo = cum[min(ilo, cum.size) - 1]
                if clo > 0.0:
                    idx = int(np.searchsorted(cum, u2 * clo, side="left"))
                    w = wmin + idx
            else:
                ihi = math.floor(hi) - wmin          # last in-window index
                chi = cum[ihi] if ihi >= 0 else 0.0
                rest = total - chi
                if rest > 0.0:
                    idx = int(np.searchsorted(cum, chi + u2 * rest, side="left"))
                    if idx >= cum.size:
                        idx = cum.size - 1
                    w = wmin + idx
    xi = std_normal_quantile(u1)
    s[t0 + k] = s[t0] + w
    draws += _node(cond, build_cond, s, b, t0, k, w, samp, 2 * node_id,
                   n_min, sigma_p, mode, eps3)
    draws += _node(cond, build_cond, s, b, t0 + k, m, zp - w, samp,
                   2 * node_id + 1, n_min, sigma_p, mode, eps3)
    gm = sigma_p * math.sqrt(k * m / size) * xi
    for t in range(1, k + 1):
        b[t0 + t] += gm * (t / k)
    for t in range(k + 1, size):
        b[t0 + t] += gm * ((size - t) / m)
    return draws


def sample_batch(cond, build_cond, n, z, n_min, sigma_p, mode, eps3,
                 seed, idx0, count, collect):
    """Sample `count` coupled pairs for sample indices idx0..idx0+count-1.

    Returns (delta, w_root, xi_count, s_paths|None, b_paths|None)."""
    deltas = np.empty(count)
    wroots = np.empty(count)
    xicnt = np.zeros(count, dtype=np.int64)
    spaths = np.empty((count, n + 1)) if collect else None
    bpaths = np.empty((count, n + 1)) if collect else None
    s = np.zeros(n + 1)
    b = np.zeros(n + 1)
    ts = np.arange(n + 1, dtype=float)
    dz = z / n
    for c in range(count):
        samp = sample_seed(seed, idx0 + c)
        s[:] = 0.0
        b[:] = 0.0
        s[n] = z
        xicnt[c] = _node(cond, build_cond, s, b, 0, n, z, samp, 1,
                         n_min, sigma_p, mode, eps3)
        deltas[c] = np.max(np.abs(b + ts * dz - s))
        wroots[c] = s[n >> 1]
        if collect:
            spaths[c] = s
            bpaths[c] = b
    return deltas, wroots, xicnt, spaths, bpaths
