"""Saddle-point analytics for tilted jump laws.

solve_saddle finds the tilt u_z with tilted mean z by a bracketed, safeguarded
Newton iteration; SaddleData carries the tilt, the exponent G_z = Lambda(u_z)
- z u_z, the tilted variance, and the first four derivatives of the slope
function F(z) = G_z(u_z) obtained from the chain rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SaddleConvergenceError, SlopeOutOfRangeError, SpecError
from .jump_dist import JumpDistribution

TOL_SADDLE = 1e-10
MAX_ITER = 200


@dataclass
class SaddleData:
    z: float
    u_z: float
    lambda_at_u: float
    g_value: float              # G_z(u_z) = Lambda(u_z) - z * u_z = -Lambda*(z)
    sigma_z_sq: float           # Lambda''(u_z), the tilted variance
    f_derivs: tuple             # (F, F', F'', F''', F'''') at this z
    domain: tuple               # MGF domain (A, B)


def _initial_bracket(dist: JumpDistribution) -> tuple[float, float]:
    a, b = dist.mgf_domain_lo, dist.mgf_domain_hi
    lo = -1.0 if a == -math.inf else max(-1.0, a / 2.0)
    hi = 1.0 if b == math.inf else min(1.0, b / 2.0)
    return lo, hi


def _expand(dist, side, value):
    # double toward an infinite boundary, approach a finite one geometrically
    a, b = dist.mgf_domain_lo, dist.mgf_domain_hi
    if side > 0:
        return value * 2.0 if b == math.inf else (value + b) / 2.0
    return value * 2.0 if a == -math.inf else (value + a) / 2.0


def solve_saddle(dist: JumpDistribution, z: float,
                 tol: float = TOL_SADDLE, max_iter: int = MAX_ITER) -> SaddleData:
    """Solve Lambda'(u) = z for the unique tilt in the MGF domain.

    Rejects slopes at or beyond the support edges: boundary slopes of finite
    lattice laws are served by rate_function's atom formula instead.
    """
    if not math.isfinite(z):
        raise SpecError(f"slope must be finite, got {z}")
    if z <= dist.support_lo or z >= dist.support_hi:
        raise SlopeOutOfRangeError(
            f"slope {z} outside the open support range ({dist.support_lo}, {dist.support_hi})")

    d1 = dist.log_mgf_d1
    lo, hi = _initial_bracket(dist)
    # grow the bracket until Lambda'(lo) <= z <= Lambda'(hi)
    grow = 0
    while d1(hi) < z:
        hi = _expand(dist, +1, hi)
        grow += 1
        if grow > 600:
            raise SlopeOutOfRangeError(f"slope {z} not attained by the tilted mean")
    while d1(lo) > z:
        lo = _expand(dist, -1, lo)
        grow += 1
        if grow > 600:
            raise SlopeOutOfRangeError(f"slope {z} not attained by the tilted mean")

    scale = max(1.0, abs(z))
    u = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = d1(u) - z
        if abs(g) <= tol * scale:
            break
        if g > 0:
            hi = u
        else:
            lo = u
        step = g / dist.log_mgf_d2(u)
        cand = u - step
        u = cand if lo < cand < hi else 0.5 * (lo + hi)
    else:
        raise SaddleConvergenceError(
            f"saddle solve for slope {z} did not reach {tol} in {max_iter} iterations")

    lam = dist.log_mgf(u)
    s2 = dist.log_mgf_d2(u)
    l3 = dist.log_mgf_d3(u)
    l4 = dist.log_mgf_d4(u)
    g_val = lam - z * u
    f_derivs = (
        g_val,
        -u,
        -1.0 / s2,
        l3 / s2 ** 3,
        (l4 * s2 - 3.0 * l3 * l3) / s2 ** 5,
    )
    return SaddleData(z=z, u_z=u, lambda_at_u=lam, g_value=g_val,
                      sigma_z_sq=s2, f_derivs=f_derivs,
                      domain=(dist.mgf_domain_lo, dist.mgf_domain_hi))


def rate_function(dist: JumpDistribution, z: float) -> float:
    """Legendre transform Lambda*(z); zero exactly at the mean.

    For a finite lattice law the support endpoints are attainable with
    Lambda*(edge) = -log p(edge); interior slopes go through the saddle.
    """
    if dist.kind == "discrete" and math.isfinite(dist.support_lo) \
            and math.isfinite(dist.support_hi) and z in (dist.support_lo, dist.support_hi):
        lw = dist.log_weight(z)
        if lw <= -1e290:
            raise SlopeOutOfRangeError(f"support edge {z} carries no mass")
        return -lw
    return -solve_saddle(dist, z).g_value
