"""Numba event loop used by the jump-process simulator.

The kernel consumes pre-drawn randomness arrays (one exponential, three
uniforms and six normals per event slot) so that all randomness comes
from a replica's own counter-based stream in a fixed layout.
"""

from __future__ import annotations

import math

import numba
import numpy as np

# event category codes
CAT_SYSTEM = 0
CAT_RES_PLUS = 1
CAT_RES_MINUS = 2
CAT_INTER_PLUS = 3
CAT_INTER_MINUS = 4
CAT_THERMO_PLUS = 5
CAT_THERMO_MINUS = 6


@numba.njit(cache=True, nogil=True, fastmath=False)
def _collide_rows(a, i, b, j, ox, oy, oz):
    dx = a[i, 0] - b[j, 0]
    dy = a[i, 1] - b[j, 1]
    dz = a[i, 2] - b[j, 2]
    d = dx * ox + dy * oy + dz * oz
    a[i, 0] -= d * ox
    a[i, 1] -= d * oy
    a[i, 2] -= d * oz
    b[j, 0] += d * ox
    b[j, 1] += d * oy
    b[j, 2] += d * oz


@numba.njit(cache=True, nogil=True, fastmath=False)
def run_events(sys_v, rp_v, rm_v, t, t_end, codes, cumrate, total_rate,
               sqrt_tp, sqrt_tm, exps, unis, norms):
    """Apply jump events until t_end or the randomness chunk is exhausted.

    Returns (events_applied, time, done_flag).  The exponential draw that
    overshoots t_end is discarded (memorylessness makes this exact).
    """
    M = sys_v.shape[0]
    Np = rp_v.shape[0]
    Nm = rm_v.shape[0]
    n = exps.shape[0]
    applied = 0
    for k in range(n):
        dt = exps[k] / total_rate
        if t + dt > t_end:
            return applied, t_end, True
        t += dt
        u = unis[k, 0] * total_rate
        ci = 0
        while u > cumrate[ci] and ci < codes.shape[0] - 1:
            ci += 1
        code = codes[ci]

        ox = norms[k, 0]
        oy = norms[k, 1]
        oz = norms[k, 2]
        on = math.sqrt(ox * ox + oy * oy + oz * oz)
        ox /= on
        oy /= on
        oz /= on

        if code == CAT_SYSTEM:
            i = int(unis[k, 1] * M)
            if i >= M:
                i = M - 1
            j = int(unis[k, 2] * (M - 1))
            if j >= M - 1:
                j = M - 2
            if j >= i:
                j += 1
            _collide_rows(sys_v, i, sys_v, j, ox, oy, oz)
        elif code == CAT_RES_PLUS:
            i = int(unis[k, 1] * Np)
            if i >= Np:
                i = Np - 1
            j = int(unis[k, 2] * (Np - 1))
            if j >= Np - 1:
                j = Np - 2
            if j >= i:
                j += 1
            _collide_rows(rp_v, i, rp_v, j, ox, oy, oz)
        elif code == CAT_RES_MINUS:
            i = int(unis[k, 1] * Nm)
            if i >= Nm:
                i = Nm - 1
            j = int(unis[k, 2] * (Nm - 1))
            if j >= Nm - 1:
                j = Nm - 2
            if j >= i:
                j += 1
            _collide_rows(rm_v, i, rm_v, j, ox, oy, oz)
        elif code == CAT_INTER_PLUS:
            i = int(unis[k, 1] * Np)
            if i >= Np:
                i = Np - 1
            j = int(unis[k, 2] * M)
            if j >= M:
                j = M - 1
            _collide_rows(rp_v, i, sys_v, j, ox, oy, oz)
        elif code == CAT_INTER_MINUS:
            i = int(unis[k, 1] * Nm)
            if i >= Nm:
                i = Nm - 1
            j = int(unis[k, 2] * M)
            if j >= M:
                j = M - 1
            _collide_rows(rm_v, i, sys_v, j, ox, oy, oz)
        else:
            j = int(unis[k, 1] * M)
            if j >= M:
                j = M - 1
            if code == CAT_THERMO_PLUS:
                s = sqrt_tp
            else:
                s = sqrt_tm
            wx = s * norms[k, 3]
            wy = s * norms[k, 4]
            wz = s * norms[k, 5]
            dx = sys_v[j, 0] - wx
            dy = sys_v[j, 1] - wy
            dz = sys_v[j, 2] - wz
            d = dx * ox + dy * oy + dz * oz
            sys_v[j, 0] -= d * ox
            sys_v[j, 1] -= d * oy
            sys_v[j, 2] -= d * oz
        applied += 1
    return applied, t, False


@numba.njit(cache=True, nogil=True, fastmath=False)
def run_coupled_events(sys_v, til_v, rp_v, rm_v, touched_p, touched_m,
                       t, t_end, codes, cumrate, total_rate,
                       sqrt_tp, sqrt_tm, exps, unis, norms):
    """Reservoir run plus a maximally coupled thermostat copy.

    Both systems share the event skeleton.  At an interaction event the
    thermostat copy uses the reservoir particle's value as its Maxwellian
    partner while that particle is still untouched (it is then an exact
    Gamma_T draw independent of the past); once touched, a fresh Gaussian
    from the pre-drawn block is used instead.  The coupled copy is an
    exact realization of the two-thermostat dynamics.
    """
    M = sys_v.shape[0]
    Np = rp_v.shape[0]
    Nm = rm_v.shape[0]
    n = exps.shape[0]
    applied = 0
    for k in range(n):
        dt = exps[k] / total_rate
        if t + dt > t_end:
            return applied, t_end, True
        t += dt
        u = unis[k, 0] * total_rate
        ci = 0
        while u > cumrate[ci] and ci < codes.shape[0] - 1:
            ci += 1
        code = codes[ci]

        ox = norms[k, 0]
        oy = norms[k, 1]
        oz = norms[k, 2]
        on = math.sqrt(ox * ox + oy * oy + oz * oz)
        ox /= on
        oy /= on
        oz /= on

        if code == CAT_SYSTEM:
            i = int(unis[k, 1] * M)
            if i >= M:
                i = M - 1
            j = int(unis[k, 2] * (M - 1))
            if j >= M - 1:
                j = M - 2
            if j >= i:
                j += 1
            _collide_rows(sys_v, i, sys_v, j, ox, oy, oz)
            _collide_rows(til_v, i, til_v, j, ox, oy, oz)
        elif code == CAT_RES_PLUS or code == CAT_RES_MINUS:
            if code == CAT_RES_PLUS:
                blk = rp_v
                tch = touched_p
                nn = Np
            else:
                blk = rm_v
                tch = touched_m
                nn = Nm
            i = int(unis[k, 1] * nn)
            if i >= nn:
                i = nn - 1
            j = int(unis[k, 2] * (nn - 1))
            if j >= nn - 1:
                j = nn - 2
            if j >= i:
                j += 1
            _collide_rows(blk, i, blk, j, ox, oy, oz)
            tch[i] = 1
            tch[j] = 1
        else:
            if code == CAT_INTER_PLUS:
                blk = rp_v
                tch = touched_p
                nn = Np
                s = sqrt_tp
            else:
                blk = rm_v
                tch = touched_m
                nn = Nm
                s = sqrt_tm
            i = int(unis[k, 1] * nn)
            if i >= nn:
                i = nn - 1
            j = int(unis[k, 2] * M)
            if j >= M:
                j = M - 1
            if tch[i] == 0:
                wx = blk[i, 0]
                wy = blk[i, 1]
                wz = blk[i, 2]
            else:
                wx = s * norms[k, 3]
                wy = s * norms[k, 4]
                wz = s * norms[k, 5]
            _collide_rows(blk, i, sys_v, j, ox, oy, oz)
            tch[i] = 1
            dx = til_v[j, 0] - wx
            dy = til_v[j, 1] - wy
            dz = til_v[j, 2] - wz
            d = dx * ox + dy * oy + dz * oz
            til_v[j, 0] -= d * ox
            til_v[j, 1] -= d * oy
            til_v[j, 2] -= d * oz
        applied += 1
    return applied, t, False
