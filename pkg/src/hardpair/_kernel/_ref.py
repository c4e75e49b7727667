"""Pure-Python tangency solver for two congruent ellipses.

Behavior-identical reference for the compiled extension in _fast.pyx; the two
are selected at import time by the package __init__. Scalar math only, so the
module stays dependency-free and easy to mirror in C.

Canonical configuration: body 1 is the ellipse (a, b) at the origin with
orientation 0; body 2 is the same ellipse rotated by theta and translated by
d e(psi). Solved for the external tangency: boundary parameters (s1, s2) of
the single contact point and the center separation d.
"""

import math

BACKEND_NAME = "fallback"

_SCAN_N = 64
_SCAN_MARGIN = 0.02
_SCAN_BISECT = 10
_NEWTON_MAX = 50
_BACKTRACK_MAX = 12


def _g_of_alpha(a, b, ct, st, cpsi, spsi, alpha):
    """Transverse tangency residual for candidate contact-normal angle alpha.

    Returns (g, d, s1, s2): the mismatch of the two support points along the
    direction perpendicular to the normal, the implied center separation, and
    the boundary parameters of the two support points.
    """
    ux = math.cos(alpha)
    uy = math.sin(alpha)
    # boundary parameter whose outward normal (b cos s, a sin s) aligns with u
    s1 = math.atan2(b * uy, a * ux)
    # body 2 needs lab-frame normal -u; rotate back by -theta
    wx = -(ct * ux + st * uy)
    wy = -(-st * ux + ct * uy)
    s2 = math.atan2(b * wy, a * wx)
    p1x = a * math.cos(s1)
    p1y = b * math.sin(s1)
    c2x = a * math.cos(s2)
    c2y = b * math.sin(s2)
    p2x = ct * c2x - st * c2y
    p2y = st * c2x + ct * c2y
    dx = p1x - p2x
    dy = p1y - p2y
    eu = cpsi * ux + spsi * uy
    d = (dx * ux + dy * uy) / eu
    rx = dx - d * cpsi
    ry = dy - d * spsi
    g = -rx * uy + ry * ux
    return g, d, s1, s2


def _residual(a, b, ct, st, cpsi, spsi, s1, s2, d):
    """Tangency system residual (F1, F2, F3) at (s1, s2, d)."""
    c1, s1s = math.cos(s1), math.sin(s1)
    c2, s2s = math.cos(s2), math.sin(s2)
    p2x = ct * (a * c2) - st * (b * s2s)
    p2y = st * (a * c2) + ct * (b * s2s)
    f1 = a * c1 - d * cpsi - p2x
    f2 = b * s1s - d * spsi - p2y
    n1x, n1y = b * c1, a * s1s
    n2x = ct * (b * c2) - st * (a * s2s)
    n2y = st * (b * c2) + ct * (a * s2s)
    f3 = n1x * n2y - n1y * n2x
    return f1, f2, f3


def _newton(a, b, ct, st, cpsi, spsi, s1, s2, d, tol_len, tol_cross):
    """Damped Newton polish of the 3-unknown tangency system."""
    f1, f2, f3 = _residual(a, b, ct, st, cpsi, spsi, s1, s2, d)
    for _ in range(_NEWTON_MAX):
        if abs(f1) < tol_len and abs(f2) < tol_len and abs(f3) < tol_cross:
            return s1, s2, d, max(abs(f1), abs(f2), abs(f3) / max(1.0, a * a)), True
        c1, s1s = math.cos(s1), math.sin(s1)
        c2, s2s = math.cos(s2), math.sin(s2)
        t1x, t1y = -a * s1s, b * c1
        t2x = ct * (-a * s2s) - st * (b * c2)
        t2y = st * (-a * s2s) + ct * (b * c2)
        n1x, n1y = b * c1, a * s1s
        n2x = ct * (b * c2) - st * (a * s2s)
        n2y = st * (b * c2) + ct * (a * s2s)
        n1px, n1py = -b * s1s, a * c1
        n2px = ct * (-b * s2s) - st * (a * c2)
        n2py = st * (-b * s2s) + ct * (a * c2)
        # rows: d(F1,F2,F3)/d(s1, s2, d)
        j11, j12, j13 = t1x, -t2x, -cpsi
        j21, j22, j23 = t1y, -t2y, -spsi
        j31 = n1px * n2y - n1py * n2x
        j32 = n1x * n2py - n1y * n2px
        j33 = 0.0
        det = (
            j11 * (j22 * j33 - j23 * j32)
            - j12 * (j21 * j33 - j23 * j31)
            + j13 * (j21 * j32 - j22 * j31)
        )
        if det == 0.0:
            return s1, s2, d, max(abs(f1), abs(f2), abs(f3) / max(1.0, a * a)), False
        b1, b2, b3 = -f1, -f2, -f3
        ds1 = (
            b1 * (j22 * j33 - j23 * j32)
            - j12 * (b2 * j33 - j23 * b3)
            + j13 * (b2 * j32 - j22 * b3)
        ) / det
        ds2 = (
            j11 * (b2 * j33 - j23 * b3)
            - b1 * (j21 * j33 - j23 * j31)
            + j13 * (j21 * b3 - b2 * j31)
        ) / det
        dd = (
            j11 * (j22 * b3 - b2 * j32)
            - j12 * (j21 * b3 - b2 * j31)
            + b1 * (j21 * j32 - j22 * j31)
        ) / det
        base = max(abs(f1), abs(f2), abs(f3))
        lam = 1.0
        for _ in range(_BACKTRACK_MAX):
            s1n = s1 + lam * ds1
            s2n = s2 + lam * ds2
            dn = d + lam * dd
            g1, g2, g3 = _residual(a, b, ct, st, cpsi, spsi, s1n, s2n, dn)
            if max(abs(g1), abs(g2), abs(g3)) < base:
                break
            lam *= 0.5
        s1, s2, d = s1n, s2n, dn
        f1, f2, f3 = g1, g2, g3
    ok = abs(f1) < tol_len and abs(f2) < tol_len and abs(f3) < tol_cross
    return s1, s2, d, max(abs(f1), abs(f2), abs(f3) / max(1.0, a * a)), ok


def ellipse_contact(a, b, theta, psi, s1_seed=0.0, s2_seed=0.0, d_seed=0.0, use_seed=False):
    """Contact data for two congruent (a, b) ellipses in relative pose (theta, psi).

    Returns (d, s1, s2, resid, ok): center separation at tangency, boundary
    parameters of the contact point on each body, the scaled final residual,
    and a convergence flag. With use_seed, Newton starts from the supplied
    (s1_seed, s2_seed, d_seed); the coarse scan runs as fallback whenever the
    warm start fails or is absent.
    """
    ct, st = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    tol_len = 1e-13 * max(1.0, a)
    tol_cross = 1e-13 * max(1.0, a * a)

    if use_seed:
        s1, s2, d, resid, ok = _newton(
            a, b, ct, st, cpsi, spsi, s1_seed, s2_seed, d_seed, tol_len, tol_cross
        )
        if ok and d > 0.0:
            cn = math.cos(s1) * b * cpsi + math.sin(s1) * a * spsi
            if cn > 0.0:
                return d, s1, s2, resid, True

    # coarse scan of the normal angle over the half-circle facing body 2
    lo = psi - math.pi / 2 + _SCAN_MARGIN
    hi = psi + math.pi / 2 - _SCAN_MARGIN
    step = (hi - lo) / (_SCAN_N - 1)
    ga, da, s1a, s2a = _g_of_alpha(a, b, ct, st, cpsi, spsi, lo)
    found = False
    alo = lo
    for k in range(1, _SCAN_N):
        al = lo + k * step
        gb, db, s1b, s2b = _g_of_alpha(a, b, ct, st, cpsi, spsi, al)
        if ga == 0.0:
            s1, s2, d = s1a, s2a, da
            found = True
            break
        if ga * gb < 0.0:
            x0, x1, g0 = alo, al, ga
            for _ in range(_SCAN_BISECT):
                xm = 0.5 * (x0 + x1)
                gm, dm, s1m, s2m = _g_of_alpha(a, b, ct, st, cpsi, spsi, xm)
                if gm == 0.0:
                    break
                if g0 * gm < 0.0:
                    x1 = xm
                else:
                    x0, g0 = xm, gm
            gm, dm, s1m, s2m = _g_of_alpha(a, b, ct, st, cpsi, spsi, 0.5 * (x0 + x1))
            s1, s2, d = s1m, s2m, dm
            found = True
            break
        ga, da, s1a, s2a, alo = gb, db, s1b, s2b, al
    if not found:
        return 0.0, 0.0, 0.0, float("inf"), False

    s1, s2, d, resid, ok = _newton(
        a, b, ct, st, cpsi, spsi, s1, s2, d, tol_len, tol_cross
    )
    if not ok or d <= 0.0:
        return d, s1, s2, resid, False
    # contact normal must face from body 1 toward body 2
    cn = math.cos(s1) * b * cpsi + math.sin(s1) * a * spsi
    if cn <= 0.0:
        return d, s1, s2, resid, False
    return d, s1, s2, resid, True
