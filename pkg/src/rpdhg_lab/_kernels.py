"""Compiled inner loops for the restarted solver.

State arrays are updated in place so one call can run many OnePDHG steps
without returning to Python.  ``A x`` and ``A' y`` of the running average are
kept as running averages too, so each step costs exactly two matvecs.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BISECTION_FAILED = 1


@njit(cache=True)
def _clipped_norm_sq(lam, x, dx, dy2, tau, sigma):
    # squared M-tilde norm of Delta(lam)
    acc = 0.0
    for i in range(x.size):
        v = tau * dx[i] / lam
        if v < -x[i]:
            v = -x[i]
        acc += v * v
    return acc / tau + sigma * dy2 / (lam * lam)


@njit(cache=True)
def _clipped_value(lam, x, dx, dy2, tau, sigma):
    acc = 0.0
    for i in range(x.size):
        v = tau * dx[i] / lam
        if v < -x[i]:
            v = -x[i]
        acc += dx[i] * v
    return acc + sigma * dy2 / lam


@njit(cache=True)
def rho_mtilde(x, dx, dy, r, tau, sigma, rtol, maxit):
    """Normalized duality gap over the M-tilde ball of radius ``r``.

    ``dx = A'y - c`` and ``dy = b - Ax`` at the point.  Returns ``(rho, status)``.
    """
    dy2 = 0.0
    for i in range(dy.size):
        dy2 += dy[i] * dy[i]
    has_pos = False
    lim_val = 0.0
    lim_sq = 0.0
    unclipped = sigma * dy2
    for i in range(x.size):
        d = dx[i]
        unclipped += tau * d * d
        if d > 0.0:
            has_pos = True
        elif d < 0.0:
            lim_val -= d * x[i]
            lim_sq += x[i] * x[i]
    if unclipped == 0.0:
        return 0.0, STATUS_OK
    r2 = r * r
    if (not has_pos) and dy2 == 0.0 and lim_sq / tau <= r2:
        return lim_val / r, STATUS_OK

    # norm(lam) is nonincreasing; the unclipped norm at hi is exactly r
    hi = np.sqrt(unclipped) / r
    lo = hi
    found = False
    for _ in range(2200):
        lo *= 0.5
        if _clipped_norm_sq(lo, x, dx, dy2, tau, sigma) > r2:
            found = True
            break
        hi = lo
    if not found:
        return np.nan, STATUS_BISECTION_FAILED

    ok = False
    for _ in range(maxit):
        if hi - lo <= rtol * hi:
            ok = True
            break
        mid = np.sqrt(lo * hi)
        if _clipped_norm_sq(mid, x, dx, dy2, tau, sigma) > r2:
            lo = mid
        else:
            hi = mid
    if not ok:
        return np.nan, STATUS_BISECTION_FAILED
    return _clipped_value(hi, x, dx, dy2, tau, sigma) / r, STATUS_OK


@njit(cache=True)
def inner_loop(
    A, AT, b, c, tau, sigma, beta, rho_ref, first_loop,
    x, y, ax, aty, x0, y0, xbar, ybar, axbar, atybar, xnew,
    k, max_steps, rtol, maxit,
):
    """Run OnePDHG steps until the restart test fires or ``max_steps`` is used.

    Returns ``(k, steps_taken, restarted, rho, radius, status)``.
    """
    m, n = A.shape
    rho = np.inf
    r = 0.0
    dx = np.empty(n)
    dy = np.empty(m)
    for step in range(max_steps):
        for i in range(n):
            v = x[i] - tau * (c[i] - aty[i])
            xnew[i] = v if v > 0.0 else 0.0
        axn = np.dot(A, xnew)
        for i in range(m):
            y[i] += sigma * (b[i] - 2.0 * axn[i] + ax[i])
        for i in range(n):
            x[i] = xnew[i]
        for i in range(m):
            ax[i] = axn[i]
        atn = np.dot(AT, y)
        for i in range(n):
            aty[i] = atn[i]

        k += 1
        w = 1.0 / k
        dist2x = 0.0
        for i in range(n):
            xbar[i] += (x[i] - xbar[i]) * w
            atybar[i] += (aty[i] - atybar[i]) * w
            t = xbar[i] - x0[i]
            dist2x += t * t
        dist2y = 0.0
        for i in range(m):
            ybar[i] += (y[i] - ybar[i]) * w
            axbar[i] += (ax[i] - axbar[i]) * w
            t = ybar[i] - y0[i]
            dist2y += t * t
        r = np.sqrt(dist2x / tau + dist2y / sigma)

        if r == 0.0:
            rho = 0.0
        else:
            for i in range(n):
                dx[i] = atybar[i] - c[i]
            for i in range(m):
                dy[i] = b[i] - axbar[i]
            rho, status = rho_mtilde(xbar, dx, dy, r, tau, sigma, rtol, maxit)
            if status != STATUS_OK:
                return k, step + 1, False, rho, r, status
        if (first_loop and k == 1) or rho <= beta * rho_ref:
            return k, step + 1, True, rho, r, STATUS_OK
    return k, max_steps, False, rho, r, STATUS_OK
