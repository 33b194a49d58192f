"""Numba kernels for the hot loops of the front-fixing solver.

The formulas here mirror model.psi_eval / model.phi_eval / model.f_eval and
the operator layout documented in solver.py; keep the two in lockstep.
Nonlinearity families are dispatched by an integer code (0 = power law,
1 = tabulated) so a single compiled path serves every scenario.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# step kernel status codes
STEP_OK = 0
STEP_NO_CONVERGENCE = 1
STEP_BLOWUP = 2


@njit(cache=True)
def _psi(r, k0, p):
    if r <= 0.0:
        return 0.0
    return k0 * r**p


@njit(cache=True)
def _phi(r, fam, a, b, q, tab_r, tab_phi):
    if fam == 0:
        if r >= 0.0:
            return a * r + b * r**q
        return a * r - b * (-r) ** q
    return np.interp(r, tab_r, tab_phi)


@njit(cache=True)
def _f(u, v, gamma, m, fam, a, b, q, tab_r, tab_phi):
    r = gamma * v - u
    if m > 0.0:
        if r > m:
            r = m
        elif r < -m:
            r = -m
    return _phi(r, fam, a, b, q, tab_r, tab_phi)


@njit(cache=True)
def _thomas(sub, dia, sup, rhs):
    """Solve the tridiagonal system in place; rhs is overwritten with x."""
    n = rhs.shape[0]
    cp = np.empty(n)
    cp[0] = sup[0] / dia[0]
    rhs[0] = rhs[0] / dia[0]
    for i in range(1, n):
        den = dia[i] - sub[i] * cp[i - 1]
        cp[i] = sup[i] / den
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / den
    for i in range(n - 2, -1, -1):
        rhs[i] -= cp[i] * rhs[i + 1]
    return rhs


@njit(cache=True)
def _apply_op(w, s, sdot, kappa, extra, upwind, dy, out):
    """Explicit evaluation of the spatial operator (rows 1..n-1; row 0 zero)."""
    n = w.shape[0]
    mu = kappa / (s * s * dy * dy)
    out[0] = 0.0
    for i in range(1, n - 1):
        adv = (sdot / s) * (i * dy)
        if upwind:
            out[i] = mu * (w[i + 1] - 2.0 * w[i] + w[i - 1]) + adv * (w[i + 1] - w[i]) / dy
        else:
            out[i] = mu * (w[i + 1] - 2.0 * w[i] + w[i - 1]) + adv * (w[i + 1] - w[i - 1]) / (2.0 * dy)
    if upwind:
        out[n - 1] = (
            (2.0 * mu + sdot / (s * dy)) * w[n - 2]
            - (2.0 * mu + 3.0 * sdot / (s * dy) + 2.0 * sdot * sdot / kappa) * w[n - 1]
            - (2.0 / (s * dy) + 2.0 * sdot / kappa) * extra
        )
    else:
        out[n - 1] = (
            2.0 * mu * w[n - 2]
            - (2.0 * mu + 2.0 * sdot / (s * dy) + sdot * sdot / kappa) * w[n - 1]
            - (2.0 / (s * dy) + sdot / kappa) * extra
        )


@njit(cache=True)
def _assemble_and_solve(w_old, s, sdot, kappa, extra, upwind, dy, dt, theta,
                        expl, src, bc_new, sub, dia, sup, rhs):
    """Fill (I - dt*theta*A) x = w_old + dt*(theta*b + expl + src) and solve."""
    n = w_old.shape[0]
    mu = kappa / (s * s * dy * dy)
    c = dt * theta
    sub[0] = 0.0
    dia[0] = 1.0
    sup[0] = 0.0
    rhs[0] = bc_new
    for i in range(1, n - 1):
        adv = (sdot / s) * (i * dy)
        if upwind:
            sub[i] = -c * mu
            dia[i] = 1.0 + c * (2.0 * mu + adv / dy)
            sup[i] = -c * (mu + adv / dy)
        else:
            sub[i] = -c * (mu - adv / (2.0 * dy))
            dia[i] = 1.0 + c * 2.0 * mu
            sup[i] = -c * (mu + adv / (2.0 * dy))
        rhs[i] = w_old[i] + dt * (expl[i] + src[i])
    if upwind:
        sub[n - 1] = -c * (2.0 * mu + sdot / (s * dy))
        dia[n - 1] = 1.0 + c * (2.0 * mu + 3.0 * sdot / (s * dy) + 2.0 * sdot * sdot / kappa)
        const = -(2.0 / (s * dy) + 2.0 * sdot / kappa) * extra
    else:
        sub[n - 1] = -c * 2.0 * mu
        dia[n - 1] = 1.0 + c * (2.0 * mu + 2.0 * sdot / (s * dy) + sdot * sdot / kappa)
        const = -(2.0 / (s * dy) + sdot / kappa) * extra
    sup[n - 1] = 0.0
    rhs[n - 1] = w_old[n - 1] + dt * (theta * const + expl[n - 1] + src[n - 1])
    _thomas(sub, dia, sup, rhs)
    rhs[0] = bc_new  # keep the Dirichlet node exact to the bit
    return rhs


@njit(cache=True)
def step_kernel(u, v, s_prev, sdot_prev, dt, theta, upwind,
                k0, p, kappa1, kappa2, gamma, m,
                fam, a, b, q, tab_r, tab_phi,
                g_new, h_new, picard_tol, picard_max):
    """One Picard-iterated theta-step; returns (u, v, s, status, change, iters)."""
    n = u.shape[0]
    dy = 1.0 / (n - 1)

    f_old = np.empty(n)
    for i in range(n):
        f_old[i] = _f(u[i], v[i], gamma, m, fam, a, b, q, tab_r, tab_phi)

    expl_u = np.zeros(n)
    expl_v = np.zeros(n)
    if theta < 1.0:
        psi_old = _psi(u[n - 1], k0, p)
        _apply_op(u, s_prev, sdot_prev, kappa1, psi_old, upwind, dy, expl_u)
        _apply_op(v, s_prev, sdot_prev, kappa2, 0.0, upwind, dy, expl_v)
        for i in range(n):
            expl_u[i] *= 1.0 - theta
            expl_v[i] *= 1.0 - theta

    sub = np.empty(n)
    dia = np.empty(n)
    sup = np.empty(n)
    rhs_u = np.empty(n)
    rhs_v = np.empty(n)
    src_u = np.empty(n)
    src_v = np.empty(n)

    s_guess = s_prev + dt * _psi(u[n - 1], k0, p)
    u_lag = u.copy()
    v_lag = v.copy()
    change = np.inf
    iters = 0

    for it in range(picard_max):
        iters = it + 1
        sdot = (s_guess - s_prev) / dt
        psi_lag = _psi(u_lag[n - 1], k0, p)
        for i in range(n):
            fl = _f(u_lag[i], v_lag[i], gamma, m, fam, a, b, q, tab_r, tab_phi)
            src_u[i] = theta * fl + (1.0 - theta) * f_old[i]
            src_v[i] = -src_u[i]

        u_new = _assemble_and_solve(u, s_guess, sdot, kappa1, psi_lag, upwind, dy,
                                    dt, theta, expl_u, src_u, g_new, sub, dia, sup, rhs_u)
        v_new = _assemble_and_solve(v, s_guess, sdot, kappa2, 0.0, upwind, dy,
                                    dt, theta, expl_v, src_v, h_new, sub, dia, sup, rhs_v)
        s_new = s_prev + dt * _psi(u_new[n - 1], k0, p)

        if not np.isfinite(s_new):
            return u_lag, v_lag, s_guess, STEP_BLOWUP, change, iters
        du_max = 0.0
        u_max = 0.0
        dv_max = 0.0
        v_max = 0.0
        finite = True
        for i in range(n):
            if not (np.isfinite(u_new[i]) and np.isfinite(v_new[i])):
                finite = False
                break
            au = abs(u_new[i] - u_lag[i])
            av = abs(v_new[i] - v_lag[i])
            if au > du_max:
                du_max = au
            if av > dv_max:
                dv_max = av
            if abs(u_new[i]) > u_max:
                u_max = abs(u_new[i])
            if abs(v_new[i]) > v_max:
                v_max = abs(v_new[i])
        if not finite:
            return u_lag, v_lag, s_guess, STEP_BLOWUP, change, iters

        change = abs(s_new - s_guess) / s_new
        cu = du_max / (1.0 + u_max)
        cv = dv_max / (1.0 + v_max)
        if cu > change:
            change = cu
        if cv > change:
            change = cv

        u_lag = u_new.copy()
        v_lag = v_new.copy()
        s_guess = s_new
        if change < picard_tol:
            return u_lag, v_lag, s_guess, STEP_OK, change, iters

    return u_lag, v_lag, s_guess, STEP_NO_CONVERGENCE, change, iters


@njit(cache=True)
def measure_kernel(u, v, s, sdot, g_t, h_t, gp, hp, g_star, h_star,
                   k0, p, kappa1, kappa2, gamma, m, fam, a, b, q, tab_r, tab_phi):
    """Instantaneous integrands (solver.INTEGRAL_KEYS order) and checkpoint scalars.

    Spatial quadrature is trapezoid on the unit grid; the gradient integrals
    use the exact Dirichlet energy of the piecewise-linear interpolant.
    """
    n = u.shape[0]
    dy = 1.0 / (n - 1)
    u1 = u[n - 1]
    v1 = v[n - 1]
    psi1 = _psi(u1, k0, p)

    int_f = 0.0
    int_react = 0.0
    int_du = 0.0
    int_dv = 0.0
    int_moment = 0.0
    int_l2u = 0.0
    int_l2v = 0.0
    grad_u = 0.0
    grad_v = 0.0
    u_min = u[0]
    u_max = u[0]
    v_min = v[0]
    v_max = v[0]
    for i in range(n):
        w = 0.5 if (i == 0 or i == n - 1) else 1.0
        fi = _f(u[i], v[i], gamma, m, fam, a, b, q, tab_r, tab_phi)
        int_f += w * fi
        int_react += w * abs(gamma * v[i] - u[i]) ** (q + 1.0)
        int_du += w * (u[i] - g_t)
        int_dv += w * (v[i] - h_t)
        int_moment += w * (i * dy) * (u[i] + v[i])
        int_l2u += w * (u[i] - g_t) ** 2
        int_l2v += w * (v[i] - h_t) ** 2
        if i > 0:
            grad_u += (u[i] - u[i - 1]) ** 2
            grad_v += (v[i] - v[i - 1]) ** 2
        if u[i] < u_min:
            u_min = u[i]
        if u[i] > u_max:
            u_max = u[i]
        if v[i] < v_min:
            v_min = v[i]
        if v[i] > v_max:
            v_max = v[i]

    integrands = np.empty(14)
    integrands[0] = u1
    integrands[1] = v1
    integrands[2] = g_t
    integrands[3] = h_t
    integrands[4] = grad_u / (dy * s)
    integrands[5] = grad_v / (dy * s)
    integrands[6] = s * int_react * dy
    integrands[7] = psi1 * (u1 - g_t)
    integrands[8] = sdot * ((u1 - g_t) ** 2 + gamma * (v1 - h_t) ** 2)
    integrands[9] = gp * s * int_du * dy
    integrands[10] = hp * s * int_dv * dy
    integrands[11] = (g_t - g_star) * s * int_f * dy
    integrands[12] = (h_t - h_star) * s * int_f * dy
    integrands[13] = sdot * g_t * (u1 - g_t) + gamma * sdot * h_t * (v1 - h_t)

    scalars = np.empty(9)
    scalars[0] = u_min
    scalars[1] = u_max
    scalars[2] = v_min
    scalars[3] = v_max
    scalars[4] = u1
    scalars[5] = v1
    scalars[6] = s * s * int_moment * dy
    scalars[7] = s * int_l2u * dy
    scalars[8] = s * int_l2v * dy
    return integrands, scalars


@njit(cache=True)
def explicit_tracking_step(u, v, s, dt, dx,
                           k0, p, kappa1, kappa2, gamma, m,
                           fam, a, b, q, tab_r, tab_phi, g_new, h_new):
    """Forward-Euler step of the physical-domain system on the frozen grid.

    The moving end carries the kinetic flux condition through a ghost node;
    the front itself is advanced and the fields regridded by the caller.
    Returns (u_new, v_new) on the same grid.
    """
    n = u.shape[0]
    sp = _psi(u[n - 1], k0, p)
    u_ghost = u[n - 2] - (2.0 * dx / kappa1) * (sp * u[n - 1] + _psi(u[n - 1], k0, p))
    v_ghost = v[n - 2] - (2.0 * dx / kappa2) * (sp * v[n - 1])

    u_new = np.empty(n)
    v_new = np.empty(n)
    u_new[0] = g_new
    v_new[0] = h_new
    for i in range(1, n):
        up = u_ghost if i == n - 1 else u[i + 1]
        vp = v_ghost if i == n - 1 else v[i + 1]
        fi = _f(u[i], v[i], gamma, m, fam, a, b, q, tab_r, tab_phi)
        u_new[i] = u[i] + dt * (kappa1 * (up - 2.0 * u[i] + u[i - 1]) / (dx * dx) + fi)
        v_new[i] = v[i] + dt * (kappa2 * (vp - 2.0 * v[i] + v[i - 1]) / (dx * dx) - fi)
    return u_new, v_new
