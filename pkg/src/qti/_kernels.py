"""Inner trajectory loops for the samplers.

Kernels are plain scalar loops over pre-drawn noise blocks, so they run
unchanged with or without numba and give bit-identical trajectories either
way. No random state lives inside a kernel.

Potential codes: 0 = truncated Hermite series, 1 = closed form
x^2/2 + amp sin(freq x) exp(-x^2/2).
Feature codes: 0 = gaussian bump exp(-b (x-a)^2), 1 = phi_a(b x),
2 = position moment x^a, 3 = momentum moment p^a.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_SQRT2 = math.sqrt(2.0)
_PI_QUARTER = math.pi ** -0.25
_LOG2 = math.log(2.0)


@njit(cache=True, nogil=True)
def _series_value_grad(v, xj):
    """Value and derivative of x^2/2 + sum v_i phi_i at a point."""
    p0 = _PI_QUARTER * math.exp(-0.5 * xj * xj)
    p1 = _SQRT2 * xj * p0
    val = v[0] * p0
    grad = v[0] * (xj * p0 - _SQRT2 * p1)
    pm = p0
    pc = p1
    for i in range(1, v.shape[0]):
        pn = xj * math.sqrt(2.0 / (i + 1)) * pc - math.sqrt(i / (i + 1.0)) * pm
        val += v[i] * pc
        grad += v[i] * (xj * pc - math.sqrt(2.0 * (i + 1)) * pn)
        pm = pc
        pc = pn
    return 0.5 * xj * xj + val, xj + grad


@njit(cache=True, nogil=True)
def _pot_grad(pot_kind, pv, xj):
    if pot_kind == 0:
        _, g = _series_value_grad(pv, xj)
        return g
    # closed form: x^2/2 + amp sin(freq x) exp(-x^2/2)
    amp = pv[0]
    freq = pv[1]
    env = math.exp(-0.5 * xj * xj)
    return xj + amp * env * (freq * math.cos(freq * xj) - xj * math.sin(freq * xj))


@njit(cache=True, nogil=True)
def _phi_n(n, x):
    p0 = _PI_QUARTER * math.exp(-0.5 * x * x)
    if n == 0:
        return p0
    p1 = _SQRT2 * x * p0
    for i in range(1, n):
        pn = x * math.sqrt(2.0 / (i + 1)) * p1 - math.sqrt(i / (i + 1.0)) * p0
        p0 = p1
        p1 = pn
    return p1


@njit(cache=True, nogil=True)
def _feat(kind, a, b, qi, pi):
    if kind == 0:
        d = qi - a
        return math.exp(-b * d * d)
    if kind == 1:
        return _phi_n(int(a), b * qi)
    if kind == 2:
        return qi ** a
    return pi ** a


@njit(cache=True, nogil=True)
def fill_force(pot_kind, pv, M, beta_N, q, f):
    N = q.shape[0]
    spring = M / (beta_N * beta_N)
    for i in range(N):
        inext = i + 1 if i + 1 < N else 0
        iprev = i - 1 if i > 0 else N - 1
        f[i] = -(spring * (2.0 * q[i] - q[iprev] - q[inext]) + _pot_grad(pot_kind, pv, q[i]))


@njit(cache=True, nogil=True)
def run_baoab_chunk(pot_kind, pv, M, beta_N, dt, c1, c2, q, p, f, noise,
                    n_burnin, thin, step0, fkind, fa, fb, samples, nsam0):
    """Advance the ring by noise.shape[0] BAOAB steps, accumulating features.

    f must hold the force at the entry q. Returns the updated sample count.
    """
    K, N = noise.shape
    spring = M / (beta_N * beta_N)
    nf = fkind.shape[0]
    si = nsam0
    half = 0.5 * dt
    for t in range(K):
        for i in range(N):
            p[i] += half * f[i]
        for i in range(N):
            q[i] += half * p[i] / M
        for i in range(N):
            p[i] = c1 * p[i] + c2 * noise[t, i]
        for i in range(N):
            q[i] += half * p[i] / M
        for i in range(N):
            inext = i + 1 if i + 1 < N else 0
            iprev = i - 1 if i > 0 else N - 1
            f[i] = -(spring * (2.0 * q[i] - q[iprev] - q[inext]) + _pot_grad(pot_kind, pv, q[i]))
        for i in range(N):
            p[i] += half * f[i]
        gstep = step0 + t + 1
        if gstep > n_burnin and (gstep - n_burnin) % thin == 0:
            for j in range(nf):
                s = 0.0
                for i in range(N):
                    s += _feat(fkind[j], fa[j], fb[j], q[i], p[i])
                samples[si, j] = s / N
            si += 1
    return si


# ---------------------------------------------------------------------------
# two-level kernels


@njit(cache=True, nogil=True)
def _v01_value_grad(amps, cents, wids, xj):
    val = 0.0
    grad = 0.0
    for m in range(amps.shape[0]):
        d = xj - cents[m]
        s2 = wids[m] * wids[m]
        g = amps[m] * math.exp(-0.5 * d * d / s2)
        val += g
        grad += -g * d / s2
    return val, grad


@njit(cache=True, nogil=True)
def _log_cosh(t):
    # t >= 0; stable for large t
    return t + math.log1p(math.exp(-2.0 * t)) - _LOG2


@njit(cache=True, nogil=True)
def _log_sinh(t):
    # t > 0; -inf at t == 0 (the zero-coupling sentinel)
    if t <= 0.0:
        return -math.inf
    return t + math.log(-math.expm1(-2.0 * t)) - _LOG2


@njit(cache=True, nogil=True)
def tl_refresh(v00, v11, amps, cents, wids, M, beta_N, q, lvec, f, a00, a11, lc, ls):
    """Recompute per-bead potential values and the force for the current (q, l).

    a00/a11 are the diagonal potential values, lc/ls the log-cosh and
    log-sinh branch terms divided by beta_N (ls = +inf -> stored as -inf in
    the log, meaning the off-diagonal branch is forbidden).
    """
    N = q.shape[0]
    spring = M / (beta_N * beta_N)
    for i in range(N):
        w0, g0 = _series_value_grad(v00, q[i])
        w1, g1 = _series_value_grad(v11, q[i])
        cv, cg = _v01_value_grad(amps, cents, wids, q[i])
        t = beta_N * cv
        a00[i] = w0
        a11[i] = w1
        lc[i] = _log_cosh(t) / beta_N
        ls[i] = _log_sinh(t) / beta_N
        inext = i + 1 if i + 1 < N else 0
        iprev = i - 1 if i > 0 else N - 1
        if lvec[i] == lvec[inext]:
            gpot = (g1 if lvec[i] == 1 else g0) - math.tanh(t) * cg
        else:
            # coth(t) cg stays finite as t -> 0 because cg ~ t
            gpot = 0.5 * (g0 + g1) - (cg / math.tanh(t) if t > 0.0 else 0.0)
        f[i] = -(spring * (2.0 * q[i] - q[iprev] - q[inext]) + gpot)


@njit(cache=True, nogil=True)
def _branch(level, level_next, i, a00, a11, lc, ls):
    """Potential branch of the G entry at bead i for levels (level, level_next)."""
    if level == level_next:
        return (a11[i] if level == 1 else a00[i]) - lc[i]
    return 0.5 * (a00[i] + a11[i]) - ls[i]


@njit(cache=True, nogil=True)
def run_tl_chunk(v00, v11, amps, cents, wids, M, beta_N, dt, c1, c2, eta,
                 q, p, lvec, f, a00, a11, lc, ls, noise, u_jump, u_pick,
                 n_burnin, thin, step0, fplace, fkind, fa, fb, samples, nsam0):
    """Advance the 2-level ring, hopping between label vectors after each step.

    The label chain at frozen (q, p) is an exact continuous-time Markov
    chain; each step exposes it for a window dt via an exponential clock
    (at most u_jump.shape[1] events per window, a cap that is astronomically
    unlikely to bind). Exactness here keeps the joint Gibbs measure
    stationary up to the BAOAB bias alone.

    Caches (f, a00, a11, lc, ls) must match the entry state; they are kept
    consistent on exit. Returns (sample count, hop count).
    """
    K, N = noise.shape
    nf = fkind.shape[0]
    si = nsam0
    half = 0.5 * dt
    hops = 0
    n_events = u_jump.shape[1]
    lam = np.empty(N + 1)
    for t in range(K):
        # BAOAB at fixed labels
        for i in range(N):
            p[i] += half * f[i]
        for i in range(N):
            q[i] += half * p[i] / M
        for i in range(N):
            p[i] = c1 * p[i] + c2 * noise[t, i]
        for i in range(N):
            q[i] += half * p[i] / M
        tl_refresh(v00, v11, amps, cents, wids, M, beta_N, q, lvec, f, a00, a11, lc, ls)
        for i in range(N):
            p[i] += half * f[i]

        # label jumps over the window [0, dt] at frozen q
        rem = dt
        for ev in range(n_events):
            # intensities for the N single flips, then the full flip
            total = 0.0
            for j in range(N):
                jn = j + 1 if j + 1 < N else 0
                jp = j - 1 if j > 0 else N - 1
                old = _branch(lvec[jp], lvec[j], jp, a00, a11, lc, ls) + \
                    _branch(lvec[j], lvec[jn], j, a00, a11, lc, ls)
                new = _branch(lvec[jp], 1 - lvec[j], jp, a00, a11, lc, ls) + \
                    _branch(1 - lvec[j], lvec[jn], j, a00, a11, lc, ls)
                dh = new - old
                if dh != dh:
                    lam[j] = 0.0
                else:
                    # symmetric square-root form; exact detailed balance.
                    # unbounded, so clamp the exponent; the exponential
                    # clock below tolerates any intensity scale.
                    e = -0.5 * beta_N * dh
                    lam[j] = eta * math.exp(e if e < 700.0 else 700.0)
                total += lam[j]
            dh = 0.0
            for k in range(N):
                kn = k + 1 if k + 1 < N else 0
                if lvec[k] == lvec[kn]:
                    dh += (a00[k] - a11[k]) if lvec[k] == 1 else (a11[k] - a00[k])
            e = -0.5 * beta_N * dh
            lam[N] = eta * math.exp(e if e < 700.0 else 700.0)
            total += lam[N]

            u = u_jump[t, ev]
            if total <= 0.0 or u <= 0.0:
                break
            wait = -math.log(u) / total
            if wait >= rem:
                break
            rem -= wait
            target = u_pick[t, ev] * total
            acc = 0.0
            pick = N
            for m in range(N + 1):
                acc += lam[m]
                if target < acc:
                    pick = m
                    break
            if pick == N:
                for i in range(N):
                    lvec[i] = 1 - lvec[i]
            else:
                lvec[pick] = 1 - lvec[pick]
            hops += 1
            tl_refresh(v00, v11, amps, cents, wids, M, beta_N, q, lvec, f, a00, a11, lc, ls)

        gstep = step0 + t + 1
        if gstep > n_burnin and (gstep - n_burnin) % thin == 0:
            for jf in range(nf):
                s = 0.0
                if fplace[jf] == 0:
                    for i in range(N):
                        s += _feat(fkind[jf], fa[jf], fb[jf], q[i], p[i])
                else:
                    for i in range(N):
                        inext = i + 1 if i + 1 < N else 0
                        cur = _branch(lvec[i], lvec[inext], i, a00, a11, lc, ls)
                        flip = _branch(1 - lvec[i], lvec[inext], i, a00, a11, lc, ls)
                        d = beta_N * (cur - flip)
                        if d > 700.0:
                            d = 700.0
                        s += -_feat(fkind[jf], fa[jf], fb[jf], q[i], p[i]) * math.exp(d)
                samples[si, jf] = s / N
            si += 1
    return si, hops
