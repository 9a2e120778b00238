# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evolution kernels.

Same Tsitouras 5(4) controller as ``_integrator.tsit5``, specialised to two
right-hand sides: the Kerr-qudit Lindblad equation (exploiting the tridiagonal
Hamiltonian, O(d^2) per evaluation) and the driven Duffing oscillator.
Status codes: 0 ok, 1 step-size underflow, 2 non-finite state.
"""
import numpy as np

from libc.math cimport sin, sqrt, fabs, pow
from libc.stdlib cimport malloc, free

from quditrc._tableau import A as _A, C as _C, E as _E

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0
cdef double H_MIN = 1e-12

cdef double TA[7][7]
cdef double TC[7]
cdef double TE[7]

cdef int _i, _j
for _i in range(7):
    TC[_i] = _C[_i]
    TE[_i] = _E[_i]
    for _j in range(7):
        TA[_i][_j] = _A[_i][_j] if _j < len(_A[_i]) else 0.0

ctypedef void (*rhs_t)(double t, double complex* y, double complex* out, void* ctx) noexcept nogil


cdef struct Drive:
    double alpha
    double omega
    double phi
    double beta


cdef struct QuditCtx:
    int d
    double kappa
    double* hd      # Omega n + K n^2
    double* sq      # sqrt(n), length d + 1
    Drive drive


cdef struct DuffingCtx:
    double Omega
    double K
    double kappa
    Drive drive


cdef inline double drive_at(Drive* dr, double t) noexcept nogil:
    if dr.alpha == 0.0:
        return dr.beta
    return dr.alpha * sin(dr.omega * t + dr.phi) + dr.beta


cdef void qudit_rhs(double t, double complex* rho, double complex* out, void* ctx) noexcept nogil:
    cdef QuditCtx* c = <QuditCtx*> ctx
    cdef int d = c.d
    cdef double kappa = c.kappa
    cdef double u = drive_at(&c.drive, t)
    cdef double* hd = c.hd
    cdef double* sq = c.sq
    cdef int m, n
    cdef double complex acc, com
    cdef double complex I = 1j
    for m in range(d):
        for n in range(d):
            acc = (-I * (hd[m] - hd[n]) - 0.5 * kappa * (m + n)) * rho[m * d + n]
            com = 0.0
            if m + 1 < d:
                com = com + sq[m + 1] * rho[(m + 1) * d + n]
                if n + 1 < d:
                    acc = acc + kappa * sq[m + 1] * sq[n + 1] * rho[(m + 1) * d + n + 1]
            if m >= 1:
                com = com + sq[m] * rho[(m - 1) * d + n]
            if n >= 1:
                com = com - sq[n] * rho[m * d + n - 1]
            if n + 1 < d:
                com = com - sq[n + 1] * rho[m * d + n + 1]
            out[m * d + n] = acc - I * u * com


cdef void duffing_rhs(double t, double complex* a, double complex* out, void* ctx) noexcept nogil:
    cdef DuffingCtx* c = <DuffingCtx*> ctx
    cdef double complex I = 1j
    cdef double complex z = a[0]
    cdef double mag2 = z.real * z.real + z.imag * z.imag
    cdef double u = drive_at(&c.drive, t)
    out[0] = -I * (c.Omega + c.K) * z - I * 2.0 * c.K * mag2 * z - 0.5 * c.kappa * z - I * u


cdef inline bint finite(double x) noexcept nogil:
    return x - x == 0.0


cdef int tsit5(rhs_t f, void* ctx, double complex* y, int n, double t0,
               double* times, int n_times, double complex* out,
               double atol, double rtol, double h0, double hmax,
               long* n_steps) noexcept nogil:
    cdef double complex* k = <double complex*> malloc(7 * n * sizeof(double complex))
    cdef double complex* ynew = <double complex*> malloc(n * sizeof(double complex))
    cdef double complex* tmp
    cdef double t = t0
    cdef double h = h0 if h0 < hmax else hmax
    cdef double h_try, h_new, target, norm, factor, sc, e, a
    cdef double complex acc, errc
    cdef int idx, s, j, i, status = 0
    cdef bint hit, bad
    if k == NULL or ynew == NULL:
        free(k)
        free(ynew)
        return 2
    f(t, y, k, ctx)
    for idx in range(n_times):
        target = times[idx]
        while t < target:
            h_try = h
            hit = t + h_try >= target
            if hit:
                h_try = target - t
            for s in range(1, 7):
                for i in range(n):
                    acc = y[i]
                    for j in range(s):
                        a = TA[s][j]
                        if a != 0.0:
                            acc = acc + (h_try * a) * k[j * n + i]
                    ynew[i] = acc
                f(t + TC[s] * h_try, ynew, k + s * n, ctx)
            norm = 0.0
            bad = False
            for i in range(n):
                errc = 0.0
                for j in range(7):
                    errc = errc + TE[j] * k[j * n + i]
                errc = errc * h_try
                if not (finite(ynew[i].real) and finite(ynew[i].imag) and finite(errc.real) and finite(errc.imag)):
                    bad = True
                    break
                sc = atol + rtol * (fabs(y[i].real) if fabs(y[i].real) > fabs(ynew[i].real) else fabs(ynew[i].real))
                e = errc.real / sc
                norm += e * e
                sc = atol + rtol * (fabs(y[i].imag) if fabs(y[i].imag) > fabs(ynew[i].imag) else fabs(ynew[i].imag))
                e = errc.imag / sc
                norm += e * e
            if bad:
                h = h_try * FAC_MIN
                if h < H_MIN:
                    status = 2
                    break
                continue
            norm = sqrt(norm / (2.0 * n))
            if norm <= 1.0:
                t = target if hit else t + h_try
                for i in range(n):
                    y[i] = ynew[i]
                    k[i] = k[6 * n + i]
                n_steps[0] += 1
                if norm == 0.0:
                    factor = FAC_MAX
                else:
                    factor = SAFETY * pow(norm, -0.2)
                    if factor > FAC_MAX:
                        factor = FAC_MAX
                    if factor < FAC_MIN:
                        factor = FAC_MIN
                h_new = h_try * factor
                if hit and h_new < h:
                    h_new = h
                h = h_new if h_new < hmax else hmax
            else:
                factor = SAFETY * pow(norm, -0.2)
                if factor < FAC_MIN:
                    factor = FAC_MIN
                h = h_try * factor
                if h < H_MIN:
                    status = 1
                    break
        if status != 0:
            break
        for i in range(n):
            out[idx * n + i] = y[i]
    free(k)
    free(ynew)
    return status


def evolve_qudit(double complex[:, ::1] rho0, double Omega, double K, double kappa,
                 double alpha, double omega, double phi, double beta,
                 double t0, double[::1] times, double atol, double rtol,
                 double h0, double hmax):
    """Evolve a density matrix and return (states[T, d, d], status, n_steps)."""
    cdef int d = rho0.shape[0]
    cdef int n_times = times.shape[0]
    cdef QuditCtx ctx
    cdef long n_steps = 0
    cdef int status
    hd = np.empty(d, dtype=np.float64)
    sq = np.sqrt(np.arange(d + 1, dtype=np.float64))
    cdef int m
    for m in range(d):
        hd[m] = Omega * m + K * m * m
    cdef double[::1] hd_v = hd
    cdef double[::1] sq_v = sq
    y = np.array(rho0, dtype=np.complex128, order="C", copy=True)
    out = np.zeros((n_times, d, d), dtype=np.complex128)
    cdef double complex[:, ::1] y_v = y
    cdef double complex[:, :, ::1] out_v = out
    ctx.d = d
    ctx.kappa = kappa
    ctx.hd = &hd_v[0]
    ctx.sq = &sq_v[0]
    ctx.drive.alpha = alpha
    ctx.drive.omega = omega
    ctx.drive.phi = phi
    ctx.drive.beta = beta
    if n_times == 0:
        return out, 0, 0
    with nogil:
        status = tsit5(qudit_rhs, &ctx, &y_v[0, 0], d * d, t0, &times[0], n_times,
                       &out_v[0, 0, 0], atol, rtol, h0, hmax, &n_steps)
    return out, status, n_steps


def evolve_duffing(double complex a0, double Omega, double K, double kappa,
                   double alpha, double omega, double phi, double beta,
                   double t0, double[::1] times, double atol, double rtol,
                   double h0, double hmax):
    """Evolve the classical amplitude and return (a[T], status, n_steps)."""
    cdef int n_times = times.shape[0]
    cdef DuffingCtx ctx
    cdef long n_steps = 0
    cdef int status
    cdef double complex y = a0
    out = np.zeros(n_times, dtype=np.complex128)
    cdef double complex[::1] out_v = out
    ctx.Omega = Omega
    ctx.K = K
    ctx.kappa = kappa
    ctx.drive.alpha = alpha
    ctx.drive.omega = omega
    ctx.drive.phi = phi
    ctx.drive.beta = beta
    if n_times == 0:
        return out, 0, 0
    with nogil:
        status = tsit5(duffing_rhs, &ctx, &y, 1, t0, &times[0], n_times,
                       &out_v[0], atol, rtol, h0, hmax, &n_steps)
    return out, status, n_steps
