# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-driven kernels; operation-for-operation twin of purepy.py.

Draws raw uniform doubles straight off the numpy bit generator through the
C interface, in the same order as the pure backend, so trajectories agree
bit for bit whenever no floating-point reduction is involved (reductions:
the empirical interaction moments, summed naively here versus pairwise in
numpy).
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport ceil, copysign, fabs, isfinite, log1p, pow, sqrt, sin, cos

cnp.import_array()

ctypedef double (*next_double_t)(void *st) noexcept nogil

cdef extern from "numpy/random/bitgen.h":
    struct bitgen:
        void *state
        cnp.npy_uint64 (*next_uint64)(void *st) nogil
        cnp.npy_uint32 (*next_uint32)(void *st) nogil
        double (*next_double)(void *st) nogil
        cnp.npy_uint64 (*next_raw)(void *st) nogil
    ctypedef bitgen bitgen_t

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_THINNING = 2

MUTATION_NONE = 0
MUTATION_SKIP_MINUS = 1

cdef double _DW_CLIP = 2.0
cdef double _DW_SLOPE = 1.0 - 3.0 * 2.0 * 2.0


cdef inline bitgen_t *_get_bitgen(object bit_generator) except NULL:
    return <bitgen_t *>PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


cdef inline double _next(bitgen_t *rng) noexcept:
    return rng.next_double(rng.state)


cdef inline double _drift_force(int tag, double x) noexcept:
    if tag == 0:
        return -x
    if x > _DW_CLIP:
        return (_DW_CLIP - _DW_CLIP * _DW_CLIP * _DW_CLIP) + _DW_SLOPE * (x - _DW_CLIP)
    if x < -_DW_CLIP:
        return -(_DW_CLIP - _DW_CLIP * _DW_CLIP * _DW_CLIP) + _DW_SLOPE * (x + _DW_CLIP)
    return x - x * x * x


cdef inline long _law_index(double[::1] law_times, double t) noexcept:
    cdef long lo = 0, hi = law_times.shape[0], mid
    # index of latest snapshot time <= t (same as searchsorted 'right' - 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if law_times[mid] <= t:
            lo = mid + 1
        else:
            hi = mid
    if lo - 1 > 0:
        return lo - 1
    return 0


cdef inline double _inverse_jump(double beta, double delta, double r_sup,
                                 double u_radius, double u_sign) noexcept:
    cdef double a = pow(delta, -beta)
    cdef double b = pow(r_sup, -beta)
    cdef double r = pow(a - u_radius * (a - b), -1.0 / beta)
    return r if u_sign >= 0.5 else -r


cdef inline double _exp_dt(double u, double rate) noexcept:
    if rate <= 0.0:
        return np.inf
    return -log1p(-u) / rate


cdef inline double _rho_point(double beta, double r_sup, double x, double z) noexcept:
    cdef double azx = fabs(z - x)
    cdef double ratio
    if azx > r_sup:
        return 0.0
    if azx < 1e-300:
        return 1.0
    ratio = pow(fabs(z) / azx, 1.0 + beta)
    return ratio if ratio < 1.0 else 1.0


cdef inline int _coupled_displacement(double beta, double r_sup, double kappa,
                                      double gamma, double q, double z,
                                      double u_thin, bint refined, int mutation,
                                      double *z2) noexcept:
    cdef double qk, xstar, p_plus, p_minus
    z2[0] = z
    if (not refined) or q == 0.0:
        return STATUS_OK
    qk = q if fabs(q) <= kappa else copysign(kappa, q)
    xstar = gamma * qk
    p_plus = 0.5 * _rho_point(beta, r_sup, -xstar, z)
    p_minus = 0.5 * _rho_point(beta, r_sup, xstar, z)
    if p_plus + p_minus > 1.0 + 1e-9:
        return STATUS_THINNING
    if u_thin <= p_plus:
        z2[0] = z + xstar
    elif u_thin <= p_plus + p_minus:
        if mutation != MUTATION_SKIP_MINUS:
            z2[0] = z - xstar
    return STATUS_OK


cdef struct FlowParams:
    int drift_tag
    int kernel_tag
    double eta
    double gamma
    bint use_own_law
    double dt_max


cdef void _flow_advance(FlowParams *fp, double[::1] x, double[::1] y,
                        double t0, double t1,
                        double[::1] law_times, double[::1] law_sin,
                        double[::1] law_cos,
                        double[::1] scratch_sin, double[::1] scratch_cos) noexcept:
    cdef long n, i, j, N = x.shape[0]
    cdef double h, t, sin_m, cos_m, ssum, csum
    cdef double k1y, xm, ym, k2y, inter1, inter2
    cdef long idx
    if t1 <= t0:
        return
    n = <long>ceil((t1 - t0) / fp.dt_max - 1e-12)
    if n < 1:
        n = 1
    h = (t1 - t0) / n
    t = t0
    for i in range(n):
        sin_m = 0.0
        cos_m = 0.0
        if fp.kernel_tag != 0:
            ssum = 0.0
            csum = 0.0
            for j in range(N):
                scratch_sin[j] = sin(x[j])
                scratch_cos[j] = cos(x[j])
                ssum += scratch_sin[j]
                csum += scratch_cos[j]
            if fp.use_own_law:
                sin_m = ssum / N
                cos_m = csum / N
            else:
                idx = _law_index(law_times, t)
                sin_m = law_sin[idx]
                cos_m = law_cos[idx]
        for j in range(N):
            if fp.kernel_tag != 0:
                inter1 = fp.eta * (sin_m * scratch_cos[j] - cos_m * scratch_sin[j])
            else:
                inter1 = 0.0
            k1y = _drift_force(fp.drift_tag, x[j]) + inter1 - fp.gamma * y[j]
            xm = x[j] + 0.5 * h * y[j]
            ym = y[j] + 0.5 * h * k1y
            if fp.kernel_tag != 0:
                inter2 = fp.eta * (sin_m * cos(xm) - cos_m * sin(xm))
            else:
                inter2 = 0.0
            k2y = _drift_force(fp.drift_tag, xm) + inter2 - fp.gamma * ym
            x[j] += h * ym
            y[j] += h * k2y
        t += h


cdef bint _all_finite(double[::1] x, double[::1] y) noexcept:
    cdef long j
    for j in range(x.shape[0]):
        if not (isfinite(x[j]) and isfinite(y[j])):
            return False
    return True


def ensemble_run(bit_generator, x, y, double t0, double t_end, record_times,
                 int drift_tag, int kernel_tag, double eta, bint use_own_law,
                 law_times, law_sin, law_cos,
                 double beta, double c0, double delta, double r_sup,
                 double rate_per_particle, double gamma, double dt_max):
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    x_arr = np.array(x, dtype=np.float64)
    y_arr = np.array(y, dtype=np.float64)
    rt_arr = np.ascontiguousarray(record_times, dtype=np.float64)
    lt_arr = np.ascontiguousarray(law_times, dtype=np.float64)
    ls_arr = np.ascontiguousarray(law_sin, dtype=np.float64)
    lc_arr = np.ascontiguousarray(law_cos, dtype=np.float64)
    cdef double[::1] xv = x_arr
    cdef double[::1] yv = y_arr
    cdef double[::1] rts = rt_arr
    cdef double[::1] lt = lt_arr
    cdef double[::1] lsin = ls_arr
    cdef double[::1] lcos = lc_arr
    cdef long n_rec = rts.shape[0]
    cdef long N = xv.shape[0]
    rec_x = np.zeros((n_rec, N))
    rec_y = np.zeros((n_rec, N))
    jump_counts = np.zeros(n_rec, dtype=np.int64)
    cdef double[:, ::1] rx = rec_x
    cdef double[:, ::1] ry = rec_y
    cdef long[::1] jc = jump_counts
    cdef FlowParams fp
    fp.drift_tag = drift_tag
    fp.kernel_tag = kernel_tag
    fp.eta = eta
    fp.gamma = gamma
    fp.use_own_law = use_own_law
    fp.dt_max = dt_max
    scratch_s = np.empty(N)
    scratch_c = np.empty(N)
    cdef double[::1] scs = scratch_s
    cdef double[::1] scc = scratch_c
    cdef double rate_total = N * rate_per_particle
    cdef double t = t0
    cdef long rec_ptr = 0
    cdef long idx, j
    cdef double u0, u1, u2, u3, t_jump, z
    cdef bint ok

    while True:
        u0 = _next(rng)
        u1 = _next(rng)
        u2 = _next(rng)
        u3 = _next(rng)
        t_jump = t + _exp_dt(u0, rate_total)
        if t_jump > t_end:
            while rec_ptr < n_rec and rts[rec_ptr] <= t_end + 1e-15:
                _flow_advance(&fp, xv, yv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
                if rts[rec_ptr] > t:
                    t = rts[rec_ptr]
                for j in range(N):
                    rx[rec_ptr, j] = xv[j]
                    ry[rec_ptr, j] = yv[j]
                rec_ptr += 1
            _flow_advance(&fp, xv, yv, t, t_end, lt, lsin, lcos, scs, scc)
            t = t_end if t_end > t else t
            ok = _all_finite(xv, yv)
            return rec_x, rec_y, jump_counts, (STATUS_OK if ok else STATUS_BLOWUP), t
        while rec_ptr < n_rec and rts[rec_ptr] <= t_jump + 1e-15:
            _flow_advance(&fp, xv, yv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
            if rts[rec_ptr] > t:
                t = rts[rec_ptr]
            for j in range(N):
                rx[rec_ptr, j] = xv[j]
                ry[rec_ptr, j] = yv[j]
            rec_ptr += 1
        _flow_advance(&fp, xv, yv, t, t_jump, lt, lsin, lcos, scs, scc)
        t = t_jump if t_jump > t else t
        if not _all_finite(xv, yv):
            return rec_x, rec_y, jump_counts, STATUS_BLOWUP, t
        idx = <long>(u1 * N)
        if idx > N - 1:
            idx = N - 1
        z = _inverse_jump(beta, delta, r_sup, u2, u3)
        yv[idx] += z
        if rec_ptr < n_rec:
            jc[rec_ptr] += 1


def pair_run(bit_generator, double x1, double y1, double x2, double y2,
             double t0, double t_end, record_times,
             int drift_tag, int kernel_tag, double eta,
             law1_times, law1_sin, law1_cos,
             law2_times, law2_sin, law2_cos,
             double beta, double c0, double delta, double r_sup,
             double rate, double gamma, double dt_max,
             double alpha, double eps, double A, double B, double C,
             double d_gamma_val, double kappa,
             int mutation=MUTATION_NONE):
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    rt_arr = np.ascontiguousarray(record_times, dtype=np.float64)
    l1t = np.ascontiguousarray(law1_times, dtype=np.float64)
    l1s = np.ascontiguousarray(law1_sin, dtype=np.float64)
    l1c = np.ascontiguousarray(law1_cos, dtype=np.float64)
    l2t = np.ascontiguousarray(law2_times, dtype=np.float64)
    l2s = np.ascontiguousarray(law2_sin, dtype=np.float64)
    l2c = np.ascontiguousarray(law2_cos, dtype=np.float64)
    cdef double[::1] rts = rt_arr
    cdef double[::1] lt1 = l1t, ls1 = l1s, lc1 = l1c
    cdef double[::1] lt2 = l2t, ls2 = l2s, lc2 = l2c
    cdef long n_rec = rts.shape[0]
    records = np.zeros((n_rec, 4))
    diag = np.zeros(5, dtype=np.int64)
    cdef double[:, ::1] rec = records
    cdef long[::1] dg = diag
    s1x_arr = np.array([x1]); s1y_arr = np.array([y1])
    s2x_arr = np.array([x2]); s2y_arr = np.array([y2])
    cdef double[::1] s1x = s1x_arr
    cdef double[::1] s1y = s1y_arr
    cdef double[::1] s2x = s2x_arr
    cdef double[::1] s2y = s2y_arr
    cdef FlowParams fp
    fp.drift_tag = drift_tag
    fp.kernel_tag = kernel_tag
    fp.eta = eta
    fp.gamma = gamma
    fp.use_own_law = False
    fp.dt_max = dt_max
    scratch_s = np.empty(1)
    scratch_c = np.empty(1)
    cdef double[::1] scs = scratch_s
    cdef double[::1] scc = scratch_c
    cdef double t = t0
    cdef long rec_ptr = 0
    cdef double u0, u1, u2, u3, t_jump, v, w, q, rs, rl, dmet, z, z2, rlsq
    cdef bint refined
    cdef int status

    while True:
        u0 = _next(rng)
        u1 = _next(rng)
        u2 = _next(rng)
        u3 = _next(rng)
        t_jump = t + _exp_dt(u0, rate)
        if t_jump > t_end:
            while rec_ptr < n_rec and rts[rec_ptr] <= t_end + 1e-15:
                _flow_advance(&fp, s1x, s1y, t, rts[rec_ptr], lt1, ls1, lc1, scs, scc)
                _flow_advance(&fp, s2x, s2y, t, rts[rec_ptr], lt2, ls2, lc2, scs, scc)
                if rts[rec_ptr] > t:
                    t = rts[rec_ptr]
                rec[rec_ptr, 0] = s1x[0]
                rec[rec_ptr, 1] = s1y[0]
                rec[rec_ptr, 2] = s2x[0]
                rec[rec_ptr, 3] = s2y[0]
                rec_ptr += 1
            _flow_advance(&fp, s1x, s1y, t, t_end, lt1, ls1, lc1, scs, scc)
            _flow_advance(&fp, s2x, s2y, t, t_end, lt2, ls2, lc2, scs, scc)
            t = t_end if t_end > t else t
            if isfinite(s1x[0] + s1y[0] + s2x[0] + s2y[0]):
                return records, diag, STATUS_OK, t
            return records, diag, STATUS_BLOWUP, t
        while rec_ptr < n_rec and rts[rec_ptr] <= t_jump + 1e-15:
            _flow_advance(&fp, s1x, s1y, t, rts[rec_ptr], lt1, ls1, lc1, scs, scc)
            _flow_advance(&fp, s2x, s2y, t, rts[rec_ptr], lt2, ls2, lc2, scs, scc)
            if rts[rec_ptr] > t:
                t = rts[rec_ptr]
            rec[rec_ptr, 0] = s1x[0]
            rec[rec_ptr, 1] = s1y[0]
            rec[rec_ptr, 2] = s2x[0]
            rec[rec_ptr, 3] = s2y[0]
            rec_ptr += 1
        _flow_advance(&fp, s1x, s1y, t, t_jump, lt1, ls1, lc1, scs, scc)
        _flow_advance(&fp, s2x, s2y, t, t_jump, lt2, ls2, lc2, scs, scc)
        t = t_jump if t_jump > t else t
        if not isfinite(s1x[0] + s1y[0] + s2x[0] + s2y[0]):
            return records, diag, STATUS_BLOWUP, t
        v = s1x[0] - s2x[0]
        w = s1y[0] - s2y[0]
        q = v + w / gamma
        rs = alpha * fabs(v) + fabs(q)
        rlsq = A * v * v + B * v * w + C * w * w
        rl = sqrt(rlsq if rlsq > 0.0 else 0.0)
        dmet = rs - eps * rl
        refined = dmet <= d_gamma_val
        z = _inverse_jump(beta, delta, r_sup, u1, u2)
        status = _coupled_displacement(beta, r_sup, kappa, gamma, q, z, u3,
                                       refined, mutation, &z2)
        if status != STATUS_OK:
            return records, diag, status, t
        s1y[0] += z
        s2y[0] += z2
        dg[0] += 1
        if refined:
            if z2 > z:
                dg[1] += 1
            elif z2 < z:
                dg[2] += 1
        else:
            dg[3] += 1
        if fabs(dmet - d_gamma_val) < 0.05 * d_gamma_val:
            dg[4] += 1


def systems_run(bit_generator, xc, yc, xs, ys,
                double t0, double t_end, record_times,
                int drift_tag, int kernel_tag, double eta,
                law_times, law_sin, law_cos,
                double beta, double c0, double delta, double r_sup,
                double rate_per_particle, double gamma, double dt_max,
                double alpha, double eps, double A, double B, double C,
                double d_gamma_val, double kappa):
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    xc_arr = np.array(xc, dtype=np.float64)
    yc_arr = np.array(yc, dtype=np.float64)
    xs_arr = np.array(xs, dtype=np.float64)
    ys_arr = np.array(ys, dtype=np.float64)
    rt_arr = np.ascontiguousarray(record_times, dtype=np.float64)
    lt_arr = np.ascontiguousarray(law_times, dtype=np.float64)
    ls_arr = np.ascontiguousarray(law_sin, dtype=np.float64)
    lc_arr = np.ascontiguousarray(law_cos, dtype=np.float64)
    cdef double[::1] xcv = xc_arr
    cdef double[::1] ycv = yc_arr
    cdef double[::1] xsv = xs_arr
    cdef double[::1] ysv = ys_arr
    cdef double[::1] rts = rt_arr
    cdef double[::1] lt = lt_arr
    cdef double[::1] lsin = ls_arr
    cdef double[::1] lcos = lc_arr
    cdef long n_rec = rts.shape[0]
    cdef long N = xcv.shape[0]
    rec_v = np.zeros((n_rec, N))
    rec_w = np.zeros((n_rec, N))
    cdef double[:, ::1] rv = rec_v
    cdef double[:, ::1] rw = rec_w
    cdef FlowParams fc, fs
    fc.drift_tag = drift_tag
    fc.kernel_tag = kernel_tag
    fc.eta = eta
    fc.gamma = gamma
    fc.use_own_law = False
    fc.dt_max = dt_max
    fs = fc
    fs.use_own_law = True
    scratch_s = np.empty(N)
    scratch_c = np.empty(N)
    cdef double[::1] scs = scratch_s
    cdef double[::1] scc = scratch_c
    cdef double rate_total = N * rate_per_particle
    cdef double t = t0
    cdef long rec_ptr = 0
    cdef long i, j
    cdef double u0, u1, u2, u3, u4, t_jump, v, w, q, rs, rl, rlsq, z, z2
    cdef bint refined
    cdef int status

    while True:
        u0 = _next(rng)
        u1 = _next(rng)
        u2 = _next(rng)
        u3 = _next(rng)
        u4 = _next(rng)
        t_jump = t + _exp_dt(u0, rate_total)
        if t_jump > t_end:
            while rec_ptr < n_rec and rts[rec_ptr] <= t_end + 1e-15:
                _flow_advance(&fc, xcv, ycv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
                _flow_advance(&fs, xsv, ysv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
                if rts[rec_ptr] > t:
                    t = rts[rec_ptr]
                for j in range(N):
                    rv[rec_ptr, j] = xcv[j] - xsv[j]
                    rw[rec_ptr, j] = ycv[j] - ysv[j]
                rec_ptr += 1
            _flow_advance(&fc, xcv, ycv, t, t_end, lt, lsin, lcos, scs, scc)
            _flow_advance(&fs, xsv, ysv, t, t_end, lt, lsin, lcos, scs, scc)
            t = t_end if t_end > t else t
            if _all_finite(xcv, ycv) and _all_finite(xsv, ysv):
                return rec_v, rec_w, STATUS_OK, t
            return rec_v, rec_w, STATUS_BLOWUP, t
        while rec_ptr < n_rec and rts[rec_ptr] <= t_jump + 1e-15:
            _flow_advance(&fc, xcv, ycv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
            _flow_advance(&fs, xsv, ysv, t, rts[rec_ptr], lt, lsin, lcos, scs, scc)
            if rts[rec_ptr] > t:
                t = rts[rec_ptr]
            for j in range(N):
                rv[rec_ptr, j] = xcv[j] - xsv[j]
                rw[rec_ptr, j] = ycv[j] - ysv[j]
            rec_ptr += 1
        _flow_advance(&fc, xcv, ycv, t, t_jump, lt, lsin, lcos, scs, scc)
        _flow_advance(&fs, xsv, ysv, t, t_jump, lt, lsin, lcos, scs, scc)
        t = t_jump if t_jump > t else t
        if not (_all_finite(xcv, ycv) and _all_finite(xsv, ysv)):
            return rec_v, rec_w, STATUS_BLOWUP, t
        i = <long>(u1 * N)
        if i > N - 1:
            i = N - 1
        v = xcv[i] - xsv[i]
        w = ycv[i] - ysv[i]
        q = v + w / gamma
        rs = alpha * fabs(v) + fabs(q)
        rlsq = A * v * v + B * v * w + C * w * w
        rl = sqrt(rlsq if rlsq > 0.0 else 0.0)
        refined = (rs - eps * rl) <= d_gamma_val
        z = _inverse_jump(beta, delta, r_sup, u2, u3)
        status = _coupled_displacement(beta, r_sup, kappa, gamma, q, z, u4,
                                       refined, MUTATION_NONE, &z2)
        if status != STATUS_OK:
            return rec_v, rec_w, status, t
        ycv[i] += z
        ysv[i] += z2
