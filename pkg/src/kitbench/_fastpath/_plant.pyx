# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled plant kernel; mirrors reference.py expression for expression.

Compiled with -ffp-contract=off so results stay bit-identical to the
pure-Python fallback (same libm, same rounding of every intermediate).
"""

from libc.math cimport atan2, cos, sin, sqrt


cdef inline void _pd_force_c(double* gp, double* gq, double* p, double* q,
                             double* v, double* w, double* kp, double* kd,
                             double fmax_lin, double fmax_ang,
                             double* out) noexcept:
    cdef double ex = gp[0] - p[0]
    cdef double ey = gp[1] - p[1]
    cdef double ez = gp[2] - p[2]

    cdef double gw = gq[0], gx = gq[1], gy = gq[2], gz = gq[3]
    cdef double cw = q[0], cx = q[1], cy = q[2], cz = q[3]
    cdef double qw = gw * cw + gx * cx + gy * cy + gz * cz
    cdef double qx = -gw * cx + gx * cw - gy * cz + gz * cy
    cdef double qy = -gw * cy + gx * cz + gy * cw - gz * cx
    cdef double qz = -gw * cz - gx * cy + gy * cx + gz * cw
    if qw < 0.0:
        qw = -qw
        qx = -qx
        qy = -qy
        qz = -qz
    cdef double vn = sqrt(qx * qx + qy * qy + qz * qz)
    cdef double rvx, rvy, rvz, s
    if vn < 1e-12:
        rvx = 2.0 * qx
        rvy = 2.0 * qy
        rvz = 2.0 * qz
    else:
        s = 2.0 * atan2(vn, qw) / vn
        rvx = qx * s
        rvy = qy * s
        rvz = qz * s

    cdef double fx = kp[0] * ex - kd[0] * v[0]
    cdef double fy = kp[1] * ey - kd[1] * v[1]
    cdef double fz = kp[2] * ez - kd[2] * v[2]
    cdef double tx = kp[3] * rvx - kd[3] * w[0]
    cdef double ty = kp[4] * rvy - kd[4] * w[1]
    cdef double tz = kp[5] * rvz - kd[5] * w[2]

    cdef double fn = sqrt(fx * fx + fy * fy + fz * fz)
    cdef double scale
    if fn > fmax_lin:
        scale = fmax_lin / fn
        fx *= scale
        fy *= scale
        fz *= scale
    cdef double tn = sqrt(tx * tx + ty * ty + tz * tz)
    if tn > fmax_ang:
        scale = fmax_ang / tn
        tx *= scale
        ty *= scale
        tz *= scale
    out[0] = fx
    out[1] = fy
    out[2] = fz
    out[3] = tx
    out[4] = ty
    out[5] = tz


cdef inline void _plant_step_c(double* p, double* q, double* v, double* w,
                               double* f, double mass, double inertia,
                               double damping, double dt) noexcept:
    v[0] = v[0] + dt * (f[0] / mass - damping * v[0])
    v[1] = v[1] + dt * (f[1] / mass - damping * v[1])
    v[2] = v[2] + dt * (f[2] / mass - damping * v[2])
    p[0] = p[0] + dt * v[0]
    p[1] = p[1] + dt * v[1]
    p[2] = p[2] + dt * v[2]

    w[0] = w[0] + dt * (f[3] / inertia - damping * w[0])
    w[1] = w[1] + dt * (f[4] / inertia - damping * w[1])
    w[2] = w[2] + dt * (f[5] / inertia - damping * w[2])

    cdef double rvx = w[0] * dt
    cdef double rvy = w[1] * dt
    cdef double rvz = w[2] * dt
    cdef double angle = sqrt(rvx * rvx + rvy * rvy + rvz * rvz)
    cdef double dw, dx, dy, dz, half, s
    if angle < 1e-12:
        dw = 1.0
        dx = 0.5 * rvx
        dy = 0.5 * rvy
        dz = 0.5 * rvz
    else:
        half = 0.5 * angle
        s = sin(half) / angle
        dw = cos(half)
        dx = rvx * s
        dy = rvy * s
        dz = rvz * s
    cdef double cw = q[0], cx = q[1], cy = q[2], cz = q[3]
    cdef double qw = dw * cw - dx * cx - dy * cy - dz * cz
    cdef double qx = dw * cx + dx * cw + dy * cz - dz * cy
    cdef double qy = dw * cy - dx * cz + dy * cw + dz * cx
    cdef double qz = dw * cz + dx * cy - dy * cx + dz * cw
    cdef double n = sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    q[0] = qw / n
    q[1] = qx / n
    q[2] = qy / n
    q[3] = qz / n


cdef void _unpack3(object src, double* dst):
    dst[0] = src[0]
    dst[1] = src[1]
    dst[2] = src[2]


cdef void _unpack4(object src, double* dst):
    dst[0] = src[0]
    dst[1] = src[1]
    dst[2] = src[2]
    dst[3] = src[3]


def pd_force(goal_pos, goal_quat, pos, quat, linvel, angvel, kp, kd,
             fmax_lin, fmax_ang):
    cdef double gp[3], p[3], v[3], w[3], gq[4], q[4], kpa[6], kda[6], out[6]
    cdef int i
    _unpack3(goal_pos, gp)
    _unpack3(pos, p)
    _unpack3(linvel, v)
    _unpack3(angvel, w)
    _unpack4(goal_quat, gq)
    _unpack4(quat, q)
    for i in range(6):
        kpa[i] = kp[i]
        kda[i] = kd[i]
    _pd_force_c(gp, gq, p, q, v, w, kpa, kda, fmax_lin, fmax_ang, out)
    return (out[0], out[1], out[2], out[3], out[4], out[5])


def plant_step(pos, quat, linvel, angvel, force, mass, inertia, damping, dt):
    cdef double p[3], v[3], w[3], q[4], f[6]
    cdef int i
    _unpack3(pos, p)
    _unpack3(linvel, v)
    _unpack3(angvel, w)
    _unpack4(quat, q)
    for i in range(6):
        f[i] = force[i]
    _plant_step_c(p, q, v, w, f, mass, inertia, damping, dt)
    return ((p[0], p[1], p[2]), (q[0], q[1], q[2], q[3]),
            (v[0], v[1], v[2]), (w[0], w[1], w[2]))


def subgoal_cycle(pos, quat, linvel, angvel, goal_pos, goal_quat, kp, kd,
                  mass, inertia, damping, dt, repeats, fmax_lin, fmax_ang):
    cdef double gp[3], p[3], v[3], w[3], gq[4], q[4], kpa[6], kda[6], f[6]
    cdef int i, r
    cdef int n = repeats
    cdef double m = mass, ine = inertia, c = damping, h = dt
    _unpack3(goal_pos, gp)
    _unpack3(pos, p)
    _unpack3(linvel, v)
    _unpack3(angvel, w)
    _unpack4(goal_quat, gq)
    _unpack4(quat, q)
    for i in range(6):
        kpa[i] = kp[i]
        kda[i] = kd[i]
    _pd_force_c(gp, gq, p, q, v, w, kpa, kda, fmax_lin, fmax_ang, f)
    states = []
    for r in range(n):
        _plant_step_c(p, q, v, w, f, m, ine, c, h)
        states.append(((p[0], p[1], p[2]), (q[0], q[1], q[2], q[3]),
                       (v[0], v[1], v[2]), (w[0], w[1], w[2])))
    return states, (f[0], f[1], f[2], f[3], f[4], f[5])
