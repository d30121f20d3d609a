"""Pure-Python plant kernel, the fallback when the compiled extension is absent.

The compiled twin (_plant.pyx) mirrors these functions expression for
expression; with contraction disabled at compile time both produce
bit-identical IEEE-754 results, which the test suite asserts.

State layout: position (3,), quaternion (w,x,y,z), linear velocity (3,),
angular velocity (3,), all world frame.  The plant is a damped
double-integrator rigid body with virtual mass/inertia; one call to
`subgoal_cycle` covers one torque slot: a single PD force held for
`repeats` low-level integration steps.
"""

import math


def pd_force(goal_pos, goal_quat, pos, quat, linvel, angvel, kp, kd,
             fmax_lin, fmax_ang):
    """Task-space PD law; rotational error is the axis-angle of goal*cur^-1."""
    ex = goal_pos[0] - pos[0]
    ey = goal_pos[1] - pos[1]
    ez = goal_pos[2] - pos[2]

    gw, gx, gy, gz = goal_quat
    cw, cx, cy, cz = quat
    # q_err = goal * conj(cur)
    qw = gw * cw + gx * cx + gy * cy + gz * cz
    qx = -gw * cx + gx * cw - gy * cz + gz * cy
    qy = -gw * cy + gx * cz + gy * cw - gz * cx
    qz = -gw * cz - gx * cy + gy * cx + gz * cw
    if qw < 0.0:
        qw, qx, qy, qz = -qw, -qx, -qy, -qz
    vn = math.sqrt(qx * qx + qy * qy + qz * qz)
    if vn < 1e-12:
        rvx = 2.0 * qx
        rvy = 2.0 * qy
        rvz = 2.0 * qz
    else:
        s = 2.0 * math.atan2(vn, qw) / vn
        rvx = qx * s
        rvy = qy * s
        rvz = qz * s

    fx = kp[0] * ex - kd[0] * linvel[0]
    fy = kp[1] * ey - kd[1] * linvel[1]
    fz = kp[2] * ez - kd[2] * linvel[2]
    tx = kp[3] * rvx - kd[3] * angvel[0]
    ty = kp[4] * rvy - kd[4] * angvel[1]
    tz = kp[5] * rvz - kd[5] * angvel[2]

    fn = math.sqrt(fx * fx + fy * fy + fz * fz)
    if fn > fmax_lin:
        scale = fmax_lin / fn
        fx *= scale
        fy *= scale
        fz *= scale
    tn = math.sqrt(tx * tx + ty * ty + tz * tz)
    if tn > fmax_ang:
        scale = fmax_ang / tn
        tx *= scale
        ty *= scale
        tz *= scale
    return (fx, fy, fz, tx, ty, tz)


def plant_step(pos, quat, linvel, angvel, force, mass, inertia, damping, dt):
    """One semi-implicit Euler step of the damped rigid body."""
    vx = linvel[0] + dt * (force[0] / mass - damping * linvel[0])
    vy = linvel[1] + dt * (force[1] / mass - damping * linvel[1])
    vz = linvel[2] + dt * (force[2] / mass - damping * linvel[2])
    px = pos[0] + dt * vx
    py = pos[1] + dt * vy
    pz = pos[2] + dt * vz

    wx = angvel[0] + dt * (force[3] / inertia - damping * angvel[0])
    wy = angvel[1] + dt * (force[4] / inertia - damping * angvel[1])
    wz = angvel[2] + dt * (force[5] / inertia - damping * angvel[2])

    rvx = wx * dt
    rvy = wy * dt
    rvz = wz * dt
    angle = math.sqrt(rvx * rvx + rvy * rvy + rvz * rvz)
    if angle < 1e-12:
        dw = 1.0
        dx = 0.5 * rvx
        dy = 0.5 * rvy
        dz = 0.5 * rvz
    else:
        half = 0.5 * angle
        s = math.sin(half) / angle
        dw = math.cos(half)
        dx = rvx * s
        dy = rvy * s
        dz = rvz * s
    cw, cx, cy, cz = quat
    qw = dw * cw - dx * cx - dy * cy - dz * cz
    qx = dw * cx + dx * cw + dy * cz - dz * cy
    qy = dw * cy - dx * cz + dy * cw + dz * cx
    qz = dw * cz + dx * cy - dy * cx + dz * cw
    n = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    qw /= n
    qx /= n
    qy /= n
    qz /= n
    return ((px, py, pz), (qw, qx, qy, qz), (vx, vy, vz), (wx, wy, wz))


def subgoal_cycle(pos, quat, linvel, angvel, goal_pos, goal_quat, kp, kd,
                  mass, inertia, damping, dt, repeats, fmax_lin, fmax_ang):
    """One torque slot: PD force computed once, integrated `repeats` steps.

    Returns (states, force) where states is a list of `repeats` tuples of
    (pos, quat, linvel, angvel) after each low-level step.
    """
    force = pd_force(goal_pos, goal_quat, pos, quat, linvel, angvel, kp, kd,
                     fmax_lin, fmax_ang)
    states = []
    for _ in range(repeats):
        pos, quat, linvel, angvel = plant_step(
            pos, quat, linvel, angvel, force, mass, inertia, damping, dt
        )
        states.append((pos, quat, linvel, angvel))
    return states, force
