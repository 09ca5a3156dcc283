"""Compiled fixed-step integration kernel for the two-link closed loop.

Scalar-unrolled right-hand side (n=2 joints, p=5 parameters) compiled
with numba; the modular operations in dynamics/controller/simulator are
the reference semantics and the test suite pins this kernel against
them.  State vector layout (16 entries):

    y[0:2]   q          joint positions
    y[2:4]   qdot       joint velocities
    y[4:6]   w          filter internal state
    y[6:11]  I1         integral of Gamma Yd^T (e_f + e)
    y[11:16] I2         integral of Gamma (dYd/dt)^T e

Status codes returned by the integrator: 0 completed, 1/2 constraint
breach on joint 1/2, 3 non-finite state.
"""

import math

import numpy as np
from numba import njit

N_STATE = 16
N_DIAG = 20

OK = 0
NONFINITE = 3


@njit(cache=True)
def _eval(t, y, theta, kd, Kb, dlt, gam, tan_variant, tau_max,
          amp, om, al, th_off, dy, diag, want_diag):
    # reference trajectory and derivatives through jerk
    sw = math.sin(om * t)
    cw = math.cos(om * t)
    f0 = sw
    f1 = om * cw
    f2 = -om * om * sw
    f3 = -om * om * om * cw
    t2 = t * t
    t3 = t2 * t
    env = math.exp(-al * t3)
    g0 = 1.0 - env
    g1 = 3.0 * al * t2 * env
    g2 = (6.0 * al * t - 9.0 * al * al * t2 * t2) * env
    g3 = (6.0 * al - 54.0 * al * al * t3 + 27.0 * al * al * al * t3 * t3) * env
    p0 = f0 * g0
    p1 = f1 * g0 + f0 * g1
    p2 = f2 * g0 + 2.0 * f1 * g1 + f0 * g2
    p3 = f3 * g0 + 3.0 * f2 * g1 + 3.0 * f1 * g2 + f0 * g3
    qd1 = amp[0] * p0
    qd2 = amp[1] * p0
    vd1 = amp[0] * p1
    vd2 = amp[1] * p1
    ad1 = amp[0] * p2
    ad2 = amp[1] * p2
    jd1 = amp[0] * p3
    jd2 = amp[1] * p3

    e1 = qd1 - y[0]
    e2 = qd2 - y[1]
    if abs(e1) >= dlt[0] * (1.0 - 1e-9):
        diag[0] = e1
        return 1
    if abs(e2) >= dlt[1] * (1.0 - 1e-9):
        diag[0] = e2
        return 2

    ef1 = -kd[0] * e1 + y[4]
    ef2 = -kd[1] * e2 + y[5]

    if tan_variant:
        tg1 = math.tan(0.5 * math.pi * e1 * e1 / (dlt[0] * dlt[0]))
        tg2 = math.tan(0.5 * math.pi * e2 * e2 / (dlt[1] * dlt[1]))
        ke1 = 1.0 + tg1 * tg1
        ke2 = 1.0 + tg2 * tg2
    else:
        ke1 = Kb[0] / (dlt[0] * dlt[0] - e1 * e1)
        ke2 = Kb[1] / (dlt[1] * dlt[1] - e2 * e2)

    # desired regressor (nonzero entries) and its time derivative
    cd = math.cos(qd2)
    sd = math.sin(qd2)
    y11 = ad1
    y12 = ad2
    y13 = cd * (2.0 * ad1 + ad2) - sd * (2.0 * vd1 * vd2 + vd2 * vd2)
    y14 = vd1
    y22 = ad1 + ad2
    y23 = cd * ad1 + sd * vd1 * vd1
    y25 = vd2
    r11 = jd1
    r12 = jd2
    r13 = (-sd * vd2 * (2.0 * ad1 + ad2) + cd * (2.0 * jd1 + jd2)
           - cd * vd2 * (2.0 * vd1 * vd2 + vd2 * vd2)
           - sd * (2.0 * ad1 * vd2 + 2.0 * vd1 * ad2 + 2.0 * vd2 * ad2))
    r14 = ad1
    r22 = jd1 + jd2
    r23 = -sd * vd2 * ad1 + cd * jd1 + cd * vd2 * vd1 * vd1 + 2.0 * sd * vd1 * ad1
    r25 = ad2

    th1 = y[6] + gam[0] * (y11 * e1) - y[11] + th_off[0]
    th2 = y[7] + gam[1] * (y12 * e1 + y22 * e2) - y[12] + th_off[1]
    th3 = y[8] + gam[2] * (y13 * e1 + y23 * e2) - y[13] + th_off[2]
    th4 = y[9] + gam[3] * (y14 * e1) - y[14] + th_off[3]
    th5 = y[10] + gam[4] * (y25 * e2) - y[15] + th_off[4]

    tr1 = y11 * th1 + y12 * th2 + y13 * th3 + y14 * th4 + ke1 * e1 - kd[0] * ef1
    tr2 = y22 * th2 + y23 * th3 + y25 * th5 + ke2 * e2 - kd[1] * ef2
    tau1 = min(max(tr1, -tau_max), tau_max)
    tau2 = min(max(tr2, -tau_max), tau_max)

    # plant
    cq = math.cos(y[1])
    sq = math.sin(y[1])
    m11 = theta[0] + 2.0 * theta[2] * cq
    m12 = theta[1] + theta[2] * cq
    m22 = theta[1]
    cor1 = -theta[2] * sq * (2.0 * y[2] * y[3] + y[3] * y[3])
    cor2 = theta[2] * sq * y[2] * y[2]
    b1 = tau1 - cor1 - theta[3] * y[2]
    b2 = tau2 - cor2 - theta[4] * y[3]
    det = m11 * m22 - m12 * m12
    qdd1 = (m22 * b1 - m12 * b2) / det
    qdd2 = (-m12 * b1 + m11 * b2) / det

    dy[0] = y[2]
    dy[1] = y[3]
    dy[2] = qdd1
    dy[3] = qdd2
    dy[4] = -(kd[0] + 1.0) * ef1 - kd[0] * e1 + ke1 * e1
    dy[5] = -(kd[1] + 1.0) * ef2 - kd[1] * e2 + ke2 * e2
    u1 = ef1 + e1
    u2 = ef2 + e2
    dy[6] = gam[0] * (y11 * u1)
    dy[7] = gam[1] * (y12 * u1 + y22 * u2)
    dy[8] = gam[2] * (y13 * u1 + y23 * u2)
    dy[9] = gam[3] * (y14 * u1)
    dy[10] = gam[4] * (y25 * u2)
    dy[11] = gam[0] * (r11 * e1)
    dy[12] = gam[1] * (r12 * e1 + r22 * e2)
    dy[13] = gam[2] * (r13 * e1 + r23 * e2)
    dy[14] = gam[3] * (r14 * e1)
    dy[15] = gam[4] * (r25 * e2)

    if want_diag:
        eta1 = (vd1 - y[2]) + e1 + ef1
        eta2 = (vd2 - y[3]) + e2 + ef2
        if tan_variant:
            bar = (dlt[0] * dlt[0] / math.pi) * math.tan(0.5 * math.pi * e1 * e1 / (dlt[0] * dlt[0])) \
                + (dlt[1] * dlt[1] / math.pi) * math.tan(0.5 * math.pi * e2 * e2 / (dlt[1] * dlt[1]))
        else:
            bar = 0.5 * Kb[0] * math.log(dlt[0] * dlt[0] / (dlt[0] * dlt[0] - e1 * e1)) \
                + 0.5 * Kb[1] * math.log(dlt[1] * dlt[1] / (dlt[1] * dlt[1] - e2 * e2))
        quad = 0.5 * (m11 * eta1 * eta1 + 2.0 * m12 * eta1 * eta2 + m22 * eta2 * eta2) \
            + 0.5 * (ef1 * ef1 + ef2 * ef2)
        par = 0.5 * ((theta[0] - th1) ** 2 / gam[0]
                     + (theta[1] - th2) ** 2 / gam[1]
                     + (theta[2] - th3) ** 2 / gam[2]
                     + (theta[3] - th4) ** 2 / gam[3]
                     + (theta[4] - th5) ** 2 / gam[4])
        diag[0] = qd1
        diag[1] = qd2
        diag[2] = e1
        diag[3] = e2
        diag[4] = ef1
        diag[5] = ef2
        diag[6] = eta1
        diag[7] = eta2
        diag[8] = tau1
        diag[9] = tau2
        diag[10] = tr1
        diag[11] = tr2
        diag[12] = th1
        diag[13] = th2
        diag[14] = th3
        diag[15] = th4
        diag[16] = th5
        diag[17] = quad + bar + par
        diag[18] = ke1
        diag[19] = ke2
    return OK


@njit(cache=True)
def integrate_closed_loop(y, theta, kd, Kb, dlt, gam, tan_variant, tau_max,
                          amp, om, al, th_off, dt, nsteps,
                          T, QDES, Q, E, EF, ETA, TAU, TRAW, TH, V, KE):
    """Integrate with classical RK4 and log one record per step boundary.

    ``y`` is advanced in place.  Returns (status, n_records, t_fail,
    fail_value): n_records is the count of fully written rows; on
    success it equals nsteps + 1 and t_fail/fail_value are zero.
    """
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    yt = np.empty(N_STATE)
    diag = np.empty(N_DIAG)

    for k in range(nsteps + 1):
        t = k * dt
        st = _eval(t, y, theta, kd, Kb, dlt, gam, tan_variant, tau_max,
                   amp, om, al, th_off, k1, diag, True)
        if st != OK:
            return st, k, t, diag[0]
        if not math.isfinite(diag[17]):
            return NONFINITE, k, t, 0.0
        T[k] = t
        QDES[k, 0] = diag[0]
        QDES[k, 1] = diag[1]
        Q[k, 0] = y[0]
        Q[k, 1] = y[1]
        E[k, 0] = diag[2]
        E[k, 1] = diag[3]
        EF[k, 0] = diag[4]
        EF[k, 1] = diag[5]
        ETA[k, 0] = diag[6]
        ETA[k, 1] = diag[7]
        TAU[k, 0] = diag[8]
        TAU[k, 1] = diag[9]
        TRAW[k, 0] = diag[10]
        TRAW[k, 1] = diag[11]
        for j in range(5):
            TH[k, j] = diag[12 + j]
        V[k] = diag[17]
        KE[k, 0] = diag[18]
        KE[k, 1] = diag[19]
        if k == nsteps:
            break

        # RK4 step; k1 is the record-point evaluation reused as stage 1
        for i in range(N_STATE):
            yt[i] = y[i] + 0.5 * dt * k1[i]
        st = _eval(t + 0.5 * dt, yt, theta, kd, Kb, dlt, gam, tan_variant,
                   tau_max, amp, om, al, th_off, k2, diag, False)
        if st != OK:
            return st, k + 1, t + 0.5 * dt, diag[0]
        for i in range(N_STATE):
            yt[i] = y[i] + 0.5 * dt * k2[i]
        st = _eval(t + 0.5 * dt, yt, theta, kd, Kb, dlt, gam, tan_variant,
                   tau_max, amp, om, al, th_off, k3, diag, False)
        if st != OK:
            return st, k + 1, t + 0.5 * dt, diag[0]
        for i in range(N_STATE):
            yt[i] = y[i] + dt * k3[i]
        st = _eval(t + dt, yt, theta, kd, Kb, dlt, gam, tan_variant,
                   tau_max, amp, om, al, th_off, k4, diag, False)
        if st != OK:
            return st, k + 1, t + dt, diag[0]
        for i in range(N_STATE):
            y[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        finite = True
        for i in range(N_STATE):
            if not math.isfinite(y[i]):
                finite = False
        if not finite:
            return NONFINITE, k + 1, t + dt, 0.0

    return OK, nsteps + 1, 0.0, 0.0
