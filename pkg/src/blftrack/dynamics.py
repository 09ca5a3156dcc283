"""Two-link planar manipulator model.

Closed-form inertia, Coriolis, friction and gravity terms for a
horizontal-plane two-link arm, the linear parameterization of its
left-hand side (regressor), and forward/inverse dynamics.  The model is
parameterized by five constants

    theta = [p1, p2, p3, fd1, fd2]

where p1, p2, p3 are inertia-group parameters (kg m^2) and fd1, fd2 are
viscous friction coefficients (N m s/rad):

    M(q)  = [[p1 + 2 p3 cos q2,  p2 + p3 cos q2],
             [p2 + p3 cos q2,    p2            ]]
    Vm    = [[-p3 sin q2 qd2,    -p3 sin q2 (qd1 + qd2)],
             [ p3 sin q2 qd1,     0                    ]]
    G(q)  = 0                      (horizontal plane, gravity-free)
    Fd    = diag(fd1, fd2)

All matrix builders accept leading batch dimensions: a joint vector of
shape (..., 2) produces matrices of shape (..., 2, 2) or (..., 2, 5).
"""

from dataclasses import dataclass

import numpy as np

from .errors import SingularMassError

N_JOINTS = 2
N_PARAMS = 5


@dataclass(frozen=True)
class ArmParams:
    """Physical parameter vector of the two-link arm.

    Construction verifies that the implied inertia matrix is positive
    definite for every elbow angle (checked on a 1-degree grid) and that
    friction coefficients are nonnegative.
    """

    p1: float
    p2: float
    p3: float
    fd1: float
    fd2: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.vector):
            raise ValueError("arm parameters must be finite")
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError("inertia parameters p1, p2 must be positive")
        if self.fd1 < 0 or self.fd2 < 0:
            raise ValueError("friction coefficients must be nonnegative")
        m1, _ = inertia_eigenvalue_range(self.p1, self.p2, self.p3)
        if m1 <= 0:
            raise ValueError(
                "inertia matrix is not positive definite for all elbow "
                f"angles (min eigenvalue {m1:.3g})"
            )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.fd1, self.fd2])

    @classmethod
    def from_vector(cls, theta) -> "ArmParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got shape {theta.shape}")
        return cls(*theta)


#: Plausible testbed values used by the bundled scenario; configuration,
#: not ground truth for any particular arm.
DEFAULT_ARM = ArmParams(3.473, 0.196, 0.242, 5.3, 1.1)


@dataclass(frozen=True)
class TrajectorySample:
    """Desired position, velocity, acceleration and jerk at one instant."""

    t: float
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    jerk: np.ndarray


def inertia_eigenvalue_range(p1: float, p2: float, p3: float,
                             grid: int = 360) -> tuple[float, float]:
    """Min/max inertia eigenvalues over a uniform elbow-angle grid."""
    q2 = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    c = np.cos(q2)
    m11 = p1 + 2.0 * p3 * c
    m12 = p2 + p3 * c
    m22 = np.full_like(c, p2)
    # closed-form symmetric 2x2 eigenvalues
    tr = m11 + m22
    disc = np.sqrt((m11 - m22) ** 2 + 4.0 * m12 ** 2)
    lo = 0.5 * (tr - disc)
    hi = 0.5 * (tr + disc)
    return float(lo.min()), float(hi.max())


def inertia_bounds(params: ArmParams, grid: int = 360) -> tuple[float, float]:
    """Certified bounds m1, m2 with m1 I <= M(q) <= m2 I, by grid search."""
    return inertia_eigenvalue_range(params.p1, params.p2, params.p3, grid)


def mass_matrix(params: ArmParams, q) -> np.ndarray:
    """Inertia matrix M(q); symmetric positive definite for valid params."""
    q = np.asarray(q, dtype=float)
    c2 = np.cos(q[..., 1])
    M = np.empty(q.shape[:-1] + (2, 2))
    M[..., 0, 0] = params.p1 + 2.0 * params.p3 * c2
    M[..., 0, 1] = params.p2 + params.p3 * c2
    M[..., 1, 0] = M[..., 0, 1]
    M[..., 1, 1] = params.p2
    return M


def coriolis_matrix(params: ArmParams, q, qdot) -> np.ndarray:
    """Centripetal/Coriolis matrix Vm(q, qdot)."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    h = params.p3 * np.sin(q[..., 1])
    V = np.empty(np.broadcast_shapes(q.shape, qdot.shape)[:-1] + (2, 2))
    V[..., 0, 0] = -h * qdot[..., 1]
    V[..., 0, 1] = -h * (qdot[..., 0] + qdot[..., 1])
    V[..., 1, 0] = h * qdot[..., 0]
    V[..., 1, 1] = 0.0
    return V


def gravity_vector(params: ArmParams, q) -> np.ndarray:
    """Gravity torque G(q); identically zero for the horizontal model.

    Kept as an operation so a gravity-bearing model can be slotted in
    without changing the dynamics interface.
    """
    q = np.asarray(q, dtype=float)
    return np.zeros(q.shape)


def friction_matrix(params: ArmParams) -> np.ndarray:
    """Diagonal viscous friction matrix diag(fd1, fd2)."""
    return np.diag([params.fd1, params.fd2])


def regressor(q, qdot, qddot) -> np.ndarray:
    """Regression matrix Y with Y(q, qdot, qddot) theta = M qddot + Vm qdot + Fd qdot.

    Shape (..., 2, 5); the identity holds for every theta by construction.
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    qddot = np.asarray(qddot, dtype=float)
    shape = np.broadcast_shapes(q.shape, qdot.shape, qddot.shape)
    c2 = np.cos(q[..., 1])
    s2 = np.sin(q[..., 1])
    d1, d2 = qdot[..., 0], qdot[..., 1]
    a1, a2 = qddot[..., 0], qddot[..., 1]
    Y = np.zeros(shape[:-1] + (2, 5))
    Y[..., 0, 0] = a1
    Y[..., 0, 1] = a2
    Y[..., 0, 2] = c2 * (2.0 * a1 + a2) - s2 * (2.0 * d1 * d2 + d2 * d2)
    Y[..., 0, 3] = d1
    Y[..., 1, 1] = a1 + a2
    Y[..., 1, 2] = c2 * a1 + s2 * d1 * d1
    Y[..., 1, 4] = d2
    return Y


def desired_regressor(sample: TrajectorySample) -> np.ndarray:
    """Regressor evaluated along the desired trajectory (no measured state)."""
    return regressor(sample.pos, sample.vel, sample.acc)


def desired_regressor_rate(sample: TrajectorySample) -> np.ndarray:
    """Time derivative of the desired regressor, in closed form.

    Requires the desired jerk; differentiating numerically inside the
    adaptation integrator would couple integration error into the
    parameter estimate.
    """
    c2 = np.cos(np.asarray(sample.pos, dtype=float)[..., 1])
    s2 = np.sin(np.asarray(sample.pos, dtype=float)[..., 1])
    vel = np.asarray(sample.vel, dtype=float)
    acc = np.asarray(sample.acc, dtype=float)
    jerk = np.asarray(sample.jerk, dtype=float)
    d1, d2 = vel[..., 0], vel[..., 1]
    a1, a2 = acc[..., 0], acc[..., 1]
    j1, j2 = jerk[..., 0], jerk[..., 1]
    shape = np.broadcast_shapes(vel.shape, acc.shape, jerk.shape)
    dY = np.zeros(shape[:-1] + (2, 5))
    dY[..., 0, 0] = j1
    dY[..., 0, 1] = j2
    dY[..., 0, 2] = (
        -s2 * d2 * (2.0 * a1 + a2)
        + c2 * (2.0 * j1 + j2)
        - c2 * d2 * (2.0 * d1 * d2 + d2 * d2)
        - s2 * (2.0 * a1 * d2 + 2.0 * d1 * a2 + 2.0 * d2 * a2)
    )
    dY[..., 0, 3] = a1
    dY[..., 1, 1] = j1 + j2
    dY[..., 1, 2] = -s2 * d2 * a1 + c2 * j1 + c2 * d2 * d1 * d1 + 2.0 * s2 * d1 * a1
    dY[..., 1, 4] = a2
    return dY


def inverse_dynamics(params: ArmParams, q, qdot, qddot) -> np.ndarray:
    """Torque that produces qddot at (q, qdot): M qddot + Vm qdot + G + Fd qdot."""
    qdot = np.asarray(qdot, dtype=float)
    qddot = np.asarray(qddot, dtype=float)
    M = mass_matrix(params, q)
    V = coriolis_matrix(params, q, qdot)
    fd = np.array([params.fd1, params.fd2])
    return (
        np.einsum("...ij,...j->...i", M, qddot)
        + np.einsum("...ij,...j->...i", V, qdot)
        + gravity_vector(params, q)
        + fd * qdot
    )


def forward_dynamics(params: ArmParams, q, qdot, tau) -> np.ndarray:
    """Joint acceleration from applied torque: solves M qddot = tau - Vm qdot - G - Fd qdot."""
    qdot = np.asarray(qdot, dtype=float)
    tau = np.asarray(tau, dtype=float)
    M = mass_matrix(params, q)
    V = coriolis_matrix(params, q, qdot)
    fd = np.array([params.fd1, params.fd2])
    rhs = tau - np.einsum("...ij,...j->...i", V, qdot) - gravity_vector(params, q) - fd * qdot
    try:
        return np.linalg.solve(M, rhs[..., :, None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMassError(f"inertia matrix solve failed: {exc}") from exc
