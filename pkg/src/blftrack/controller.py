"""Output-feedback tracking control law.

The deployed control path uses joint positions only.  A first-order
surrogate filter produces e_f in place of the unmeasurable velocity
tracking error:

    e_f = -k e + w,    wdot = -(k + 1) e_f - k e + Ke(e) e,   w(0) = k e(0)

The barrier gain Ke(e) grows without bound as any |e_i| approaches its
constraint radius Delta_i, in one of two variants:

    log:  Ke_i = K_i / (Delta_i^2 - e_i^2)
    tan:  Ke_i = 1 + tan^2((pi/2) e_i^2 / Delta_i^2)

The torque is tau = Yd theta_hat + Ke e - k e_f, with Yd the regressor
evaluated along the desired trajectory, and theta_hat produced by an
integral adaptation law that never touches a velocity signal:

    theta_hat = I1 + Gamma Yd^T e - I2 + offset
    I1dot = Gamma Yd^T (e_f + e),   I2dot = Gamma (dYd/dt)^T e

Differentiating recovers theta_hat_dot = Gamma Yd^T eta, the gradient
update written against the unmeasurable composite error eta; that form
is exposed only as a test oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintBreachError

#: Relative guard below the constraint radius at which evaluation aborts.
#: The barrier gain sits inside an ODE right-hand side and must fail
#: loudly rather than emit huge or infinite values.
BARRIER_GUARD = 1e-9

VARIANTS = ("log", "tan")


@dataclass(frozen=True)
class GainConfig:
    """Controller gains, constraint radii and saturation limit.

    ``k``, ``K``, ``delta`` have one entry per joint; ``gamma`` one entry
    per model parameter.  ``tau_max`` of None disables saturation.
    Construction enforces the barrier feasibility condition
    min K_i >= max Delta_i^2 unless ``enforce_gain_condition`` is False
    (the gain certifier disables it so it can report the violation
    instead of crashing).
    """

    k: np.ndarray
    K: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    variant: str = "log"
    tau_max: float | None = 10.0
    enforce_gain_condition: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        for name in ("k", "K", "delta", "gamma"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)) or not np.all(arr > 0):
                raise ValueError(f"gain '{name}' must be a 1-D array of positive finite entries")
        n = self.k.shape[0]
        if self.K.shape[0] != n or self.delta.shape[0] != n:
            raise ValueError("k, K and delta must all have one entry per joint")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.tau_max is not None:
            tau_max = float(self.tau_max)
            if not np.isfinite(tau_max) or tau_max <= 0:
                raise ValueError("tau_max must be positive (or None to disable saturation)")
            object.__setattr__(self, "tau_max", tau_max)
        if self.enforce_gain_condition and self.K.min() < (self.delta ** 2).max():
            raise ValueError(
                f"barrier gain condition violated: min K = {self.K.min():.6g} < "
                f"max delta^2 = {(self.delta ** 2).max():.6g}"
            )

    @property
    def n_joints(self) -> int:
        return self.k.shape[0]

    @property
    def n_params(self) -> int:
        return self.gamma.shape[0]


@dataclass
class ControllerState:
    """Filter state plus the two adaptation integrators.

    ``theta_hat_offset`` is the constant that makes theta_hat(0) equal
    the configured initial estimate; a constant leaves the update law's
    derivative unchanged.
    """

    w: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    theta_hat_offset: np.ndarray

    @classmethod
    def initial(cls, e0, Yd0, cfg: GainConfig, theta_hat0=None) -> "ControllerState":
        """State at t=0: w = k e(0), integrators set so theta_hat(0) = theta_hat0."""
        e0 = np.asarray(e0, dtype=float)
        Yd0 = np.asarray(Yd0, dtype=float)
        if theta_hat0 is None:
            theta_hat0 = np.zeros(cfg.n_params)
        return cls(
            w=cfg.k * e0,
            i1=-cfg.gamma * (Yd0.T @ e0),
            i2=np.zeros(cfg.n_params),
            theta_hat_offset=np.asarray(theta_hat0, dtype=float).copy(),
        )


def tracking_error(q_des, q) -> np.ndarray:
    """Joint position tracking error e = q_des - q."""
    return np.asarray(q_des, dtype=float) - np.asarray(q, dtype=float)


def barrier_gain(e, cfg: GainConfig) -> np.ndarray:
    """Error-dependent diagonal gain matrix Ke(e).

    Raises ConstraintBreachError once any |e_i| reaches
    Delta_i (1 - BARRIER_GUARD); past that point the gain is no longer
    trustworthy and the run is invalid.
    """
    e = np.asarray(e, dtype=float)
    limit = cfg.delta * (1.0 - BARRIER_GUARD)
    over = np.abs(e) >= limit
    if np.any(over):
        j = int(np.argmax(over))
        raise ConstraintBreachError(time=float("nan"), joint=j, value=float(e[j]))
    if cfg.variant == "tan":
        tg = np.tan(0.5 * np.pi * (e / cfg.delta) ** 2)
        diag = 1.0 + tg * tg
    else:
        diag = cfg.K / (cfg.delta ** 2 - e * e)
    return np.diag(diag)


def filter_output(e, w, cfg: GainConfig) -> np.ndarray:
    """Surrogate velocity error e_f = -k e + w."""
    return -cfg.k * np.asarray(e, dtype=float) + np.asarray(w, dtype=float)


def filter_state_rate(e, e_f, Ke, cfg: GainConfig) -> np.ndarray:
    """Filter state derivative wdot = -(k + 1) e_f - k e + Ke e."""
    e = np.asarray(e, dtype=float)
    e_f = np.asarray(e_f, dtype=float)
    return -(cfg.k + 1.0) * e_f - cfg.k * e + np.asarray(Ke) @ e


def integrator_rates(Yd, dYd_dt, e, e_f, cfg: GainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Rates of the two adaptation integrators (I1dot, I2dot)."""
    e = np.asarray(e, dtype=float)
    e_f = np.asarray(e_f, dtype=float)
    i1dot = cfg.gamma * (np.asarray(Yd).T @ (e_f + e))
    i2dot = cfg.gamma * (np.asarray(dYd_dt).T @ e)
    return i1dot, i2dot


def theta_hat(state: ControllerState, Yd, e, cfg: GainConfig) -> np.ndarray:
    """Current parameter estimate; algebraic in the integrator states."""
    return (
        state.i1
        + cfg.gamma * (np.asarray(Yd).T @ np.asarray(e, dtype=float))
        - state.i2
        + state.theta_hat_offset
    )


def control_torque(Yd, th_hat, Ke, e, e_f, cfg: GainConfig) -> np.ndarray:
    """Applied torque tau = Yd theta_hat + Ke e - k e_f, saturated if enabled."""
    tau = raw_control_torque(Yd, th_hat, Ke, e, e_f, cfg)
    if cfg.tau_max is not None:
        tau = np.clip(tau, -cfg.tau_max, cfg.tau_max)
    return tau


def raw_control_torque(Yd, th_hat, Ke, e, e_f, cfg: GainConfig) -> np.ndarray:
    """Torque before saturation."""
    e = np.asarray(e, dtype=float)
    return (
        np.asarray(Yd) @ np.asarray(th_hat, dtype=float)
        + np.asarray(Ke) @ e
        - cfg.k * np.asarray(e_f, dtype=float)
    )


def oracle_theta_rate(Yd, eta, cfg: GainConfig) -> np.ndarray:
    """Gradient-form estimate rate Gamma Yd^T eta.

    Test oracle only: eta contains the velocity tracking error and is
    unavailable to the deployed controller.
    """
    return cfg.gamma * (np.asarray(Yd).T @ np.asarray(eta, dtype=float))
