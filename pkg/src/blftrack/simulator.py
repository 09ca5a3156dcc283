"""Deterministic closed-loop simulation.

Plant and controller are assembled into one ODE and integrated with
fixed-step classical RK4.  Two engines produce identical trajectories up
to floating-point association order:

* ``"fast"`` — the compiled kernel in ``_kernel`` (default),
* ``"reference"`` — a pure-Python loop over the modular operations,
  used by tests to pin the kernel's semantics.

Runs are seed-free and bit-reproducible: the same config yields the
same trace on the same platform.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import controller as ctl
from . import dynamics as dyn
from ._kernel import NONFINITE, OK, integrate_closed_loop
from .controller import ControllerState, GainConfig
from .dynamics import ArmParams
from .errors import ConstraintBreachError, NonFiniteError
from .trajectory import SineTrajectory


@dataclass(frozen=True)
class SimConfig:
    """Everything a closed-loop run needs; fully deterministic.

    ``q0`` is validated against the constraint region: the initial
    tracking error must lie strictly inside every radius.
    """

    theta: ArmParams
    gains: GainConfig
    trajectory: SineTrajectory
    q0: np.ndarray
    qdot0: np.ndarray
    theta_hat0: np.ndarray
    dt: float = 1e-3
    horizon: float = 60.0

    def __post_init__(self):
        n = self.gains.n_joints
        p = self.gains.n_params
        for name, size in (("q0", n), ("qdot0", n), ("theta_hat0", p)):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (size,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite vector of length {size}")
        if self.trajectory.n_joints != n:
            raise ValueError("trajectory amplitude count must match joint count")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be positive")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-6 or round(steps) < 1:
            raise ValueError("horizon must be a positive whole multiple of dt")
        e0 = self.initial_error()
        limit = self.gains.delta * (1.0 - ctl.BARRIER_GUARD)
        if np.any(np.abs(e0) >= limit):
            j = int(np.argmax(np.abs(e0) >= limit))
            raise ValueError(
                f"initial tracking error on joint {j + 1} (|e|={abs(e0[j]):.6g} rad) "
                f"is not strictly inside its constraint radius {self.gains.delta[j]:.6g} rad"
            )

    def initial_error(self) -> np.ndarray:
        return self.trajectory.sample(0.0).pos - self.q0

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class SimState:
    """Full closed-loop state at one instant."""

    t: float
    q: np.ndarray
    qdot: np.ndarray
    ctl: ControllerState


@dataclass(frozen=True)
class SimRates:
    """Time derivative of the closed-loop state."""

    qdot: np.ndarray
    qddot: np.ndarray
    wdot: np.ndarray
    i1dot: np.ndarray
    i2dot: np.ndarray


@dataclass
class Trace:
    """Uniform-dt log of every closed-loop signal.

    ``tau`` is post-saturation, ``tau_raw`` the unclamped value; ``V``
    is the barrier Lyapunov value for the configured variant (it uses
    the true plant parameters, so it is an analysis signal, not a
    controller signal).  ``y_final`` keeps the raw integrator state at
    the last record for convergence studies; ``ke`` is None for traces
    parsed back from CSV.
    """

    t: np.ndarray
    q: np.ndarray
    q_des: np.ndarray
    e: np.ndarray
    e_f: np.ndarray
    eta: np.ndarray
    tau: np.ndarray
    tau_raw: np.ndarray
    theta_hat: np.ndarray
    V: np.ndarray
    ke: np.ndarray | None = None
    y_final: np.ndarray | None = None

    def __len__(self) -> int:
        return self.t.shape[0]

    def x_norms(self) -> np.ndarray:
        """Rowwise norm of the combined error vector [eta, e_f, e]."""
        return np.sqrt(
            (self.eta ** 2).sum(axis=1)
            + (self.e_f ** 2).sum(axis=1)
            + (self.e ** 2).sum(axis=1)
        )

    def saturation_active(self) -> bool:
        return bool(np.any(self.tau != self.tau_raw))


def initial_state(cfg: SimConfig) -> SimState:
    s0 = cfg.trajectory.sample(0.0)
    e0 = cfg.initial_error()
    Yd0 = dyn.desired_regressor(s0)
    return SimState(
        t=0.0,
        q=cfg.q0.copy(),
        qdot=cfg.qdot0.copy(),
        ctl=ControllerState.initial(e0, Yd0, cfg.gains, cfg.theta_hat0),
    )


def closed_loop_rhs(state: SimState, cfg: SimConfig) -> SimRates:
    """Assemble the full ODE right-hand side at the state's time."""
    sample = cfg.trajectory.sample(state.t)
    e = ctl.tracking_error(sample.pos, state.q)
    Ke = ctl.barrier_gain(e, cfg.gains)
    e_f = ctl.filter_output(e, state.ctl.w, cfg.gains)
    Yd = dyn.desired_regressor(sample)
    dYd = dyn.desired_regressor_rate(sample)
    th = ctl.theta_hat(state.ctl, Yd, e, cfg.gains)
    tau = ctl.control_torque(Yd, th, Ke, e, e_f, cfg.gains)
    qddot = dyn.forward_dynamics(cfg.theta, state.q, state.qdot, tau)
    wdot = ctl.filter_state_rate(e, e_f, Ke, cfg.gains)
    i1dot, i2dot = ctl.integrator_rates(Yd, dYd, e, e_f, cfg.gains)
    rates = SimRates(state.qdot.copy(), qddot, wdot, i1dot, i2dot)
    flat = _pack_rates(rates)
    if not np.all(np.isfinite(flat)):
        raise NonFiniteError(time=state.t)
    return rates


def compute_eta(state: SimState, cfg: SimConfig) -> np.ndarray:
    """Composite error eta = edot + e + e_f; diagnostic only (uses qdot)."""
    sample = cfg.trajectory.sample(state.t)
    e = ctl.tracking_error(sample.pos, state.q)
    e_f = ctl.filter_output(e, state.ctl.w, cfg.gains)
    return (sample.vel - state.qdot) + e + e_f


def rk4(f, t, y, h):
    """One classical fourth-order Runge-Kutta step of size h."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(state: SimState, cfg: SimConfig) -> SimState:
    """Advance the closed loop by one fixed step of cfg.dt."""

    def f(t, y):
        return _pack_rates(closed_loop_rhs(_unpack_state(t, y, cfg), cfg))

    y = rk4(f, state.t, _pack_state(state), cfg.dt)
    return _unpack_state(state.t + cfg.dt, y, cfg)


def run(cfg: SimConfig, engine: str = "fast") -> Trace:
    """Integrate from t=0 to the horizon, logging one record per step.

    Raises ConstraintBreachError (with breach time and joint, partial
    trace attached) if any tracking error reaches its radius, and
    NonFiniteError if the state diverges.
    """
    if engine == "fast":
        return _run_kernel(cfg)
    if engine == "reference":
        return _run_reference(cfg)
    raise ValueError(f"unknown engine {engine!r}")


def _pack_state(state: SimState) -> np.ndarray:
    return np.concatenate([state.q, state.qdot, state.ctl.w, state.ctl.i1, state.ctl.i2])


def _unpack_state(t: float, y: np.ndarray, cfg: SimConfig) -> SimState:
    n = cfg.gains.n_joints
    p = cfg.gains.n_params
    ctl_state = ControllerState(
        w=y[2 * n:3 * n].copy(),
        i1=y[3 * n:3 * n + p].copy(),
        i2=y[3 * n + p:3 * n + 2 * p].copy(),
        theta_hat_offset=np.asarray(cfg.theta_hat0, dtype=float),
    )
    return SimState(t=t, q=y[:n].copy(), qdot=y[n:2 * n].copy(), ctl=ctl_state)


def _pack_rates(rates: SimRates) -> np.ndarray:
    return np.concatenate([rates.qdot, rates.qddot, rates.wdot, rates.i1dot, rates.i2dot])


def _alloc_trace(n_records: int, n: int, p: int) -> dict:
    return {
        "t": np.empty(n_records),
        "q": np.empty((n_records, n)),
        "q_des": np.empty((n_records, n)),
        "e": np.empty((n_records, n)),
        "e_f": np.empty((n_records, n)),
        "eta": np.empty((n_records, n)),
        "tau": np.empty((n_records, n)),
        "tau_raw": np.empty((n_records, n)),
        "theta_hat": np.empty((n_records, p)),
        "V": np.empty(n_records),
        "ke": np.empty((n_records, n)),
    }


def _run_kernel(cfg: SimConfig) -> Trace:
    g = cfg.gains
    nsteps = cfg.n_steps
    state0 = initial_state(cfg)
    y = _pack_state(state0)
    buf = _alloc_trace(nsteps + 1, g.n_joints, g.n_params)
    tau_max = g.tau_max if g.tau_max is not None else np.inf
    status, n_rec, t_fail, fail_value = integrate_closed_loop(
        y, cfg.theta.vector, g.k, g.K, g.delta, g.gamma,
        g.variant == "tan", float(tau_max),
        cfg.trajectory.amplitude, float(cfg.trajectory.omega),
        float(cfg.trajectory.alpha), np.asarray(cfg.theta_hat0, dtype=float),
        float(cfg.dt), nsteps,
        buf["t"], buf["q_des"], buf["q"], buf["e"], buf["e_f"], buf["eta"],
        buf["tau"], buf["tau_raw"], buf["theta_hat"], buf["V"], buf["ke"],
    )
    trace = Trace(**{k: v[:n_rec] for k, v in buf.items()},
                  y_final=y if status == OK else None)
    if status == OK:
        return trace
    if status == NONFINITE:
        raise NonFiniteError(time=t_fail, trace=trace)
    raise ConstraintBreachError(time=t_fail, joint=status - 1, value=fail_value, trace=trace)


def _signals(state: SimState, cfg: SimConfig) -> dict:
    sample = cfg.trajectory.sample(state.t)
    e = ctl.tracking_error(sample.pos, state.q)
    Ke = ctl.barrier_gain(e, cfg.gains)
    e_f = ctl.filter_output(e, state.ctl.w, cfg.gains)
    Yd = dyn.desired_regressor(sample)
    th = ctl.theta_hat(state.ctl, Yd, e, cfg.gains)
    tau_raw = ctl.raw_control_torque(Yd, th, Ke, e, e_f, cfg.gains)
    tau = tau_raw if cfg.gains.tau_max is None else np.clip(tau_raw, -cfg.gains.tau_max, cfg.gains.tau_max)
    eta = (sample.vel - state.qdot) + e + e_f
    from .lyapunov import blf_value  # deferred: lyapunov imports controller

    V = blf_value(e, e_f, eta, cfg.theta.vector - th,
                  dyn.mass_matrix(cfg.theta, state.q), cfg.gains)
    return {
        "q_des": sample.pos, "e": e, "e_f": e_f, "eta": eta, "tau": tau,
        "tau_raw": tau_raw, "theta_hat": th, "V": V, "ke": np.diag(Ke),
    }


def _run_reference(cfg: SimConfig) -> Trace:
    nsteps = cfg.n_steps
    buf = _alloc_trace(nsteps + 1, cfg.gains.n_joints, cfg.gains.n_params)
    state = initial_state(cfg)
    n_rec = 0
    try:
        for k in range(nsteps + 1):
            state.t = k * cfg.dt  # keep record times exactly k*dt
            sig = _signals(state, cfg)
            buf["t"][k] = state.t
            buf["q"][k] = state.q
            for name in ("q_des", "e", "e_f", "eta", "tau", "tau_raw", "theta_hat", "V", "ke"):
                buf[name][k] = sig[name]
            if not np.isfinite(sig["V"]):
                raise NonFiniteError(time=state.t)
            n_rec = k + 1
            if k < nsteps:
                state = rk4_step(state, cfg)
    except (ConstraintBreachError, NonFiniteError) as exc:
        partial = Trace(**{key: v[:n_rec] for key, v in buf.items()})
        if isinstance(exc, NonFiniteError):
            raise NonFiniteError(time=exc.time, trace=partial) from None
        raise ConstraintBreachError(
            time=exc.time if np.isfinite(exc.time) else state.t,
            joint=exc.joint, value=exc.value, trace=partial,
        ) from None
    return Trace(**buf, y_final=_pack_state(state))


def with_saturation(cfg: SimConfig, tau_max: float | None) -> SimConfig:
    """Copy of cfg with a different (or no) torque limit."""
    return replace(cfg, gains=replace(cfg.gains, tau_max=tau_max))
