"""Numerical stability analysis: barrier Lyapunov value, gain
certification and trace metrics.

Everything here needs the true plant parameters (for the estimation
error) and is strictly an analysis-time tool; nothing feeds back into
the control path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .controller import BARRIER_GUARD, GainConfig
from .errors import ConstraintBreachError

PASS = "PASS"
FAIL = "FAIL"
NOT_CHECKED = "NOT-CHECKED"
INFO = "INFO"


@dataclass(frozen=True)
class AnalysisBounds:
    """Model bounding constants feeding the gain certifier.

    m1, m2 bound the inertia eigenvalues (grid search supplies them).
    zeta1, zeta2 bound the residual dynamics norm and kn is the
    nonlinear damping gain; they are user-supplied and the related
    conditions are reported NOT-CHECKED when absent.  z0_norm is the
    initial combined error/estimation-error norm.
    """

    m1: float
    m2: float
    zeta1: float | None = None
    zeta2: float | None = None
    kn: float | None = None
    z0_norm: float | None = None

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 >= self.m1):
            raise ValueError("need 0 < m1 <= m2")
        for name in ("zeta1", "zeta2", "kn", "z0_norm"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative when given")


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    status: str
    lhs: float | None = None
    rhs: float | None = None
    detail: str = ""

    def render(self) -> str:
        parts = [f"{self.name:<22} {self.status:<11}"]
        if self.lhs is not None and self.rhs is not None:
            parts.append(f"{self.lhs:.6g} vs {self.rhs:.6g}")
        elif self.lhs is not None:
            parts.append(f"{self.lhs:.6g}")
        if self.detail:
            parts.append(f"({self.detail})")
        return "  ".join(parts)


@dataclass(frozen=True)
class CertificationReport:
    checks: tuple[ConditionCheck, ...]

    @property
    def all_checked_pass(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def render(self) -> str:
        return "\n".join(c.render() for c in self.checks)

    def key_values(self) -> dict:
        out = {}
        for c in self.checks:
            key = c.name.lower().replace(" ", "_").replace("-", "_")
            out[f"{key}.status"] = c.status
            if c.lhs is not None:
                out[f"{key}.lhs"] = f"{c.lhs:.9g}"
            if c.rhs is not None:
                out[f"{key}.rhs"] = f"{c.rhs:.9g}"
        return out


def blf_value(e, e_f, eta, theta_err, M, cfg: GainConfig) -> float:
    """Barrier Lyapunov value for the configured variant.

    V = 1/2 eta^T M eta + 1/2 e_f^T e_f + barrier(e) + 1/2 theta_err^T
    Gamma^-1 theta_err, where barrier(e) is the log or tan term.  Zero
    exactly when every argument is zero; raises ConstraintBreachError
    outside the barrier domain.
    """
    e = np.asarray(e, dtype=float)
    e_f = np.asarray(e_f, dtype=float)
    eta = np.asarray(eta, dtype=float)
    theta_err = np.asarray(theta_err, dtype=float)
    limit = cfg.delta * (1.0 - BARRIER_GUARD)
    over = np.abs(e) >= limit
    if np.any(over):
        j = int(np.argmax(over))
        raise ConstraintBreachError(time=float("nan"), joint=j, value=float(e[j]))
    d2 = cfg.delta ** 2
    if cfg.variant == "tan":
        bar = float(np.sum(d2 / np.pi * np.tan(0.5 * np.pi * e * e / d2)))
    else:
        bar = float(np.sum(0.5 * cfg.K * np.log(d2 / (d2 - e * e))))
    quad = 0.5 * float(eta @ np.asarray(M) @ eta) + 0.5 * float(e_f @ e_f)
    par = 0.5 * float(np.sum(theta_err ** 2 / cfg.gamma))
    return quad + bar + par


def lambda_bounds(cfg: GainConfig, m1: float, m2: float,
                  rho: float = 0.99) -> tuple[float, float]:
    """Quadratic sandwich constants (lambda1, lambda2) for V.

    lambda1 = 1/2 min{m1, 1, min K / max delta^2, min eig Gamma^-1}.
    The lambda2 counterpart needs the largest barrier gain, which is
    state-dependent and unbounded, so it is evaluated on the error
    envelope |e_i| <= rho delta_i; callers must quote the envelope
    alongside the value.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    lam1 = 0.5 * min(
        m1, 1.0,
        float(cfg.K.min() / (cfg.delta ** 2).max()),
        float(1.0 / cfg.gamma.max()),
    )
    if cfg.variant == "tan":
        tg = math.tan(0.5 * math.pi * rho * rho)
        ke_max = 1.0 + tg * tg
    else:
        ke_max = float((cfg.K / (cfg.delta ** 2 * (1.0 - rho * rho))).max())
    lam2 = 0.5 * max(m2, 1.0, ke_max, float(1.0 / cfg.gamma.min()))
    return lam1, lam2


def certify_gains(cfg: GainConfig, bounds: AnalysisBounds,
                  rho: float = 0.99) -> CertificationReport:
    """Evaluate every theorem gain condition numerically.

    Failures become FAIL report entries, never exceptions; conditions
    whose bounding constants are absent are reported NOT-CHECKED.
    """
    checks = []
    min_K = float(cfg.K.min())
    max_d2 = float((cfg.delta ** 2).max())
    checks.append(ConditionCheck(
        "K-condition",
        PASS if min_K >= max_d2 else FAIL,
        lhs=min_K, rhs=max_d2,
        detail="min K >= max delta^2",
    ))
    lam1, lam2 = lambda_bounds(cfg, bounds.m1, bounds.m2, rho)
    checks.append(ConditionCheck("lambda1", INFO, lhs=lam1))
    checks.append(ConditionCheck("lambda2", INFO, lhs=lam2,
                                 detail=f"barrier gain taken at |e| = {rho:g} delta"))
    if bounds.zeta1 is not None and bounds.zeta2 is not None and bounds.kn is not None:
        k_required = (1.0 + bounds.zeta1 ** 2 * bounds.kn
                      + bounds.zeta2 ** 2 * bounds.kn) / bounds.m1
        k_actual = float(cfg.k.min())
        checks.append(ConditionCheck(
            "k-design",
            PASS if k_actual >= k_required else FAIL,
            lhs=k_actual, rhs=k_required,
            detail="min k >= (1 + zeta1^2 kn + zeta2^2 kn)/m1",
        ))
    else:
        checks.append(ConditionCheck("k-design", NOT_CHECKED,
                                     detail="requires zeta1, zeta2 and kn"))
    if bounds.kn is not None and bounds.z0_norm is not None:
        kn_required = 1.0 + (lam2 / lam1) * bounds.z0_norm ** 2
        checks.append(ConditionCheck(
            "kn-bound",
            PASS if bounds.kn > kn_required else FAIL,
            lhs=bounds.kn, rhs=kn_required,
            detail="kn > 1 + (lambda2/lambda1) ||z(0)||^2",
        ))
    else:
        checks.append(ConditionCheck("kn-bound", NOT_CHECKED,
                                     detail="requires kn and ||z(0)||"))
    return CertificationReport(tuple(checks))


@dataclass(frozen=True)
class DecreaseReport:
    """Monotonicity summary of V along a trace."""

    n_increases: int
    max_increase: float
    tolerance: float
    beta_hat: float
    correlation: float
    saturation_active: bool
    gain_condition_met: bool | None

    @property
    def monotone(self) -> bool:
        return self.n_increases == 0

    def render(self) -> str:
        lines = [
            f"V increases above tolerance : {self.n_increases}",
            f"largest single-step increase: {self.max_increase:.6g}",
            f"per-step tolerance          : {self.tolerance:.6g}",
            f"fitted decrease rate beta   : {self.beta_hat:.6g}",
            f"corr(dV/dt, -||x||^2)       : {self.correlation:.6g}",
        ]
        if self.saturation_active:
            lines.append("warning: saturation engaged during the run; "
                         "the decrease analysis does not apply to clipped intervals")
        if self.gain_condition_met is False:
            lines.append("warning: barrier gain condition not met; "
                         "no decrease claim is made for this gain set")
        return "\n".join(lines)


def verify_decrease(trace, cfg: GainConfig | None = None) -> DecreaseReport:
    """Check V for above-tolerance increases along a trace.

    The tolerance is step-relative, 1e-6 (1 + V(0)), to absorb RK4 and
    rounding noise; exact non-increase is a continuous-time statement.
    Also fits dV/dt ~ -beta ||x||^2 through the origin and reports the
    empirical beta and its correlation.
    """
    V = np.asarray(trace.V, dtype=float)
    if V.shape[0] < 2:
        raise ValueError("trace too short to analyze")
    tol = 1e-6 * (1.0 + V[0])
    dV = np.diff(V)
    n_inc = int(np.sum(dV > tol))
    max_inc = float(dV.max())
    dt = float(trace.t[1] - trace.t[0])
    x2 = trace.x_norms()[:-1] ** 2
    rate = dV / dt
    denom = float(np.sum(x2 * x2))
    beta_hat = float(np.sum(-rate * x2) / denom) if denom > 0 else 0.0
    if np.std(rate) > 0 and np.std(x2) > 0:
        corr = float(np.corrcoef(rate, -x2)[0, 1])
    else:
        corr = 0.0
    condition = None
    if cfg is not None:
        condition = bool(cfg.K.min() >= (cfg.delta ** 2).max())
    return DecreaseReport(
        n_increases=n_inc,
        max_increase=max_inc,
        tolerance=tol,
        beta_hat=beta_hat,
        correlation=corr,
        saturation_active=trace.saturation_active(),
        gain_condition_met=condition,
    )


@dataclass(frozen=True)
class RunMetrics:
    """Scalar summary of a completed run.

    Settling time per joint is the first instant after which |e_i|
    stays inside the band for the remainder of the horizon (None when
    the band is never held).  Drift rates are least-squares slopes over
    the final quarter, so a zero-mean wiggle does not register as
    drift.
    """

    band: float
    max_abs_error: np.ndarray
    settling_time: tuple
    steady_state_error: np.ndarray
    max_abs_torque: np.ndarray
    theta_hat_final: np.ndarray
    theta_drift_rate: np.ndarray

    def render(self) -> str:
        deg = 180.0 / np.pi
        settle = ", ".join("never" if s is None else f"{s:.3f} s" for s in self.settling_time)
        lines = [
            f"band                 : {self.band * deg:.4g} deg",
            f"max |e| per joint    : " + ", ".join(f"{v * deg:.6g} deg" for v in self.max_abs_error),
            f"settling time        : {settle}",
            f"steady-state max |e| : " + ", ".join(f"{v * deg:.6g} deg" for v in self.steady_state_error),
            f"max |tau| per joint  : " + ", ".join(f"{v:.6g} N*m" for v in self.max_abs_torque),
            f"theta_hat (final)    : " + ", ".join(f"{v:.6g}" for v in self.theta_hat_final),
            f"theta_hat drift rate : " + ", ".join(f"{v:.3g}/s" for v in self.theta_drift_rate),
        ]
        return "\n".join(lines)

    def key_values(self) -> dict:
        out = {"band_rad": f"{self.band:.9g}"}
        for i, v in enumerate(self.max_abs_error):
            out[f"max_abs_error_rad.{i + 1}"] = f"{v:.9g}"
        for i, s in enumerate(self.settling_time):
            out[f"settling_time_s.{i + 1}"] = "" if s is None else f"{s:.9g}"
        for i, v in enumerate(self.steady_state_error):
            out[f"steady_state_error_rad.{i + 1}"] = f"{v:.9g}"
        for i, v in enumerate(self.max_abs_torque):
            out[f"max_abs_torque.{i + 1}"] = f"{v:.9g}"
        for i, v in enumerate(self.theta_hat_final):
            out[f"theta_hat_final.{i + 1}"] = f"{v:.9g}"
        for i, v in enumerate(self.theta_drift_rate):
            out[f"theta_drift_rate.{i + 1}"] = f"{v:.9g}"
        return out


def run_metrics(trace, band: float) -> RunMetrics:
    """Compute the standard scalar metrics of a completed trace."""
    e = np.asarray(trace.e, dtype=float)
    t = np.asarray(trace.t, dtype=float)
    n = e.shape[1]
    max_abs = np.abs(e).max(axis=0)
    settling = []
    for i in range(n):
        outside = np.abs(e[:, i]) >= band
        if not outside.any():
            settling.append(float(t[0]))
        else:
            last = int(np.flatnonzero(outside).max())
            settling.append(float(t[last + 1]) if last + 1 < len(t) else None)
    q0 = int(0.75 * (len(t) - 1))
    window = slice(q0, None)
    tw = t[window]
    th = np.asarray(trace.theta_hat, dtype=float)[window]
    # least-squares slope of each estimate over the final quarter
    tc = tw - tw.mean()
    denom = float(tc @ tc)
    drift = (tc @ (th - th.mean(axis=0))) / denom if denom > 0 else np.zeros(th.shape[1])
    return RunMetrics(
        band=band,
        max_abs_error=max_abs,
        settling_time=tuple(settling),
        steady_state_error=np.abs(e[window]).max(axis=0),
        max_abs_torque=np.abs(np.asarray(trace.tau)).max(axis=0),
        theta_hat_final=th[-1].copy(),
        theta_drift_rate=np.asarray(drift),
    )
