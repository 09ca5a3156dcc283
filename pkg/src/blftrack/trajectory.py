"""Smooth-start sinusoidal reference trajectories.

The reference profile per joint is

    q_des,i(t) = a_i sin(omega t) (1 - exp(-alpha t^3))

The cubic-exponential envelope makes the position, velocity and
acceleration all start at exactly zero, so the loop is excited smoothly
from rest.  Derivatives through the third order are provided in closed
form because the adaptation law needs the rate of the desired regressor.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectorySample


@dataclass(frozen=True)
class SineTrajectory:
    """Per-joint amplitude (rad), shared frequency (rad/s) and envelope rate."""

    amplitude: np.ndarray
    omega: float = 1.0
    alpha: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "amplitude", np.asarray(self.amplitude, dtype=float))
        if self.amplitude.ndim != 1:
            raise ValueError("amplitude must be a 1-D array (one entry per joint)")
        if not np.all(np.isfinite(self.amplitude)):
            raise ValueError("amplitude entries must be finite")
        if not (np.isfinite(self.omega) and np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("omega must be finite, alpha finite and nonnegative")

    @property
    def n_joints(self) -> int:
        return self.amplitude.shape[0]

    def sample(self, t) -> TrajectorySample:
        """Desired state at time(s) t; scalar t gives (n,) vectors, an array
        of shape (...) gives (..., n) vectors."""
        t = np.asarray(t, dtype=float)
        w, al = self.omega, self.alpha
        s = np.sin(w * t)
        c = np.cos(w * t)
        f0, f1, f2, f3 = s, w * c, -w * w * s, -w ** 3 * c
        t2 = t * t
        t3 = t2 * t
        E = np.exp(-al * t3)
        g0 = 1.0 - E
        g1 = 3.0 * al * t2 * E
        g2 = (6.0 * al * t - 9.0 * al * al * t2 * t2) * E
        g3 = (6.0 * al - 54.0 * al * al * t3 + 27.0 * al ** 3 * t3 * t3) * E
        # Leibniz products of f(t) = sin(w t) and the envelope g(t)
        p0 = f0 * g0
        p1 = f1 * g0 + f0 * g1
        p2 = f2 * g0 + 2.0 * f1 * g1 + f0 * g2
        p3 = f3 * g0 + 3.0 * f2 * g1 + 3.0 * f1 * g2 + f0 * g3
        a = self.amplitude
        return TrajectorySample(
            t=t if t.ndim else float(t),
            pos=np.multiply.outer(p0, a),
            vel=np.multiply.outer(p1, a),
            acc=np.multiply.outer(p2, a),
            jerk=np.multiply.outer(p3, a),
        )


#: Trajectory used by the bundled reference scenario.
REFERENCE_TRAJECTORY = SineTrajectory(amplitude=np.array([0.7, 1.2]))
