"""Scenario config files: INI-style sections, degrees at the surface.

Angles are written in degrees in config files because constraint radii
and initial errors are most naturally quoted that way; conversion to
radians happens here, at the parse boundary, and nowhere else.  Every
module-level validity rule is enforced at parse time so a run can never
fail on a bad config mid-integration.
"""

import configparser
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .controller import GainConfig
from .dynamics import ArmParams
from .errors import ConfigError
from .simulator import SimConfig
from .trajectory import SineTrajectory

DEG = math.pi / 180.0

_REQUIRED = {
    "model": ("theta",),
    "gains": ("k", "K", "delta_deg", "gamma", "variant", "tau_max"),
    "trajectory": ("amplitude", "omega", "alpha"),
    "sim": ("dt", "horizon", "e0_deg", "qdot0", "theta_hat0"),
}


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario: the simulation config plus output paths."""

    sim: SimConfig
    trace_path: str = "trace.csv"
    metrics_path: str = "metrics.txt"


def reference_scenario_text() -> str:
    """Text of the bundled reference scenario config."""
    return resources.files(__package__).joinpath(
        "data/reference_scenario.ini").read_text(encoding="utf-8")


def load_scenario(path: str | None = None,
                  gate_gain_condition: bool = True) -> Scenario:
    """Parse and validate a scenario file (the bundled one when path is None).

    ``gate_gain_condition=False`` defers the barrier feasibility
    inequality to the certifier so it can be reported rather than
    rejected.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is None:
        parser.read_string(reference_scenario_text())
        path = "<bundled reference scenario>"
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    return _build(parser, path, gate_gain_condition)


def _build(parser: configparser.ConfigParser, path: str,
           gate_gain_condition: bool) -> Scenario:
    for section, keys in _REQUIRED.items():
        if not parser.has_section(section):
            raise ConfigError(f"{path}: missing section [{section}]")
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"{path}: missing key '{key}' in section [{section}]")

    theta_vec = _floats(parser, path, "model", "theta", 5)
    try:
        theta = ArmParams.from_vector(theta_vec)
    except ValueError as exc:
        raise ConfigError(f"{path}: [model] theta: {exc}") from exc

    k = _floats(parser, path, "gains", "k")
    n = k.shape[0]
    K = _floats(parser, path, "gains", "K", n)
    delta = _floats(parser, path, "gains", "delta_deg", n) * DEG
    gamma = _floats(parser, path, "gains", "gamma", 5)
    variant = parser.get("gains", "variant").strip().lower()
    raw_tau = parser.get("gains", "tau_max").strip().lower()
    if raw_tau == "none":
        tau_max = None
    else:
        tau_max = _scalar(path, "gains", "tau_max", raw_tau)
    try:
        gains = GainConfig(k=k, K=K, delta=delta, gamma=gamma, variant=variant,
                           tau_max=tau_max,
                           enforce_gain_condition=gate_gain_condition)
    except ValueError as exc:
        raise ConfigError(f"{path}: [gains]: {exc}") from exc

    amplitude = _floats(parser, path, "trajectory", "amplitude", n)
    omega = _scalar(path, "trajectory", "omega", parser.get("trajectory", "omega"))
    alpha = _scalar(path, "trajectory", "alpha", parser.get("trajectory", "alpha"))
    try:
        trajectory = SineTrajectory(amplitude=amplitude, omega=omega, alpha=alpha)
    except ValueError as exc:
        raise ConfigError(f"{path}: [trajectory]: {exc}") from exc

    dt = _scalar(path, "sim", "dt", parser.get("sim", "dt"))
    horizon = _scalar(path, "sim", "horizon", parser.get("sim", "horizon"))
    e0 = _floats(parser, path, "sim", "e0_deg", n) * DEG
    qdot0 = _floats(parser, path, "sim", "qdot0", n)
    theta_hat0 = _floats(parser, path, "sim", "theta_hat0", 5)
    q0 = trajectory.sample(0.0).pos - e0
    try:
        sim = SimConfig(theta=theta, gains=gains, trajectory=trajectory,
                        q0=q0, qdot0=qdot0, theta_hat0=theta_hat0,
                        dt=dt, horizon=horizon)
    except ValueError as exc:
        raise ConfigError(f"{path}: [sim]: {exc}") from exc

    trace_path = "trace.csv"
    metrics_path = "metrics.txt"
    if parser.has_section("output"):
        trace_path = parser.get("output", "trace_path", fallback=trace_path).strip()
        metrics_path = parser.get("output", "metrics_path", fallback=metrics_path).strip()
    return Scenario(sim=sim, trace_path=trace_path, metrics_path=metrics_path)


def _floats(parser, path, section, key, expect: int | None = None) -> np.ndarray:
    raw = parser.get(section, key)
    parts = raw.replace(",", " ").split()
    try:
        vals = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"{path}: [{section}] {key}: not a number list: {raw!r}") from exc
    if expect is not None and vals.shape[0] != expect:
        raise ConfigError(
            f"{path}: [{section}] {key}: expected {expect} numbers, got {vals.shape[0]}")
    if vals.shape[0] == 0:
        raise ConfigError(f"{path}: [{section}] {key}: empty value")
    return vals


def _scalar(path, section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{path}: [{section}] {key}: not a number: {raw!r}") from exc
