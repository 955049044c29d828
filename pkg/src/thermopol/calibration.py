"""Camera gain and polarimetric-response calibration from difference images.

The polarizer sits before the camera, so whatever enters the sensor is fully
polarized at the polarizer angle and sees the sensor gain factor
m(psi) = ((1+k) + (1-k) cos 2psi) / 2, with m(0) = 1 and m(pi/2) = k. An
unpolarized blackbody pair thus responds as I_delta = c m(psi)/2 * delta_s0.
Averaging over a polarizer-angle set uniform modulo pi cancels the cos term
and yields the composite gain g = c (1+k)/4 (calibrate_gain); grouping by
angle instead exposes m(psi) and separates c from k (calibrate_response).
A fully polarized source whose AoLP tracks the polarizer angle gives the
same shape at twice the amplitude and is accepted interchangeably.
"""

import json
from dataclasses import dataclass

import numpy as np

from .polarization import STEFAN_BOLTZMANN, blackbody_radiance

ALS_MAX_ITER = 100
ALS_TOL = 1e-9


def blackbody_stokes(tau):
    """Unpolarized Stokes vector [sigma tau^4, 0, 0] of a blackbody."""
    return np.array([blackbody_radiance(tau), 0.0, 0.0])


@dataclass(frozen=True)
class CalibrationShot:
    """Difference image of two blackbodies at known temperatures."""

    psi: float
    tau_alpha: float
    tau_beta: float
    diff: np.ndarray

    def __post_init__(self):
        if self.tau_alpha == self.tau_beta:
            raise ValueError("blackbody temperatures must differ")

    @property
    def delta_s0(self):
        return STEFAN_BOLTZMANN * (self.tau_beta**4 - self.tau_alpha**4)

    # unpolarized input loses half its power at the polarizer
    response_scale = 0.5


@dataclass(frozen=True)
class PolarizedShot:
    """Difference image of a fully polarized source, AoLP aligned with psi.

    delta_s0 is the change in source intensity between the two captures.
    """

    psi: float
    delta_s0: float
    diff: np.ndarray

    response_scale = 1.0


@dataclass(frozen=True)
class GainFit:
    """Composite gain g = c (1 + k) / 4 with the goodness of the linear fit."""

    composite: float
    r2: float

    def gain(self, k):
        """Camera gain c for a known response factor k."""
        return 4.0 * self.composite / (1.0 + k)


@dataclass(frozen=True)
class CalibrationResult:
    c: float
    k: float
    r2: float
    method: str  # "composite" | "polarized-source"

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump({"c": self.c, "k": self.k, "r2": self.r2,
                       "method": self.method}, f, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            d = json.load(f)
        return cls(c=d["c"], k=d["k"], r2=d["r2"], method=d["method"])


def _slope_through_origin(x, y):
    """Least-squares slope of y = m x and the fit's R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sxx = float(x @ x)
    if sxx == 0:
        raise ValueError("singular design: all predictors are zero")
    m = float(x @ y) / sxx
    ss_res = float(np.sum((y - m * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return m, r2


def calibrate_gain(shots):
    """Fit the composite gain g = c (1+k)/4 from blackbody-pair differences.

    Uses the psi-averaged model: responses of each temperature pair are
    averaged over its polarizer angles, which cancels the sensor's cos(2 psi)
    gain variation when the angle set is uniform modulo pi.
    """
    pairs = {}
    for s in shots:
        pairs.setdefault((s.tau_alpha, s.tau_beta), []).append(s)
    if len(pairs) < 2:
        raise ValueError("need at least two blackbody temperature pairs")
    x = []
    y = []
    for group in pairs.values():
        x.append(group[0].delta_s0)
        y.append(float(np.mean([np.mean(s.diff) for s in group])))
    m, r2 = _slope_through_origin(np.array(x), np.array(y))
    return GainFit(composite=m, r2=r2)


def calibrate_response(shots):
    """Recover (c, k) from difference shots at several polarizer angles.

    Shots may be blackbody pairs or polarized-source pairs; per-angle gains
    m(psi)-scaled slopes are fit first, then c and k are refined by
    alternating least squares on g(psi) = c ((1+k) + (1-k) cos 2psi) / 2.
    """
    angles = sorted({round(s.psi % np.pi, 12) for s in shots})
    if len(angles) < 3:
        raise ValueError(
            f"need shots at >=3 distinct polarizer angles, got {len(angles)}")
    psis = []
    gains = []
    for a in angles:
        group = [s for s in shots if round(s.psi % np.pi, 12) == a]
        x = np.array([s.delta_s0 * s.response_scale for s in group])
        y = np.array([float(np.mean(s.diff)) for s in group])
        g, _ = _slope_through_origin(x, y)
        psis.append(a)
        gains.append(g)
    psis = np.array(psis)
    g = np.array(gains)
    cos2 = np.cos(2.0 * psis)

    # alternating least squares on the bilinear model g = c ((1+k)+(1-k)cos2psi)/2
    c_est, k_est = float(np.max(g)), 1.0
    for _ in range(ALS_MAX_ITER):
        c_prev, k_prev = c_est, k_est
        basis = 0.5 * ((1.0 + k_est) + (1.0 - k_est) * cos2)
        c_est, _ = _slope_through_origin(basis, g)
        # residual linear in k: g - c(1+cos2)/2 = k * c(1-cos2)/2
        rhs = g - 0.5 * c_est * (1.0 + cos2)
        lhs = 0.5 * c_est * (1.0 - cos2)
        k_est, _ = _slope_through_origin(lhs, rhs)
        k_est = float(np.clip(k_est, 1e-6, 1.0))
        if abs(c_est - c_prev) < ALS_TOL and abs(k_est - k_prev) < ALS_TOL:
            break
    model = 0.5 * c_est * ((1.0 + k_est) + (1.0 - k_est) * cos2)
    ss_res = float(np.sum((g - model) ** 2))
    ss_tot = float(np.sum((g - g.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return c_est, k_est, r2


def calibrate(blackbody_shots, polarized_shots=None, assumed_k=1.0):
    """Full calibration; uses the polarized-source path when shots allow it.

    Without polarized shots the composite gain is converted to c using
    assumed_k.
    """
    gain_fit = calibrate_gain(blackbody_shots)
    if polarized_shots:
        c, k, r2 = calibrate_response(polarized_shots)
        return CalibrationResult(c=c, k=k, r2=min(r2, gain_fit.r2),
                                 method="polarized-source")
    return CalibrationResult(c=gain_fit.gain(assumed_k), k=assumed_k,
                             r2=gain_fit.r2, method="composite")
