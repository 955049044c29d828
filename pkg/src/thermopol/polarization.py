"""Closed-form polarization physics of combined thermal emission and reflection.

All angles are radians; degrees appear only at I/O boundaries. Functions are
vectorized over numpy arrays unless noted.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

# Stefan-Boltzmann constant, W m^-2 K^-4
STEFAN_BOLTZMANN = 5.670374419e-8


@dataclass(frozen=True)
class MaterialEnv:
    """Refractive index plus object/environment temperatures (kelvin)."""

    eta: float
    tau_obj: float
    tau_env: float
    emissivity: float = 1.0

    def __post_init__(self):
        if self.eta <= 1.0:
            raise ValueError(f"refractive index must exceed 1, got {self.eta}")
        if self.tau_obj < 0 or self.tau_env < 0:
            raise ValueError("temperatures must be non-negative kelvin")
        if not 0.0 < self.emissivity <= 1.0:
            raise ValueError(f"emissivity must lie in (0, 1], got {self.emissivity}")

    @property
    def l_emit(self):
        """Internal (emitted) source radiance, before Fresnel transmission."""
        return self.emissivity * blackbody_radiance(self.tau_obj)

    @property
    def l_refl(self):
        """Environment radiance incident from outside."""
        return blackbody_radiance(self.tau_env)

    @property
    def ratio(self):
        """Reflected-to-emitted radiance ratio L_R / L_E."""
        return self.l_refl / self.l_emit

    @classmethod
    def from_ratio(cls, eta, ratio, tau_env=296.15):
        """Build an environment with an exact L_R/L_E ratio at a given tau_env."""
        if ratio <= 0:
            raise ValueError("ratio must be positive")
        tau_obj = tau_env / ratio ** 0.25
        return cls(eta=eta, tau_obj=tau_obj, tau_env=tau_env)


@dataclass(frozen=True)
class FresnelPair:
    """Fresnel coefficient for the p- and s-polarization components."""

    p: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class RadiancePair:
    """Radiance of the p- and s-polarization components."""

    p: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class PolarizationState:
    """Degree and angle of linear polarization; aolp only meaningful where valid."""

    dolp: np.ndarray
    aolp: np.ndarray
    valid: np.ndarray


def _check_angle(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta >= np.pi / 2):
        raise ValueError("emergent angle must lie in [0, pi/2)")
    return theta


def _check_eta(eta):
    if np.any(np.asarray(eta) <= 1.0):
        raise ValueError("refractive index must exceed 1")
    return eta


def snell_refract(theta, eta):
    """Refraction angle inside the medium for an emergent angle theta in air."""
    theta = _check_angle(theta)
    _check_eta(eta)
    return np.arcsin(np.sin(theta) / eta)


def fresnel_reflectance(theta, eta):
    """Power reflectances (R_p, R_s) of the air-side ray at emergent angle theta.

    Uses the amplitude-coefficient form, which has no 0/0 at normal incidence
    and vanishes identically for R_p at the Brewster angle atan(eta).
    """
    theta = _check_angle(theta)
    _check_eta(eta)
    cos_i = np.cos(theta)
    cos_t = np.cos(snell_refract(theta, eta))
    r_p = (eta * cos_i - cos_t) / (eta * cos_i + cos_t)
    r_s = (cos_i - eta * cos_t) / (cos_i + eta * cos_t)
    return FresnelPair(p=r_p**2, s=r_s**2)


def fresnel_transmittance(theta, eta):
    """Power transmittances (T_p, T_s); complements of the reflectances."""
    refl = fresnel_reflectance(theta, eta)
    return FresnelPair(p=1.0 - refl.p, s=1.0 - refl.s)


def blackbody_radiance(tau):
    """Stefan-Boltzmann radiance sigma * tau^4 of an ideal blackbody."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("temperature must be non-negative kelvin")
    out = STEFAN_BOLTZMANN * tau**4
    return out if out.ndim else float(out)


def combined_radiance(theta, env):
    """p/s radiances of the combined emitted + reflected ray at angle theta."""
    refl = fresnel_reflectance(theta, env.eta)
    l_e = env.l_emit
    l_r = env.l_refl
    return RadiancePair(
        p=0.5 * (refl.p * l_r + (1.0 - refl.p) * l_e),
        s=0.5 * (refl.s * l_r + (1.0 - refl.s) * l_e),
    )


def polarization_state(rad, phi):
    """DoLP and AoLP of a p/s radiance pair with azimuth phi.

    The AoLP equals phi mod pi when the p component dominates and is rotated
    by pi/2 otherwise; it is undefined (valid=False) where the components are
    equal.
    """
    l_p = np.asarray(rad.p, dtype=float)
    l_s = np.asarray(rad.s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    total = l_p + l_s
    if np.any(total <= 0):
        raise ValueError("total radiance must be positive")
    dolp = np.abs(l_p - l_s) / total
    valid = l_p != l_s
    aolp = np.where(l_p >= l_s, phi, phi + np.pi / 2) % np.pi
    return PolarizationState(dolp=dolp, aolp=aolp, valid=valid)


def surface_stokes(theta, phi, env):
    """Linear Stokes vector [s0, s1, s2] of the surface ray; shape (..., 3)."""
    rad = combined_radiance(theta, env)
    state = polarization_state(rad, phi)
    s0 = np.asarray(rad.p + rad.s, dtype=float)
    s1 = s0 * state.dolp * np.cos(2 * state.aolp)
    s2 = s0 * state.dolp * np.sin(2 * state.aolp)
    return np.stack(np.broadcast_arrays(s0, s1, s2), axis=-1)


def stokes_polarization(stokes):
    """DoLP/AoLP from a (..., 3) linear Stokes array."""
    s = np.asarray(stokes, dtype=float)
    s0 = s[..., 0]
    amp = np.hypot(s[..., 1], s[..., 2])
    with np.errstate(invalid="ignore", divide="ignore"):
        dolp = np.where(s0 > 0, amp / np.where(s0 > 0, s0, 1.0), 0.0)
    aolp = (0.5 * np.arctan2(s[..., 2], s[..., 1])) % np.pi
    valid = amp > 0
    return PolarizationState(dolp=dolp, aolp=aolp, valid=valid)


def dolp_of_zenith(theta, eta, ratio):
    """Closed-form DoLP of the combined ray versus zenith angle.

    ratio is L_R/L_E; ratio=1 cancels the emitted and reflected polarization
    exactly, giving zero DoLP at every angle.
    """
    refl = fresnel_reflectance(theta, eta)
    num = np.abs((refl.p - refl.s) * (ratio - 1.0))
    den = (refl.p + refl.s) * (ratio - 1.0) + 2.0
    return num / den


@dataclass(frozen=True)
class DolpCurve:
    """Sampled zenith-to-DoLP relationship with its peak.

    The branch below theta_peak is strictly monotone and is the one used for
    zenith inversion. degenerate marks the ratio=1 case where the curve is
    identically zero and the peak is undefined.
    """

    eta: float
    ratio: float
    thetas: np.ndarray = field(repr=False)
    rhos: np.ndarray = field(repr=False)
    theta_peak: float
    rho_peak: float
    degenerate: bool = False

    def __call__(self, theta):
        return dolp_of_zenith(theta, self.eta, self.ratio)


_THETA_EPS = 1e-9


def build_dolp_curve(eta, ratio, n_samples=4096):
    """Sample the DoLP curve on [0, pi/2) and locate its peak to 1e-6 rad."""
    _check_eta(eta)
    if ratio < 0:
        raise ValueError("ratio must be non-negative")
    if n_samples < 256:
        raise ValueError("n_samples must be at least 256")
    thetas = np.linspace(0.0, np.pi / 2 - _THETA_EPS, n_samples)
    rhos = dolp_of_zenith(thetas, eta, ratio)
    if ratio == 1.0:
        return DolpCurve(eta=eta, ratio=ratio, thetas=thetas, rhos=rhos,
                         theta_peak=float("nan"), rho_peak=0.0, degenerate=True)
    i = int(np.argmax(rhos))
    if i == n_samples - 1:
        # monotone to the grazing limit (e.g. pure emission): peak at the edge
        theta_peak = float(thetas[-1])
    else:
        lo = thetas[max(i - 1, 0)]
        hi = thetas[min(i + 1, n_samples - 1)]
        res = minimize_scalar(lambda t: -dolp_of_zenith(t, eta, ratio),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-6})
        theta_peak = float(res.x)
    rho_peak = float(dolp_of_zenith(theta_peak, eta, ratio))
    return DolpCurve(eta=eta, ratio=ratio, thetas=thetas, rhos=rhos,
                     theta_peak=theta_peak, rho_peak=rho_peak)
