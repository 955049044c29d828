"""Forward sensor model: polarizer/camera Mueller matrices, offsets, raw pixels.

Raw pixel values are digital numbers kept in float; 12-bit quantization is an
optional camera flag so round-trip tests stay exact by default.
"""

from dataclasses import dataclass

import numpy as np


def polarizer_mueller(psi):
    """3x3 Mueller matrix of an ideal linear polarizer at angle psi."""
    c = np.cos(2.0 * psi)
    s = np.sin(2.0 * psi)
    return 0.5 * np.array([
        [1.0, c, s],
        [c, c * c, s * c],
        [s, s * c, s * s],
    ])


def camera_mueller(k):
    """3x3 Mueller matrix of the sensor's partial-polarizer response.

    k is the gain factor for light polarized at 90 degrees relative to the
    gain-1 axis at 0 degrees.
    """
    if not 0.0 < k <= 1.0:
        raise ValueError(f"polarimetric response factor must lie in (0, 1], got {k}")
    return 0.5 * np.array([
        [1.0 + k, 1.0 - k, 0.0],
        [1.0 - k, 1.0 + k, 0.0],
        [0.0, 0.0, 2.0 * np.sqrt(k)],
    ])


@dataclass(frozen=True)
class CameraModel:
    """Gain, polarimetric response and offset/noise parameters of the imager.

    The offset I_off(psi) = offset_base + offset_pol * cos(2 psi + offset_phase)
    lumps the stray-light and thermal terms; only its cancellation under
    difference imaging matters downstream, never its decomposition.
    """

    c: float = 1.0
    k: float = 1.0
    offset_base: float = 0.0
    offset_pol: float = 0.0
    offset_phase: float = 0.0
    noise_sigma: float = 0.0
    quantize_12bit: bool = False

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"gain must be positive, got {self.c}")
        if not 0.0 < self.k <= 1.0:
            raise ValueError(f"response factor must lie in (0, 1], got {self.k}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def offset(self, psi):
        return self.offset_base + self.offset_pol * np.cos(2.0 * psi + self.offset_phase)

    def response_row(self, psi):
        """Row vector c^T M_cam M_pol(psi) mapping a Stokes vector to a pixel."""
        c_vec = np.array([self.c, 0.0, 0.0])
        return c_vec @ camera_mueller(self.k) @ polarizer_mueller(psi)

    def to_dict(self):
        return {
            "c": self.c, "k": self.k,
            "offset_base": self.offset_base, "offset_pol": self.offset_pol,
            "offset_phase": self.offset_phase, "noise_sigma": self.noise_sigma,
            "quantize_12bit": self.quantize_12bit,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class RawImage:
    """A single capture at polarizer angle psi, pixels in digital numbers."""

    psi: float
    pixels: np.ndarray
    timestamp_index: int = 0

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


def simulate_raw(stokes, psi, cam, with_noise=False, rng_seed=0):
    """Raw digital-number image for a (..., 3) Stokes map at polarizer angle psi.

    Deterministic given rng_seed; noise is additive Gaussian per pixel.
    """
    stokes = np.asarray(stokes, dtype=float)
    row = cam.response_row(psi)
    img = stokes @ row + cam.offset(psi)
    if with_noise and cam.noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        img = img + rng.normal(0.0, cam.noise_sigma, size=img.shape)
    if cam.quantize_12bit:
        img = np.clip(np.rint(img), 0, 4095)
    return img


def polarizer_image(stokes_map, psi):
    """Ideal radiance image behind a polarizer at psi: (s0 + s1 c + s2 s)/2."""
    s = np.asarray(stokes_map, dtype=float)
    return 0.5 * (s[..., 0] + s[..., 1] * np.cos(2 * psi) + s[..., 2] * np.sin(2 * psi))


def difference_image(img_b, img_a):
    """Pixelwise img_b - img_a; cancels the shared offset component.

    Both captures must share the polarizer angle and dimensions; offset
    constancy between the two captures is a contract on the caller.
    """
    if img_b.pixels.shape != img_a.pixels.shape:
        raise ValueError(
            f"image dimensions differ: {img_b.pixels.shape} vs {img_a.pixels.shape}")
    if not np.isclose((img_b.psi - img_a.psi) % np.pi, 0.0, atol=1e-12) \
            and not np.isclose((img_b.psi - img_a.psi) % np.pi, np.pi, atol=1e-12):
        raise ValueError(
            f"polarizer angles differ: {img_b.psi} vs {img_a.psi}")
    return img_b.pixels.astype(np.float64) - img_a.pixels.astype(np.float64)
