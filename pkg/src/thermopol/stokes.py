"""Per-pixel Stokes recovery from difference images against a reference blackbody."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .calibration import blackbody_stokes

COND_WARN_THRESHOLD = 1e6
_RANK_TOL = 1e-10


@dataclass
class CaptureSession:
    """Difference images of the scene against a reference blackbody.

    angles[j] is the polarizer angle of diffs[j]; diffs has shape (N, H, W).
    """

    angles: np.ndarray
    diffs: np.ndarray
    tau_ref: float
    cam: "CameraModel"  # noqa: F821 - imaging.CameraModel
    mask: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.diffs = np.asarray(self.diffs, dtype=float)
        if self.diffs.ndim != 3 or self.diffs.shape[0] != len(self.angles):
            raise ValueError("diffs must be (N, H, W) matching the angle list")
        if self.mask.shape != self.diffs.shape[1:]:
            raise ValueError("mask dimensions must match the images")
        if len(_distinct_mod_pi(self.angles)) < 3:
            raise ValueError("need at least 3 distinct polarizer angles mod pi")


@dataclass
class StokesMap:
    """Per-pixel linear Stokes vectors, shape (H, W, 3), with validity mask."""

    stokes: np.ndarray
    mask: np.ndarray
    condition_number: float = field(default=float("nan"))


def _distinct_mod_pi(angles, tol=1e-9):
    reduced = np.sort(np.asarray(angles, dtype=float) % np.pi)
    if len(reduced) == 0:
        return []
    keep = [reduced[0]]
    for a in reduced[1:]:
        if a - keep[-1] > tol:
            keep.append(a)
    # angles just below pi wrap onto the first one
    if len(keep) > 1 and (np.pi - keep[-1]) + keep[0] <= tol:
        keep.pop()
    return keep


def design_matrix(angles, cam):
    """Stacked rows c^T M_cam M_pol(psi_j), one per polarizer angle.

    Raises on rank deficiency, naming the offending angle set.
    """
    angles = np.asarray(angles, dtype=float)
    if len(angles) < 3:
        raise ValueError(f"need at least 3 polarizer angles, got {len(angles)}")
    K = np.stack([cam.response_row(psi) for psi in angles])
    if np.linalg.matrix_rank(K, tol=_RANK_TOL * max(1.0, cam.c)) < 3:
        deg = np.degrees(angles).round(3).tolist()
        raise ValueError(f"rank-deficient polarizer angle set (degrees): {deg}")
    return K


def reconstruct_stokes(session):
    """Least-squares Stokes map: s = (K^T K)^-1 K^T I + s_b(tau_ref) per pixel.

    Raw estimates are preserved even where noise makes them unphysical;
    realizability clipping belongs to the normal-estimation boundary.
    """
    K = design_matrix(session.angles, session.cam)
    ktk = K.T @ K
    cond = float(np.linalg.cond(ktk))
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(
            f"ill-conditioned design matrix (cond {cond:.3g}); "
            "reconstruction may amplify noise", stacklevel=2)
    n, h, w = session.diffs.shape
    stacked = session.diffs.reshape(n, h * w)
    sol = np.linalg.solve(ktk, K.T @ stacked)  # (3, P)
    sol = sol.T.reshape(h, w, 3) + blackbody_stokes(session.tau_ref)
    return StokesMap(stokes=sol, mask=session.mask.copy(), condition_number=cond)
