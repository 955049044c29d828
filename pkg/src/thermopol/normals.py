"""Model-based surface-normal estimation from a reconstructed Stokes map.

Zenith comes from inverting the monotone branch of the zenith-DoLP curve;
azimuth comes from the AoLP with the pi ambiguity resolved by propagating
inward from the object boundary, where normals are assumed to point outward.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .polarization import dolp_of_zenith, stokes_polarization
from .simulator import view_frames

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1),
              (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass
class EstimationParams:
    curve: "DolpCurve"  # noqa: F821 - polarization.DolpCurve
    mode: str = "emission-dominant"  # | "reflection-dominant"
    dolp_floor: float = 0.005

    def __post_init__(self):
        if self.mode not in ("emission-dominant", "reflection-dominant"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.curve.degenerate:
            raise ValueError("degenerate DoLP curve (ratio=1) carries no shape cue")
        if not 0.0 <= self.dolp_floor < self.curve.rho_peak:
            raise ValueError("dolp_floor must lie in [0, rho_peak)")


@dataclass
class NormalMap:
    normals: np.ndarray      # (H, W, 3) unit vectors on mask
    mask: np.ndarray
    space: str               # "view" | "camera"
    confidence: np.ndarray | None = None


def invert_zenith(rho, curve, tol=1e-6):
    """Zenith angle whose DoLP matches rho on the monotone sub-peak branch.

    DoLP above the peak clamps to theta_peak; resolved by bisection against
    the closed-form curve. Vectorized over rho.
    """
    if curve.degenerate:
        raise ValueError("degenerate DoLP curve (ratio=1) cannot be inverted")
    rho = np.asarray(rho, dtype=float)
    target = np.minimum(rho, curve.rho_peak)
    lo = np.zeros_like(target)
    hi = np.full_like(target, curve.theta_peak)
    n_iter = int(np.ceil(np.log2(curve.theta_peak / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = dolp_of_zenith(mid, curve.eta, curve.ratio) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    theta = 0.5 * (lo + hi)
    theta = np.where(rho >= curve.rho_peak, curve.theta_peak, theta)
    return theta if theta.ndim else float(theta)


def azimuth_candidates(aolp, mode="emission-dominant"):
    """The two azimuth hypotheses implied by an AoLP value, mod 2 pi.

    Emission-dominant surfaces have azimuth equal to the AoLP; cooled
    (reflection-dominant) surfaces are shifted by pi/2.
    """
    aolp = np.asarray(aolp, dtype=float)
    base = aolp if mode == "emission-dominant" else aolp + np.pi / 2
    a = base % (2 * np.pi)
    b = (base + np.pi) % (2 * np.pi)
    return a, b


def _circ_diff(a, b):
    """Absolute angular difference mod 2 pi, in [0, pi]."""
    d = np.abs(a - b) % (2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def _outward_directions(mask):
    """Per-pixel outward silhouette direction in the azimuth frame.

    Derived from the gradient of the inside-distance transform; x follows
    image columns, y points up (negated rows) to match the AoLP frame.
    """
    # pad so the image border counts as background even for full-frame masks
    padded = np.pad(mask, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    smooth = ndimage.gaussian_filter(dist, 1.0)
    gy, gx = np.gradient(smooth)  # gradient points inward
    out_x = -gx
    out_y = gy  # image rows grow downward; azimuth frame y is up
    angle = np.arctan2(out_y, out_x) % (2 * np.pi)
    return dist, angle


def resolve_azimuth(aolp, dolp, mask, params):
    """Disambiguate per-pixel azimuth by boundary-inward propagation.

    Boundary pixels take the candidate nearest the outward silhouette normal;
    interior pixels are visited by increasing distance from the boundary and
    take the candidate minimizing the DoLP-weighted mean absolute angular
    deviation from already-resolved 8-neighbors. Pixels whose DoLP is below
    the floor inherit the neighborhood-average azimuth and are flagged
    low-confidence. Returns (azimuth, confident) arrays.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    h, w = mask.shape
    cand_a, cand_b = azimuth_candidates(aolp, params.mode)
    dist, outward = _outward_directions(mask)
    floor = params.dolp_floor

    azimuth = np.zeros((h, w))
    resolved = np.zeros((h, w), dtype=bool)
    confident = np.asarray(dolp) >= floor

    ii, jj = np.nonzero(mask)
    order = np.argsort(dist[ii, jj], kind="stable")
    for idx in order:
        i, j = ii[idx], jj[idx]
        neigh_az = []
        neigh_w = []
        for di, dj in _NEIGHBORS:
            ni, nj = i + di, j + dj
            if 0 <= ni < h and 0 <= nj < w and resolved[ni, nj]:
                neigh_az.append(azimuth[ni, nj])
                neigh_w.append(dolp[ni, nj] if dolp[ni, nj] >= floor else 0.0)
        if neigh_az:
            neigh_az = np.array(neigh_az)
            neigh_w = np.array(neigh_w)
            informative = neigh_w.sum() > 0
            if not informative:
                neigh_w = np.ones_like(neigh_w)
            neigh_w = neigh_w / neigh_w.sum()
            if confident[i, j] and not informative:
                # neighbors carry no signal: fall back to the outward rule
                pick_a = (_circ_diff(cand_a[i, j], outward[i, j])
                          <= _circ_diff(cand_b[i, j], outward[i, j]))
                azimuth[i, j] = cand_a[i, j] if pick_a else cand_b[i, j]
            elif confident[i, j]:
                score_a = float(neigh_w @ _circ_diff(cand_a[i, j], neigh_az))
                score_b = float(neigh_w @ _circ_diff(cand_b[i, j], neigh_az))
                if abs(score_a - score_b) < 1e-12:
                    # tie: prefer the candidate nearer the outward direction
                    pick_a = (_circ_diff(cand_a[i, j], outward[i, j])
                              <= _circ_diff(cand_b[i, j], outward[i, j]))
                else:
                    pick_a = score_a < score_b
                azimuth[i, j] = cand_a[i, j] if pick_a else cand_b[i, j]
            else:
                s = np.sin(neigh_az) @ neigh_w
                c = np.cos(neigh_az) @ neigh_w
                azimuth[i, j] = np.arctan2(s, c) % (2 * np.pi)
        else:
            # boundary seed (or isolated pixel): outward candidate
            pick_a = (_circ_diff(cand_a[i, j], outward[i, j])
                      <= _circ_diff(cand_b[i, j], outward[i, j]))
            azimuth[i, j] = cand_a[i, j] if pick_a else cand_b[i, j]
        resolved[i, j] = True
    return azimuth, confident & mask


def estimate_normals(stokes_map, params, proj):
    """Full model-based normal estimation from a reconstructed Stokes map.

    Normals are built in view-vector space (z along the view vector) and then
    rotated into camera space with the per-pixel projection frame; for an
    orthographic projection the two spaces coincide.
    """
    s = np.asarray(stokes_map.stokes, dtype=float)
    mask = np.asarray(stokes_map.mask, dtype=bool)
    state = stokes_polarization(s)
    dolp = np.where(mask, state.dolp, 0.0)
    theta = invert_zenith(dolp, params.curve)
    azimuth, confident = resolve_azimuth(state.aolp, dolp, mask, params)

    sin_t = np.sin(theta)
    n_view = np.stack([sin_t * np.cos(azimuth),
                       sin_t * np.sin(azimuth),
                       np.cos(theta)], axis=-1)

    h, w = mask.shape
    fx, fy, fz = view_frames(proj, w, h)
    n_cam = (n_view[..., 0:1] * fx + n_view[..., 1:2] * fy
             + n_view[..., 2:3] * fz)
    n_cam = np.where(mask[..., None], n_cam, 0.0)
    return NormalMap(normals=n_cam, mask=mask, space="camera",
                     confidence=confident.astype(float))
