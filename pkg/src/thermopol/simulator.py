"""Single-bounce ray-cast renderer for desk-scale polarimetric sessions.

Coordinate conventions: the camera sits at the origin looking down +z with
image x to the right and image y down (array row order). Output normal maps
use the familiar normal-map frame (x right, y up, z toward the camera), so an
orthographic view direction maps to [0, 0, 1].
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calibration import blackbody_stokes
from .imaging import simulate_raw
from .polarization import MaterialEnv, surface_stokes


def worker_count():
    """Worker cap from THERMOPOL_THREADS (0 or unset = auto)."""
    raw = os.environ.get("THERMOPOL_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else min(os.cpu_count() or 1, 8)


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3)
    normals: np.ndarray   # (V, 3) unit vertex normals
    faces: np.ndarray     # (F, 3) int indices


class MeshParseError(ValueError):
    pass


def load_mesh(path):
    """Parse a Wavefront OBJ subset (v, vn, f); polygons are fan-triangulated.

    Vertex normals are computed by area-weighted face averaging when the file
    carries none.
    """
    vertices = []
    normals = []
    faces = []
    face_normal_idx = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            tag = tokens[0]
            try:
                if tag == "v":
                    vertices.append([float(t) for t in tokens[1:4]])
                elif tag == "vn":
                    normals.append([float(t) for t in tokens[1:4]])
                elif tag == "f":
                    idx = []
                    nidx = []
                    for t in tokens[1:]:
                        parts = t.split("/")
                        vi = int(parts[0])
                        idx.append(vi - 1 if vi > 0 else len(vertices) + vi)
                        if len(parts) == 3 and parts[2]:
                            ni = int(parts[2])
                            nidx.append(ni - 1 if ni > 0 else len(normals) + ni)
                    if len(idx) < 3:
                        raise ValueError("face with fewer than 3 vertices")
                    for a in range(1, len(idx) - 1):
                        faces.append([idx[0], idx[a], idx[a + 1]])
                        if len(nidx) == len(idx):
                            face_normal_idx.append([nidx[0], nidx[a], nidx[a + 1]])
            except (ValueError, IndexError) as e:
                raise MeshParseError(f"{path}:{lineno}: cannot parse {line!r}: {e}") from e
    if not faces:
        raise MeshParseError(f"{path}: no faces found")
    v = np.asarray(vertices, dtype=float)
    fcs = np.asarray(faces, dtype=int)
    if np.any(fcs < 0) or np.any(fcs >= len(v)):
        raise MeshParseError(f"{path}: face index out of range")
    if normals and len(face_normal_idx) == len(faces):
        vn_src = np.asarray(normals, dtype=float)
        vn = np.zeros_like(v)
        counts = np.zeros(len(v))
        fni = np.asarray(face_normal_idx, dtype=int)
        for corner in range(3):
            np.add.at(vn, fcs[:, corner], vn_src[fni[:, corner]])
            np.add.at(counts, fcs[:, corner], 1)
        vn = vn / np.maximum(counts, 1)[:, None]
    else:
        e1 = v[fcs[:, 1]] - v[fcs[:, 0]]
        e2 = v[fcs[:, 2]] - v[fcs[:, 0]]
        fn = np.cross(e1, e2)  # magnitude = 2 * area, giving area weighting
        vn = np.zeros_like(v)
        for corner in range(3):
            np.add.at(vn, fcs[:, corner], fn)
    norm = np.linalg.norm(vn, axis=1, keepdims=True)
    vn = vn / np.maximum(norm, 1e-300)
    return Mesh(vertices=v, normals=vn, faces=fcs)


def height_field_mesh(heights, spacing=1.0, origin=(0.0, 0.0), depth=10.0):
    """Triangulate a height grid into a mesh facing the camera.

    heights[i, j] is the elevation toward the camera at grid point (row i,
    col j); the surface sits at z = depth - heights. Normals use central
    differences with one-sided stencils at the borders.
    """
    h = np.asarray(heights, dtype=float)
    if h.ndim != 2 or not np.all(np.isfinite(h)):
        raise ValueError("height field must be a complete finite 2-D grid")
    rows, cols = h.shape
    xs = origin[0] + spacing * np.arange(cols)
    ys = origin[1] + spacing * np.arange(rows)
    xx, yy = np.meshgrid(xs, ys)
    zz = depth - h
    v = np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)

    dz_dx = np.gradient(zz, spacing, axis=1)
    dz_dy = np.gradient(zz, spacing, axis=0)
    # surface z(x, y): normal ~ (-dz/dx, -dz/dy, 1), flipped to face the camera
    n = np.stack([dz_dx.ravel(), dz_dy.ravel(), -np.ones(rows * cols)], axis=1)
    n /= np.linalg.norm(n, axis=1, keepdims=True)

    idx = np.arange(rows * cols).reshape(rows, cols)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, :-1].ravel()
    d = idx[1:, 1:].ravel()
    faces = np.concatenate([np.stack([a, b, c], axis=1),
                            np.stack([b, d, c], axis=1)])
    return Mesh(vertices=v, normals=n, faces=faces)


@dataclass(frozen=True)
class SphereGeometry:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class ProjectionModel:
    """Pixel-to-ray mapping; orthographic or pinhole."""

    kind: str = "orthographic"
    focal_length: float | None = None  # pixels, pinhole only
    principal_point: tuple | None = None  # defaults to the image center
    pixel_size: float = 1.0  # world units per pixel, orthographic only

    def __post_init__(self):
        if self.kind not in ("orthographic", "pinhole"):
            raise ValueError(f"unknown projection kind {self.kind!r}")
        if self.kind == "pinhole" and (self.focal_length is None or self.focal_length <= 0):
            raise ValueError("pinhole projection requires a positive focal length")

    def rays(self, width, height):
        """Per-pixel ray origins and unit directions, each (H, W, 3)."""
        cx, cy = self.principal_point or ((width - 1) / 2.0, (height - 1) / 2.0)
        jj, ii = np.meshgrid(np.arange(width, dtype=float),
                             np.arange(height, dtype=float))
        if self.kind == "orthographic":
            origins = np.stack([(jj - cx) * self.pixel_size,
                                (ii - cy) * self.pixel_size,
                                np.zeros_like(jj)], axis=-1)
            dirs = np.broadcast_to(np.array([0.0, 0.0, 1.0]), origins.shape).copy()
        else:
            origins = np.zeros((height, width, 3))
            dirs = np.stack([(jj - cx) / self.focal_length,
                             (ii - cy) / self.focal_length,
                             np.ones_like(jj)], axis=-1)
            dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
        return origins, dirs

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "pinhole":
            d["focal_length"] = self.focal_length
        else:
            d["pixel_size"] = self.pixel_size
        if self.principal_point is not None:
            d["principal_point"] = list(self.principal_point)
        return d

    @classmethod
    def from_dict(cls, d):
        pp = d.get("principal_point")
        return cls(kind=d.get("kind", "orthographic"),
                   focal_length=d.get("focal_length"),
                   principal_point=tuple(pp) if pp else None,
                   pixel_size=d.get("pixel_size", 1.0))


@dataclass
class SceneSpec:
    geometry: object  # SphereGeometry | Mesh
    material: MaterialEnv
    resolution: tuple  # (width, height)
    pose: np.ndarray = field(default_factory=lambda: np.eye(4))

    def transformed_geometry(self):
        r = self.pose[:3, :3]
        t = self.pose[:3, 3]
        g = self.geometry
        if isinstance(g, SphereGeometry):
            return SphereGeometry(center=r @ g.center + t, radius=g.radius)
        return Mesh(vertices=g.vertices @ r.T + t,
                    normals=g.normals @ r.T, faces=g.faces)


@dataclass
class GroundTruth:
    """First-hit geometry per pixel: normals in normal-map camera frame."""

    normals: np.ndarray  # (H, W, 3)
    mask: np.ndarray     # (H, W) bool
    zenith: np.ndarray   # (H, W) radians, angle(normal, view vector)
    azimuth: np.ndarray  # (H, W) radians in [0, 2pi), image-plane orientation


# ---------------------------------------------------------------------------
# intersection


def _intersect_sphere(origins, dirs, sphere):
    oc = origins - sphere.center
    b = np.einsum("...i,...i->...", oc, dirs)
    cterm = np.einsum("...i,...i->...", oc, oc) - sphere.radius**2
    disc = b * b - cterm
    hit = disc >= 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t = -b - sq
    t2 = -b + sq
    t = np.where(t > 1e-9, t, t2)
    hit &= t > 1e-9
    points = origins + t[..., None] * dirs
    normals = (points - sphere.center) / sphere.radius
    return hit, t, normals


def _intersect_mesh(origins, dirs, mesh, chunk=2_000_000):
    """Brute-force Moller-Trumbore over all faces, vectorized per face batch."""
    shape = origins.shape[:-1]
    o = origins.reshape(-1, 3)
    d = dirs.reshape(-1, 3)
    n_rays = o.shape[0]
    t_best = np.full(n_rays, np.inf)
    normal_best = np.zeros((n_rays, 3))

    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    n0 = mesh.normals[mesh.faces[:, 0]]
    n1 = mesh.normals[mesh.faces[:, 1]]
    n2 = mesh.normals[mesh.faces[:, 2]]
    e1 = v1 - v0
    e2 = v2 - v0

    faces_per_batch = max(1, chunk // max(n_rays, 1))

    def run(ray_slice):
        lo, hi = ray_slice
        for f0 in range(0, len(v0), faces_per_batch):
            f1 = min(f0 + faces_per_batch, len(v0))
            _mt_batch(o[lo:hi], d[lo:hi], v0[f0:f1], e1[f0:f1], e2[f0:f1],
                      n0[f0:f1], n1[f0:f1], n2[f0:f1],
                      t_best[lo:hi], normal_best[lo:hi])

    workers = worker_count()
    if workers > 1 and n_rays > 4096:
        bounds = np.linspace(0, n_rays, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, zip(bounds[:-1], bounds[1:])))
    else:
        run((0, n_rays))

    hit = np.isfinite(t_best)
    norm = np.linalg.norm(normal_best, axis=1, keepdims=True)
    normal_best = normal_best / np.maximum(norm, 1e-300)
    return (hit.reshape(shape), t_best.reshape(shape),
            normal_best.reshape(shape + (3,)))


def _mt_batch(o, d, v0, e1, e2, n0, n1, n2, t_best, normal_best):
    # rays (R, 3) against faces (F, 3); broadcast to (R, F)
    p = np.cross(d[:, None, :], e2[None, :, :])
    det = np.einsum("fi,rfi->rf", e1, p)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = o[:, None, :] - v0[None, :, :]
    u = np.einsum("rfi,rfi->rf", s, p) * inv
    q = np.cross(s, e1[None, :, :])
    v = np.einsum("rfi,rfi->rf", d[:, None, :], q) * inv
    t = np.einsum("fi,rfi->rf", e2, q) * inv
    ok &= (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9) & (t > 1e-9)
    t = np.where(ok, t, np.inf)
    fi = np.argmin(t, axis=1)
    rows = np.arange(len(o))
    t_new = t[rows, fi]
    better = t_new < t_best
    if not np.any(better):
        return
    fi_b = fi[better]
    u_b = u[rows, fi][better]
    v_b = v[rows, fi][better]
    w_b = 1.0 - u_b - v_b
    n = (w_b[:, None] * n0[fi_b] + u_b[:, None] * n1[fi_b]
         + v_b[:, None] * n2[fi_b])
    t_best[better] = t_new[better]
    normal_best[better] = n


# ---------------------------------------------------------------------------
# rendering


def _to_map_frame(vec):
    """Camera-look coords (x right, y down, z forward) -> normal-map frame."""
    out = vec.copy()
    out[..., 1] *= -1
    out[..., 2] *= -1
    return out


def view_frames(proj, width, height):
    """Per-pixel view-vector frame (x', y', z') in the normal-map space.

    z' is the unit view vector (surface toward camera); orthographic cameras
    have the identity frame everywhere.
    """
    _, dirs = proj.rays(width, height)
    z = _to_map_frame(-dirs)  # view vector = -ray dir, in the map frame
    ex = np.zeros_like(z)
    ex[..., 0] = 1.0
    x = ex - z * z[..., :1]
    x = x / np.linalg.norm(x, axis=-1, keepdims=True)
    y = np.cross(z, x)
    return x, y, z


def render_ground_truth(scene, proj):
    """Ray-cast first-hit normals, zenith and image-plane azimuth per pixel."""
    width, height = scene.resolution
    origins, dirs = proj.rays(width, height)
    geom = scene.transformed_geometry()
    if isinstance(geom, SphereGeometry):
        hit, _, normals_look = _intersect_sphere(origins, dirs, geom)
    else:
        hit, _, normals_look = _intersect_mesh(origins, dirs, geom)

    # orient normals toward the camera and convert to the map frame
    facing = np.einsum("...i,...i->...", normals_look, dirs)
    normals_look = np.where(facing[..., None] > 0, -normals_look, normals_look)
    normals = _to_map_frame(normals_look)

    fx, fy, fz = view_frames(proj, width, height)
    cos_z = np.clip(np.einsum("...i,...i->...", normals, fz), -1.0, 1.0)
    zenith = np.arccos(cos_z)
    hit &= zenith < np.pi / 2  # discard grazing/back-facing hits
    azimuth = np.arctan2(np.einsum("...i,...i->...", normals, fy),
                         np.einsum("...i,...i->...", normals, fx)) % (2 * np.pi)
    zenith = np.where(hit, zenith, 0.0)
    azimuth = np.where(hit, azimuth, 0.0)
    normals = np.where(hit[..., None], normals, 0.0)
    return GroundTruth(normals=normals, mask=hit, zenith=zenith, azimuth=azimuth)


def scene_stokes_map(gt, material):
    """Per-pixel surface Stokes vectors; background sees the environment."""
    theta = np.clip(gt.zenith, 0.0, np.pi / 2 - 1e-9)
    stokes = surface_stokes(theta, gt.azimuth, material)
    background = blackbody_stokes(material.tau_env)
    return np.where(gt.mask[..., None], stokes, background)


@dataclass
class RenderResult:
    session: "CaptureSession"  # noqa: F821 - stokes.CaptureSession
    ground_truth: GroundTruth
    stokes: np.ndarray       # (H, W, 3) rendered scene Stokes map
    raw_scene: np.ndarray    # (N, H, W)
    raw_ref: np.ndarray      # (N, H, W)


def render_session(scene, proj, cam, angles, tau_ref, seed=0, with_noise=None):
    """Render a full capture session: scene and reference-blackbody raws plus diffs.

    RNG streams are derived per image from the seed, so rendering is
    deterministic and order-independent. with_noise defaults to whether the
    camera has a nonzero noise level.
    """
    from .stokes import CaptureSession

    angles = np.asarray(angles, dtype=float)
    if len(angles) < 3:
        raise ValueError("need at least 3 polarizer angles")
    if with_noise is None:
        with_noise = cam.noise_sigma > 0
    gt = render_ground_truth(scene, proj)
    stokes = scene_stokes_map(gt, scene.material)
    ref_stokes = np.broadcast_to(blackbody_stokes(tau_ref),
                                 stokes.shape)

    child_seeds = np.random.SeedSequence(seed).generate_state(2 * len(angles))
    raw_scene = []
    raw_ref = []
    diffs = []
    for j, psi in enumerate(angles):
        img_s = simulate_raw(stokes, psi, cam, with_noise=with_noise,
                             rng_seed=int(child_seeds[2 * j]))
        img_r = simulate_raw(ref_stokes, psi, cam, with_noise=with_noise,
                             rng_seed=int(child_seeds[2 * j + 1]))
        raw_scene.append(img_s)
        raw_ref.append(img_r)
        diffs.append(img_s - img_r)
    session = CaptureSession(angles=angles, diffs=np.stack(diffs),
                             tau_ref=tau_ref, cam=cam, mask=gt.mask.copy())
    return RenderResult(session=session, ground_truth=gt, stokes=stokes,
                        raw_scene=np.stack(raw_scene), raw_ref=np.stack(raw_ref))
