import numpy as np
import pytest

import thermopol as tp


def make_icosphere(subdivisions=3):
    """Unit icosphere vertices/faces, refined by edge-midpoint subdivision."""
    t = (1 + 5**0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces)


def write_icosphere_obj(path, subdivisions=3, with_normals=False):
    v, f = make_icosphere(subdivisions)
    with open(path, "w") as fh:
        for p in v:
            fh.write(f"v {p[0]:.9f} {p[1]:.9f} {p[2]:.9f}\n")
        if with_normals:
            for p in v:
                fh.write(f"vn {p[0]:.9f} {p[1]:.9f} {p[2]:.9f}\n")
            for a, b, c in f + 1:
                fh.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
        else:
            for a, b, c in f + 1:
                fh.write(f"f {a} {b} {c}\n")
    return path


def sphere_scene(ratio=0.7, eta=1.8, resolution=128, radius=3.0):
    env = tp.MaterialEnv.from_ratio(eta, ratio)
    scene = tp.SceneSpec(
        geometry=tp.SphereGeometry(center=[0.0, 0.0, 10.0], radius=radius),
        material=env, resolution=(resolution, resolution))
    proj = tp.ProjectionModel(kind="orthographic",
                              pixel_size=2.2 * radius / resolution)
    return scene, proj


def blackbody_shots(cam, angles_deg=(0, 30, 60, 90, 120, 150),
                    with_noise=False, seed=0, shape=(16, 16)):
    """Synthetic blackbody-pair difference shots through the forward model."""
    rng = np.random.default_rng(seed)
    shots = []
    pairs = [(296.15, 308.15), (296.15, 323.15),
             (296.15, 338.15), (296.15, 353.15)]
    for psi in np.radians(angles_deg):
        for ta, tb in pairs:
            sa = np.broadcast_to(tp.blackbody_stokes(ta), shape + (3,))
            sb = np.broadcast_to(tp.blackbody_stokes(tb), shape + (3,))
            ia = tp.simulate_raw(sa, psi, cam, with_noise, int(rng.integers(1 << 31)))
            ib = tp.simulate_raw(sb, psi, cam, with_noise, int(rng.integers(1 << 31)))
            shots.append(tp.CalibrationShot(psi=psi, tau_alpha=ta, tau_beta=tb,
                                            diff=ib - ia))
    return shots


def polarized_shots(cam, angles_deg=(0, 30, 60, 90, 120, 150),
                    with_noise=False, seed=0, shape=(16, 16)):
    """Fully polarized source with AoLP tracking the polarizer angle."""
    rng = np.random.default_rng(seed)
    shots = []
    for psi in np.radians(angles_deg):
        axis = np.array([1.0, np.cos(2 * psi), np.sin(2 * psi)])
        for s0a, s0b in [(100.0, 300.0), (100.0, 500.0)]:
            ia = tp.simulate_raw(np.broadcast_to(s0a * axis, shape + (3,)),
                                 psi, cam, with_noise, int(rng.integers(1 << 31)))
            ib = tp.simulate_raw(np.broadcast_to(s0b * axis, shape + (3,)),
                                 psi, cam, with_noise, int(rng.integers(1 << 31)))
            shots.append(tp.PolarizedShot(psi=psi, delta_s0=s0b - s0a,
                                          diff=ib - ia))
    return shots


@pytest.fixture(scope="session")
def sphere_render():
    """Noiseless 128x128 sphere session shared across tests."""
    scene, proj = sphere_scene()
    cam = tp.CameraModel(c=1.7, k=0.95, offset_base=12.0, offset_pol=3.0,
                         offset_phase=0.4)
    result = tp.render_session(scene, proj, cam, np.radians([0, 45, 90, 135]),
                               tau_ref=303.15, seed=1)
    return scene, proj, cam, result
