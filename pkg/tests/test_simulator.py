import numpy as np
import pytest

import thermopol as tp
from thermopol.simulator import MeshParseError, height_field_mesh

from conftest import sphere_scene, write_icosphere_obj


ENV = tp.MaterialEnv.from_ratio(1.8, 0.7)


class TestLoadMesh:
    def test_single_triangle(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        mesh = tp.load_mesh(path)
        assert len(mesh.faces) == 1
        assert len(mesh.vertices) == 3

    def test_quad_fan_triangulation(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = tp.load_mesh(path)
        assert len(mesh.faces) == 2

    def test_icosphere_normals_near_analytic(self, tmp_path):
        path = write_icosphere_obj(tmp_path / "ico.obj", subdivisions=5)
        mesh = tp.load_mesh(path)
        # unit sphere: exact normal at each vertex is the vertex itself
        err = np.linalg.norm(mesh.normals - mesh.vertices, axis=1)
        assert err.max() < 5e-3
        assert np.median(err) < 5e-4

    def test_explicit_normals_used(self, tmp_path):
        path = write_icosphere_obj(tmp_path / "ico_vn.obj", subdivisions=2,
                                   with_normals=True)
        mesh = tp.load_mesh(path)
        err = np.linalg.norm(mesh.normals - mesh.vertices, axis=1)
        assert err.max() < 1e-7

    def test_parse_error_names_line(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nf 1 2 oops\n")
        with pytest.raises(MeshParseError, match=":3"):
            tp.load_mesh(path)

    def test_empty_mesh_rejected(self, tmp_path):
        path = tmp_path / "empty.obj"
        path.write_text("v 0 0 0\n")
        with pytest.raises(MeshParseError):
            tp.load_mesh(path)


class TestHeightField:
    def test_incomplete_grid_rejected(self):
        h = np.zeros((4, 4))
        h[1, 2] = np.nan
        with pytest.raises(ValueError):
            height_field_mesh(h)

    def test_flat_field_zenith_zero(self):
        mesh = height_field_mesh(np.zeros((33, 33)), spacing=1.0,
                                 origin=(-16, -16), depth=10.0)
        scene = tp.SceneSpec(geometry=mesh, material=ENV, resolution=(32, 32))
        gt = tp.render_ground_truth(scene, tp.ProjectionModel(pixel_size=1.0))
        assert gt.mask.all()
        assert gt.zenith.max() < 1e-12
        assert np.allclose(gt.normals[gt.mask], [0, 0, 1])


class TestRenderGroundTruth:
    def test_sphere_zenith_profile(self):
        scene, proj = sphere_scene(resolution=129)
        gt = tp.render_ground_truth(scene, proj)
        assert gt.zenith[64, 64] < 0.02  # center pixel is the principal point
        limb = gt.zenith[gt.mask].max()
        assert limb > np.radians(85)

    def test_normals_unit_on_mask(self):
        scene, proj = sphere_scene(resolution=64)
        gt = tp.render_ground_truth(scene, proj)
        norms = np.linalg.norm(gt.normals[gt.mask], axis=-1)
        assert np.allclose(norms, 1.0, atol=1e-6)

    def test_mask_matches_analytic_silhouette(self):
        scene, proj = sphere_scene(resolution=64, radius=3.0)
        gt = tp.render_ground_truth(scene, proj)
        jj, ii = np.meshgrid(np.arange(64.0), np.arange(64.0))
        cx = cy = (64 - 1) / 2
        r_px = np.hypot((jj - cx), (ii - cy)) * proj.pixel_size
        inside = r_px < 3.0 - 2 * proj.pixel_size
        outside = r_px > 3.0 + 2 * proj.pixel_size
        assert gt.mask[inside].all()
        assert not gt.mask[outside].any()

    def test_pinhole_vs_orthographic_tilt(self):
        scene, _ = sphere_scene(resolution=65)
        ortho = tp.ProjectionModel(kind="orthographic", pixel_size=6.6 / 65)
        pin = tp.ProjectionModel(kind="pinhole", focal_length=200.0)
        g_o = tp.render_ground_truth(scene, ortho)
        g_p = tp.render_ground_truth(scene, pin)
        # at the principal point the view vectors coincide
        assert g_p.zenith[32, 32] == pytest.approx(g_o.zenith[32, 32], abs=1e-9)
    def test_pinhole_flat_plate_zenith_equals_ray_tilt(self):
        from thermopol.simulator import height_field_mesh

        n = 33
        mesh = height_field_mesh(np.zeros((n, n)), spacing=1.0,
                                 origin=(-(n - 1) / 2, -(n - 1) / 2), depth=20.0)
        env = tp.MaterialEnv.from_ratio(1.8, 0.7)
        scene = tp.SceneSpec(geometry=mesh, material=env, resolution=(n, n))
        pin = tp.ProjectionModel(kind="pinhole", focal_length=40.0)
        gt = tp.render_ground_truth(scene, pin)
        _, dirs = pin.rays(n, n)
        tilt = np.arccos(np.clip(dirs[..., 2], -1, 1))
        assert gt.mask.any()
        # a fronto-parallel plane: zenith is exactly the per-pixel ray tilt
        assert np.max(np.abs(gt.zenith - tilt)[gt.mask]) < 1e-9

    def test_mesh_sphere_matches_analytic(self, tmp_path):
        path = write_icosphere_obj(tmp_path / "ico.obj", subdivisions=3,
                                   with_normals=True)
        base = tp.load_mesh(path)
        mesh = tp.Mesh(vertices=base.vertices * 3.0 + np.array([0, 0, 10.0]),
                       normals=base.normals, faces=base.faces)
        proj = tp.ProjectionModel(pixel_size=6.6 / 48)
        scene_m = tp.SceneSpec(geometry=mesh, material=ENV, resolution=(48, 48))
        scene_a, _ = sphere_scene(resolution=48)
        g_m = tp.render_ground_truth(scene_m, proj)
        g_a = tp.render_ground_truth(scene_a, proj)
        both = g_m.mask & g_a.mask & (g_a.zenith < np.radians(70))
        assert both.sum() > 500
        dots = np.einsum("...i,...i->...", g_m.normals, g_a.normals)[both]
        assert np.degrees(np.arccos(np.clip(dots, -1, 1))).max() < 2.0


class TestRenderSession:
    def test_equal_temperature_cancellation(self):
        env = tp.MaterialEnv(eta=1.8, tau_obj=300.0, tau_env=300.0)
        scene, proj = sphere_scene(resolution=64)
        scene.material = env
        cam = tp.CameraModel(c=1.7, k=0.95)
        result = tp.render_session(scene, proj, cam, np.radians([0, 45, 90, 135]),
                                   tau_ref=300.0, seed=0)
        dolp = tp.stokes_polarization(result.stokes).dolp
        assert dolp[result.ground_truth.mask].max() < 1e-12

    def test_sphere_dolp_radial_profile(self, sphere_render):
        _, _, _, result = sphere_render
        gt = result.ground_truth
        dolp = tp.stokes_polarization(result.stokes).dolp
        curve = tp.build_dolp_curve(1.8, 0.7)
        # rises with zenith up to the peak, rolls off at the limb
        rising = gt.mask & (gt.zenith < curve.theta_peak - 0.05)
        order = np.argsort(gt.zenith[rising])
        profile = dolp[rising][order]
        assert profile[-1] > profile[0]
        limb = gt.mask & (gt.zenith > curve.theta_peak + 0.05)
        assert dolp[limb].max() < dolp[rising].max() + 1e-9
        assert dolp[limb].min() < curve.rho_peak

    def test_azimuth_equals_aolp_emission_dominant(self, sphere_render):
        _, _, _, result = sphere_render
        gt = result.ground_truth
        state = tp.stokes_polarization(result.stokes)
        sel = gt.mask & (state.dolp > 1e-6)
        d = np.abs(state.aolp - gt.azimuth % np.pi)[sel] % np.pi
        d = np.minimum(d, np.pi - d)
        assert d.max() < 1e-9

    def test_rotation_symmetry_of_aolp(self, sphere_render):
        # a centered sphere is rotation invariant: the AoLP map must commute
        # with quarter-turn rotation up to a pi/2 angular shift
        _, _, _, result = sphere_render
        state = tp.stokes_polarization(result.stokes)
        mask = result.ground_truth.mask
        rotated = np.rot90(state.aolp)
        mask_r = np.rot90(mask)
        both = mask & mask_r & np.rot90(tp.stokes_polarization(result.stokes).dolp > 1e-6) \
            & (state.dolp > 1e-6)
        d = np.abs(rotated - (state.aolp + np.pi / 2)) % np.pi
        d = np.minimum(d, np.pi - d)
        assert np.median(d[both]) < 1e-6

    def test_mask_correctness(self, sphere_render):
        scene, proj, _, result = sphere_render
        gt = result.ground_truth
        hit, _, _ = tp.simulator._intersect_sphere(
            *proj.rays(*scene.resolution), scene.geometry)
        # masked pixels are exactly the geometric hits (minus grazing rejects)
        assert np.all(gt.mask <= hit)
        assert (hit & ~gt.mask).sum() <= np.count_nonzero(hit) * 0.01

    def test_determinism(self):
        scene, proj = sphere_scene(resolution=32)
        cam = tp.CameraModel(c=1.7, k=0.95, noise_sigma=0.4)
        a = tp.render_session(scene, proj, cam, np.radians([0, 60, 120]),
                              tau_ref=300.0, seed=7)
        b = tp.render_session(scene, proj, cam, np.radians([0, 60, 120]),
                              tau_ref=300.0, seed=7)
        assert np.array_equal(a.raw_scene, b.raw_scene)
        assert np.array_equal(a.raw_ref, b.raw_ref)
        c = tp.render_session(scene, proj, cam, np.radians([0, 60, 120]),
                              tau_ref=300.0, seed=8)
        assert not np.array_equal(a.raw_scene, c.raw_scene)

    def test_background_carries_environment(self, sphere_render):
        _, _, _, result = sphere_render
        bg = ~result.ground_truth.mask
        expected = tp.blackbody_stokes(tp.MaterialEnv.from_ratio(1.8, 0.7).tau_env)
        assert np.allclose(result.stokes[bg], expected)

    def test_closed_loop_reconstruction(self, sphere_render):
        _, _, _, result = sphere_render
        smap = tp.reconstruct_stokes(result.session)
        mask = result.ground_truth.mask
        rel = np.abs(smap.stokes - result.stokes) / result.stokes[..., 0:1]
        assert rel[mask].max() < 1e-9
