import numpy as np
import pytest

import thermopol as tp

from conftest import sphere_scene


class TestDesignMatrix:
    def test_ideal_rows(self):
        cam = tp.CameraModel()
        K = tp.design_matrix(np.radians([0, 45, 90, 135]), cam)
        for j, psi in enumerate(np.radians([0, 45, 90, 135])):
            expected = 0.5 * np.array([1, np.cos(2 * psi), np.sin(2 * psi)])
            assert np.allclose(K[j], expected, atol=1e-15)

    def test_repeated_angle_rank_deficient(self):
        with pytest.raises(ValueError, match="rank-deficient"):
            tp.design_matrix([0.0, 0.0, 0.0], tp.CameraModel())

    def test_pi_periodic_collapse(self):
        with pytest.raises(ValueError):
            tp.design_matrix([0.0, np.pi], tp.CameraModel())

    def test_full_rank_at_three_angles(self):
        K = tp.design_matrix(np.radians([0, 60, 120]), tp.CameraModel(c=1.7, k=0.9))
        assert np.linalg.matrix_rank(K) == 3


class TestReconstruction:
    def test_noiseless_round_trip(self, sphere_render):
        _, _, _, result = sphere_render
        smap = tp.reconstruct_stokes(result.session)
        mask = result.ground_truth.mask
        rel = (np.abs(smap.stokes - result.stokes)
               / np.abs(result.stokes[..., 0:1]))
        assert rel[mask].max() < 1e-9

    def test_reference_fixed_point(self):
        cam = tp.CameraModel(c=1.7, k=0.95, offset_base=7.0)
        tau_ref = 303.15
        s_ref = tp.blackbody_stokes(tau_ref)
        angles = np.radians([0, 45, 90, 135])
        session = tp.CaptureSession(
            angles=angles, diffs=np.zeros((4, 8, 8)), tau_ref=tau_ref,
            cam=cam, mask=np.ones((8, 8), dtype=bool))
        smap = tp.reconstruct_stokes(session)
        assert np.allclose(smap.stokes, s_ref, atol=1e-12)

    def test_least_squares_optimality(self, sphere_render):
        _, _, cam, result = sphere_render
        smap = tp.reconstruct_stokes(result.session)
        K = tp.design_matrix(result.session.angles, cam)
        s_ref = tp.blackbody_stokes(result.session.tau_ref)
        rng = np.random.default_rng(0)
        ii, jj = np.nonzero(result.ground_truth.mask)
        pick = rng.choice(len(ii), size=100, replace=False)
        for i, j in zip(ii[pick], jj[pick]):
            s = smap.stokes[i, j] - s_ref
            target = result.session.diffs[:, i, j]
            base = np.linalg.norm(K @ s - target)
            for axis in range(3):
                for delta in (1e-6, -1e-6):
                    pert = s.copy()
                    pert[axis] += delta
                    assert np.linalg.norm(K @ pert - target) >= base - 1e-15

    def test_error_decreases_with_n(self):
        scene, proj = sphere_scene(resolution=48)
        noise = 0.05
        medians = []
        for n in (4, 12, 30, 60):
            angles = np.arange(n) * np.pi / n
            errs = []
            for seed in range(32):
                cam = tp.CameraModel(c=1.7, k=0.95, noise_sigma=noise)
                result = tp.render_session(scene, proj, cam, angles,
                                           tau_ref=303.15, seed=seed)
                smap = tp.reconstruct_stokes(result.session)
                mask = result.ground_truth.mask
                err = (np.abs(smap.stokes - result.stokes)
                       / np.abs(result.stokes[..., 0:1]))
                errs.append(np.sqrt(np.mean(err[mask] ** 2)))
            medians.append(np.median(errs))
        assert medians[0] > medians[1] > medians[2] > medians[3]

    def test_angle_rotation_equivariance(self):
        # rotating all polarizer angles and the scene AoLP together leaves
        # the DoLP map unchanged
        rng = np.random.default_rng(4)
        s0 = rng.uniform(1, 2, (8, 8))
        dolp = rng.uniform(0, 0.3, (8, 8))
        aolp = rng.uniform(0, np.pi, (8, 8))
        delta = 0.35
        cam = tp.CameraModel(c=1.4, k=0.93)
        tau_ref = 300.0

        def run(aolp_map, angle_offset):
            stokes = np.stack([s0, s0 * dolp * np.cos(2 * aolp_map),
                               s0 * dolp * np.sin(2 * aolp_map)], axis=-1)
            angles = np.radians([0, 45, 90, 135]) + angle_offset
            diffs = np.stack([
                tp.simulate_raw(stokes - tp.blackbody_stokes(tau_ref), psi, cam)
                for psi in angles])
            session = tp.CaptureSession(angles=angles, diffs=diffs,
                                        tau_ref=tau_ref, cam=cam,
                                        mask=np.ones((8, 8), dtype=bool))
            return tp.stokes_polarization(tp.reconstruct_stokes(session).stokes)

        base = run(aolp, 0.0)
        rotated = run((aolp + delta) % np.pi, delta)
        assert np.allclose(base.dolp, rotated.dolp, atol=1e-9)

    def test_session_validation(self):
        cam = tp.CameraModel()
        with pytest.raises(ValueError):
            tp.CaptureSession(angles=np.radians([0, 45]),
                              diffs=np.zeros((2, 4, 4)), tau_ref=300.0,
                              cam=cam, mask=np.ones((4, 4), dtype=bool))
        with pytest.raises(ValueError):
            tp.CaptureSession(angles=np.radians([0, 45, 90]),
                              diffs=np.zeros((3, 4, 4)), tau_ref=300.0,
                              cam=cam, mask=np.ones((5, 4), dtype=bool))

    def test_condition_warning(self):
        # nearly coincident angles give a huge condition number
        cam = tp.CameraModel()
        angles = np.array([0.0, 1e-3, 2e-3])
        diffs = np.zeros((3, 4, 4))
        session = tp.CaptureSession(angles=angles, diffs=diffs, tau_ref=300.0,
                                    cam=cam, mask=np.ones((4, 4), dtype=bool))
        with pytest.warns(UserWarning, match="ill-conditioned"):
            tp.reconstruct_stokes(session)
