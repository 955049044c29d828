"""More polarizer angles, better reconstruction: the N-image noise trend.

Renders a noisy sphere with N uniformly spaced polarizer angles for several
N and shows that the median Stokes reconstruction error falls as more images
enter the least-squares fit, along with the knock-on effect on normal-map
accuracy.

Run:  python3 demos/image_count_trend.py
"""

import numpy as np

import thermopol as tp


def main():
    res, seeds = 64, 12
    env = tp.MaterialEnv.from_ratio(1.8, 0.7)
    scene = tp.SceneSpec(
        geometry=tp.SphereGeometry(center=[0.0, 0.0, 10.0], radius=3.0),
        material=env, resolution=(res, res))
    proj = tp.ProjectionModel(pixel_size=6.6 / res)
    span = 1.7 * (tp.blackbody_stokes(env.tau_obj)[0]
                  - tp.blackbody_stokes(303.15)[0])
    sigma = 0.05 * abs(span)
    curve = tp.build_dolp_curve(1.8, 0.7)

    print(f"{res}x{res} sphere, Gaussian noise sigma = 5% of signal span, "
          f"{seeds} seeds per N\n")
    print(f"{'N':>4}  {'median Stokes err':>18}  {'normal MAE [deg]':>16}")
    for n in (4, 12, 30, 60):
        angles = np.arange(n) * np.pi / n
        stokes_errs, maes = [], []
        for seed in range(seeds):
            cam = tp.CameraModel(c=1.7, k=0.95, offset_base=12.0,
                                 noise_sigma=sigma)
            result = tp.render_session(scene, proj, cam, angles,
                                       tau_ref=303.15, seed=seed,
                                       with_noise=True)
            smap = tp.reconstruct_stokes(result.session)
            gt = result.ground_truth
            err = np.abs(smap.stokes - result.stokes)[gt.mask]
            stokes_errs.append(np.median(err))

            nmap = tp.estimate_normals(smap, tp.EstimationParams(curve=curve),
                                       proj)
            gtn = tp.NormalMap(normals=gt.normals, mask=gt.mask,
                               space="camera")
            e, _ = tp.angular_error_map(nmap, gtn)
            maes.append(e[gt.mask & (gt.zenith <= np.radians(70))].mean())
        print(f"{n:>4}  {np.median(stokes_errs):>18.4g}  "
              f"{np.mean(maes):>16.2f}")

    print("\nThe error shrinks roughly as 1/sqrt(N): each extra polarizer")
    print("angle adds an equation to the per-pixel least-squares system.")


if __name__ == "__main__":
    main()
