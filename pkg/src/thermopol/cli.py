"""Command-line pipeline driver.

Subcommands: simulate, calibrate, reconstruct, estimate, evaluate, curve.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .calibration import CalibrationResult, CalibrationShot, PolarizedShot, calibrate
from .imaging import CameraModel
from .metrics import angular_error_map, summarize
from .normals import EstimationParams, NormalMap, estimate_normals
from .pfm import pfm_read, pfm_write
from .polarization import MaterialEnv, build_dolp_curve
from .session import ManifestError, load_session, write_session
from .simulator import (ProjectionModel, SceneSpec, SphereGeometry,
                        height_field_mesh, load_mesh, render_session)
from .stokes import StokesMap, reconstruct_stokes

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_scene(path):
    with open(path) as f:
        spec = json.load(f)
    geom = spec["geometry"]
    kind = geom.get("type", "sphere")
    if kind == "sphere":
        geometry = SphereGeometry(center=geom["center"], radius=geom["radius"])
    elif kind == "mesh":
        mesh_path = geom["path"]
        if not os.path.isabs(mesh_path):
            mesh_path = os.path.join(os.path.dirname(path), mesh_path)
        geometry = load_mesh(mesh_path)
    elif kind == "height_field":
        geometry = height_field_mesh(
            np.asarray(geom["heights"], dtype=float),
            spacing=geom.get("spacing", 1.0),
            origin=tuple(geom.get("origin", (0.0, 0.0))),
            depth=geom.get("depth", 10.0))
    else:
        raise ValueError(f"unknown geometry type {kind!r}")
    material = MaterialEnv(eta=spec["eta"],
                           tau_obj=spec["tau_obj_c"] + 273.15,
                           tau_env=spec["tau_env_c"] + 273.15)
    proj = ProjectionModel.from_dict(spec.get("projection", {}))
    scene = SceneSpec(geometry=geometry, material=material,
                      resolution=tuple(spec["resolution"]))
    cam = CameraModel.from_dict(spec["camera"]) if "camera" in spec else CameraModel()
    return scene, proj, cam, spec


def _cmd_simulate(args):
    scene, proj, cam, spec = _load_scene(args.scene)
    angles = np.radians([float(a) for a in args.angles.split(",")])
    result = render_session(scene, proj, cam, angles, tau_ref=args.tau_ref_c + 273.15,
                            seed=args.seed)
    write_session(args.out, result, spec, proj, angles,
                  tau_ref=args.tau_ref_c + 273.15, seed=args.seed)
    print(f"wrote session to {args.out} ({len(angles)} angles, "
          f"{spec['resolution'][0]}x{spec['resolution'][1]})")
    return EXIT_OK


def _cmd_calibrate(args):
    shots_path = os.path.join(args.shots, "shots.json")
    with open(shots_path) as f:
        listing = json.load(f)
    blackbody = [
        CalibrationShot(psi=np.radians(e["psi_deg"]),
                        tau_alpha=e["tau_alpha"], tau_beta=e["tau_beta"],
                        diff=pfm_read(os.path.join(args.shots, e["diff"])))
        for e in listing.get("blackbody", [])
    ]
    polarized = [
        PolarizedShot(psi=np.radians(e["psi_deg"]), delta_s0=e["delta_s0"],
                      diff=pfm_read(os.path.join(args.shots, e["diff"])))
        for e in listing.get("polarized", [])
    ]
    result = calibrate(blackbody, polarized or None, assumed_k=args.assumed_k)
    result.to_json(args.out)
    print(f"c={result.c:.6g} k={result.k:.6g} r2={result.r2:.6g} "
          f"method={result.method}")
    return EXIT_OK


def _cmd_reconstruct(args):
    cam = None
    if args.calibration:
        calib = CalibrationResult.from_json(args.calibration)
        cam = CameraModel(c=calib.c, k=calib.k)
    session, manifest = load_session(args.session, cam=cam)
    smap = reconstruct_stokes(session)
    os.makedirs(args.out, exist_ok=True)
    files = {}
    for i, name in enumerate(("s0", "s1", "s2")):
        fname = f"stokes_{name}.pfm"
        pfm_write(smap.stokes[..., i], os.path.join(args.out, fname))
        files[name] = fname
    pfm_write(smap.mask.astype(np.float32), os.path.join(args.out, "mask.pfm"))
    files["mask"] = "mask.pfm"
    meta = {
        "version": manifest["version"],
        "source_session": os.path.abspath(args.session),
        "projection": manifest["projection"],
        "condition_number": smap.condition_number,
        "files": files,
    }
    with open(os.path.join(args.out, "stokes.json"), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    print(f"wrote Stokes maps to {args.out} "
          f"(condition number {smap.condition_number:.3g})")
    return EXIT_OK


def _load_stokes_dir(path):
    with open(os.path.join(path, "stokes.json")) as f:
        meta = json.load(f)
    files = meta["files"]
    planes = [pfm_read(os.path.join(path, files[n])) for n in ("s0", "s1", "s2")]
    mask = pfm_read(os.path.join(path, files["mask"])) > 0.5
    return StokesMap(stokes=np.stack(planes, axis=-1).astype(np.float64),
                     mask=mask), meta


def _normal_png(normals, mask, path):
    from PIL import Image

    rgb = np.clip((normals * 0.5 + 0.5) * 255.0, 0, 255).astype(np.uint8)
    rgb[~mask] = 0
    Image.fromarray(rgb, mode="RGB").save(path)


def _cmd_estimate(args):
    smap, meta = _load_stokes_dir(args.stokes)
    curve = build_dolp_curve(args.eta, args.ratio)
    params = EstimationParams(curve=curve, mode=args.mode,
                              dolp_floor=args.dolp_floor)
    proj = ProjectionModel.from_dict(meta.get("projection", {}))
    nmap = estimate_normals(smap, params, proj)
    os.makedirs(args.out, exist_ok=True)
    pfm_write(nmap.normals, os.path.join(args.out, "normals.pfm"))
    pfm_write(nmap.mask.astype(np.float32), os.path.join(args.out, "mask.pfm"))
    pfm_write(nmap.confidence.astype(np.float32),
              os.path.join(args.out, "confidence.pfm"))
    _normal_png(nmap.normals, nmap.mask, os.path.join(args.out, "normals.png"))
    with open(os.path.join(args.out, "normals.json"), "w") as f:
        json.dump({"version": 1, "space": nmap.space,
                   "eta": args.eta, "ratio": args.ratio, "mode": args.mode,
                   "dolp_floor": args.dolp_floor,
                   "files": {"normals": "normals.pfm", "mask": "mask.pfm",
                             "confidence": "confidence.pfm",
                             "visualization": "normals.png"}},
                  f, indent=2, sort_keys=True)
    print(f"wrote normals to {args.out}")
    return EXIT_OK


def _load_normals(path, space="camera"):
    if os.path.isdir(path):
        normals = pfm_read(os.path.join(path, "normals.pfm")).astype(np.float64)
        mask_file = os.path.join(path, "mask.pfm")
        if not os.path.isfile(mask_file):
            mask_file = os.path.join(path, "gt_mask.pfm")
        mask = pfm_read(mask_file) > 0.5
    else:
        normals = pfm_read(path).astype(np.float64)
        mask = np.linalg.norm(normals, axis=-1) > 0.5
    return NormalMap(normals=normals, mask=mask, space=space)


def _cmd_evaluate(args):
    est = _load_normals(args.est)
    gt_path = args.gt
    if os.path.isdir(gt_path) and os.path.isfile(os.path.join(gt_path, "gt_normals.pfm")):
        gt = NormalMap(
            normals=pfm_read(os.path.join(gt_path, "gt_normals.pfm")).astype(np.float64),
            mask=pfm_read(os.path.join(gt_path, "gt_mask.pfm")) > 0.5,
            space="camera")
    else:
        gt = _load_normals(gt_path)
    errors, mask = angular_error_map(est, gt)
    report = summarize(errors, mask)
    print(report.table())
    if args.out:
        report.to_json(args.out)
    return EXIT_OK


def _cmd_curve(args):
    curve = build_dolp_curve(args.eta, args.ratio, n_samples=args.samples)
    lines = ["theta_deg,dolp"]
    for t, r in zip(curve.thetas, curve.rhos):
        lines.append(f"{np.degrees(t):.6f},{r:.8f}")
    peak = "nan" if curve.degenerate else f"{np.degrees(curve.theta_peak):.4f}"
    lines.append(f"# theta_peak_deg={peak}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="thermopol",
                     description="LWIR polarimetric shape pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic capture session")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--out", required=True, help="output session directory")
    p.add_argument("--angles", default="0,45,90,135",
                   help="comma-separated polarizer angles in degrees")
    p.add_argument("--tau-ref-c", type=float, default=30.0,
                   help="reference blackbody temperature in Celsius")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="fit camera gain and response")
    p.add_argument("--shots", required=True, help="directory with shots.json")
    p.add_argument("--out", required=True, help="output calibration JSON")
    p.add_argument("--assumed-k", type=float, default=1.0,
                   help="response factor assumed by the composite path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("reconstruct", help="least-squares Stokes maps")
    p.add_argument("--session", required=True, help="session directory")
    p.add_argument("--calibration", help="calibration JSON (defaults to "
                   "the camera recorded in the session manifest)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("estimate", help="model-based normal estimation")
    p.add_argument("--stokes", required=True, help="Stokes directory")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--ratio", type=float, required=True,
                   help="reflected-to-emitted radiance ratio")
    p.add_argument("--mode", choices=("emission-dominant", "reflection-dominant"),
                   default="emission-dominant")
    p.add_argument("--dolp-floor", type=float, default=0.005)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("evaluate", help="angular-error report")
    p.add_argument("--est", required=True, help="estimated normals (dir or PFM)")
    p.add_argument("--gt", required=True, help="ground-truth normals "
                   "(session dir, normals dir, or PFM)")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("curve", help="zenith-DoLP curve as CSV")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_curve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, ManifestError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
