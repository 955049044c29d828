"""Session manifests: the JSON index tying a capture's files together."""

import json
import os

import numpy as np

from .imaging import CameraModel
from .pfm import pfm_read, pfm_write

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


class ManifestError(ValueError):
    pass


def write_session(out_dir, result, scene_dict, proj, angles, tau_ref, seed):
    """Persist a rendered session: raw PFMs, ground truth, and the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    angles = np.asarray(angles, dtype=float)
    raw_scene_files = []
    raw_ref_files = []
    for j, psi in enumerate(angles):
        fs = f"raw_scene_{j:03d}.pfm"
        fr = f"raw_ref_{j:03d}.pfm"
        pfm_write(result.raw_scene[j], os.path.join(out_dir, fs))
        pfm_write(result.raw_ref[j], os.path.join(out_dir, fr))
        raw_scene_files.append(fs)
        raw_ref_files.append(fr)
    gt = result.ground_truth
    pfm_write(gt.normals, os.path.join(out_dir, "gt_normals.pfm"))
    pfm_write(gt.mask.astype(np.float32), os.path.join(out_dir, "gt_mask.pfm"))
    pfm_write(gt.zenith.astype(np.float32), os.path.join(out_dir, "gt_zenith.pfm"))
    pfm_write(gt.azimuth.astype(np.float32), os.path.join(out_dir, "gt_azimuth.pfm"))
    manifest = {
        "version": MANIFEST_VERSION,
        "scene": scene_dict,
        "projection": proj.to_dict(),
        "camera": result.session.cam.to_dict(),
        "angles_deg": np.degrees(angles).tolist(),
        "tau_ref": tau_ref,
        "seed": seed,
        "files": {
            "raw_scene": raw_scene_files,
            "raw_ref": raw_ref_files,
            "gt_normals": "gt_normals.pfm",
            "gt_mask": "gt_mask.pfm",
            "gt_zenith": "gt_zenith.pfm",
            "gt_azimuth": "gt_azimuth.pfm",
        },
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def load_manifest(session_dir):
    path = os.path.join(session_dir, MANIFEST_NAME)
    if not os.path.isfile(path):
        raise ManifestError(f"no {MANIFEST_NAME} in {session_dir}")
    with open(path) as f:
        manifest = json.load(f)
    files = manifest.get("files", {})
    for key, entry in files.items():
        names = entry if isinstance(entry, list) else [entry]
        for name in names:
            if not os.path.isfile(os.path.join(session_dir, name)):
                raise ManifestError(f"manifest references missing file {name!r}")
    n_angles = len(manifest.get("angles_deg", []))
    if len(files.get("raw_scene", [])) != n_angles:
        raise ManifestError("raw image count does not match the angle list")
    return manifest


def load_session(session_dir, cam=None):
    """Rebuild a CaptureSession (scene minus reference diffs) from disk."""
    from .stokes import CaptureSession

    manifest = load_manifest(session_dir)
    angles = np.radians(manifest["angles_deg"])
    if cam is None:
        cam = CameraModel.from_dict(manifest["camera"])
    diffs = []
    for fs, fr in zip(manifest["files"]["raw_scene"], manifest["files"]["raw_ref"]):
        a = pfm_read(os.path.join(session_dir, fs)).astype(np.float64)
        b = pfm_read(os.path.join(session_dir, fr)).astype(np.float64)
        diffs.append(a - b)
    mask = pfm_read(os.path.join(session_dir, manifest["files"]["gt_mask"])) > 0.5
    session = CaptureSession(angles=angles, diffs=np.stack(diffs),
                             tau_ref=manifest["tau_ref"], cam=cam, mask=mask)
    return session, manifest
