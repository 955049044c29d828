"""Angular-error metrics for normal maps."""

import json
from dataclasses import asdict, dataclass

import numpy as np

ACCURACY_THRESHOLDS = (11.25, 22.5, 30.0)


@dataclass(frozen=True)
class ErrorReport:
    mean: float
    median: float
    rmse: float
    accuracy_11_25: float
    accuracy_22_5: float
    accuracy_30: float
    n_pixels: int

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2)

    def table(self):
        return (
            "Angular error [deg]   Accuracy [%]\n"
            "mean   median  rmse   <11.25  <22.5  <30\n"
            f"{self.mean:6.2f} {self.median:7.2f} {self.rmse:5.2f}  "
            f"{self.accuracy_11_25:6.2f} {self.accuracy_22_5:6.2f} "
            f"{self.accuracy_30:5.2f}   ({self.n_pixels} px)"
        )


def angular_error_map(est, gt, mask=None):
    """Per-pixel angular error in degrees between two normal maps."""
    if est.space != gt.space:
        raise ValueError(f"space mismatch: {est.space!r} vs {gt.space!r}")
    if est.normals.shape != gt.normals.shape:
        raise ValueError(
            f"dimension mismatch: {est.normals.shape} vs {gt.normals.shape}")
    dots = np.einsum("...i,...i->...", est.normals, gt.normals)
    errors = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    if mask is None:
        mask = est.mask & gt.mask
    return errors, mask


def lower_median(values):
    """Order-statistic median: element (n-1)//2 of the sorted sample."""
    v = np.sort(np.asarray(values).ravel())
    if v.size == 0:
        raise ValueError("empty sample")
    return float(v[(v.size - 1) // 2])


def summarize(errors, mask):
    """Summary statistics of an angular-error map over masked pixels."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    e = np.asarray(errors)[mask]
    acc = [100.0 * float(np.mean(e < t)) for t in ACCURACY_THRESHOLDS]
    return ErrorReport(
        mean=float(np.mean(e)),
        median=lower_median(e),
        rmse=float(np.sqrt(np.mean(e**2))),
        accuracy_11_25=acc[0],
        accuracy_22_5=acc[1],
        accuracy_30=acc[2],
        n_pixels=int(mask.sum()),
    )
