"""Shape-from-polarization in the thermal infrared: physics, imaging model,
calibration, Stokes reconstruction, rendering, and normal estimation."""

__version__ = "0.1.0"

from .calibration import (CalibrationResult, CalibrationShot, PolarizedShot,
                          blackbody_stokes, calibrate, calibrate_gain,
                          calibrate_response)
from .imaging import (CameraModel, RawImage, camera_mueller, difference_image,
                      polarizer_image, polarizer_mueller, simulate_raw)
from .metrics import ErrorReport, angular_error_map, summarize
from .normals import (EstimationParams, NormalMap, azimuth_candidates,
                      estimate_normals, invert_zenith, resolve_azimuth)
from .pfm import pfm_read, pfm_write
from .polarization import (STEFAN_BOLTZMANN, DolpCurve, FresnelPair,
                           MaterialEnv, PolarizationState, RadiancePair,
                           blackbody_radiance, build_dolp_curve,
                           combined_radiance, dolp_of_zenith,
                           fresnel_reflectance, fresnel_transmittance,
                           polarization_state, snell_refract,
                           stokes_polarization, surface_stokes)
from .simulator import (GroundTruth, Mesh, ProjectionModel, SceneSpec,
                        SphereGeometry, height_field_mesh, load_mesh,
                        render_ground_truth, render_session)
from .stokes import CaptureSession, StokesMap, design_matrix, reconstruct_stokes
