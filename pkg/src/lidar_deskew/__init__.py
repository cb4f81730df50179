"""Velocity estimation and de-skewing for slow 2D LiDAR range streams."""

from .association import AssociationConfig, Correspondence, find_correspondences
from .errors import (
    AlignmentError,
    DegenerateGeometryError,
    EstimationFailedError,
    ScanFormatError,
    SimulationDomainError,
)
from .evaluation import (
    GridCellResult,
    ate,
    horn_align,
    point_rmse,
    run_velocity_grid,
)
from .fileio import (
    read_points,
    read_scan,
    read_trajectory,
    write_points,
    write_scan,
    write_trajectory,
)
from .motion_model import (
    BodyVelocity,
    Pose2,
    RayMeasurement,
    SweepScan,
    Trajectory,
    deskew_scan,
    endpoint,
    pose_at,
)
from .scan_pipeline import (
    PatchSet,
    PlanarPatch,
    RegularizationConfig,
    build_patches,
    regularize,
)
from .simulator import (
    GroundTruthBundle,
    SensorConfig,
    WorldModel,
    default_room,
    raycast,
    simulate_sweep,
)
from .solver import (
    EstimateReport,
    EstimatorConfig,
    SolverConfig,
    estimate_velocity,
    huber_weight,
    irls_solve,
    patch_error,
)

__version__ = "0.1.0"
