"""voltip: threat image projection for 3D baggage CT volumes.

Pipeline stages: isolate a threat from a controlled scan, segment a bag
into outer/void/content costs, find the best insertion pose with a
particle swarm, blend, score, and synthesise consistent metal artefacts.
"""

from .artefacts import (MagParams, Sinogram, corrupt_sinogram, generate_artefacts,
                        iradon, radon, segment_metal)
from .errors import ValidationError, VoltipError, VolumeFormatError
from .insertion import (ObjectiveParams, Pose, PsoConfig, TipResult, blend,
                        default_pose_bounds, insert, objective_cost, pso_minimize,
                        pso_optimize, quality_score)
from .io import load_raw_u16, load_volume, save_volume
from .isolation import (IsolationParams, ThreatIndicator, ThreatSegmentation,
                        build_indicator, isolate_threat, segment_threat_regions)
from .phantoms import KINDS, GroundTruth, PhantomSpec, generate
from .pipeline import PipelineConfig, PipelineResult, load_config_file, run_pipeline
from .voids import (REGION_CONTENT, REGION_METAL, REGION_OUTER, REGION_VOID,
                    BagCostMap, VoidParams, determine_voids)
from .volume import (BoundingBox, LabelMap, Volume, bounding_box, connected_components,
                     crop, dilate, distance_transform, largest_component, region_grow,
                     rotate, rotate_array, threshold)

__version__ = "0.1.0"
