"""pmgeom: geometry of point-cloud manifolds and curvature-balanced training.

Measures the volume, one-vs-rest separation degree, and Gauss-curvature
complexity of labeled point clouds; provides the curvature-balance
regularization loss, a FIFO feature pool with its epoch-gated protocol,
and a small deterministic trainer that tracks how these quantities evolve
during learning.
"""

from .cloud import LabeledCloud, ManifoldSet
from .curvature import (
    CurvatureReport,
    QuadricFit,
    TangentFrame,
    fit_quadric,
    gauss_curvature_at,
    mean_gauss_curvature,
    project_to_tangent,
    tangent_frame,
)
from .errors import PmgeomError
from .linalg import SymEigen, covariance, knn, logdet_i_plus, sym_eigen
from .pool import (
    Action,
    DcrState,
    FeaturePool,
    Phase,
    dcr_tick,
    dequeue_oldest,
    enqueue_batch,
    snapshot_by_class,
)
from .regularization import (
    LossSchedule,
    class_complexities,
    combined_loss,
    curvature_penalties,
    l_curvature,
    l_curvature_grad_fd,
)
from .stats import accuracy_bias_ratio, accuracy_variance, pearson, spearman
from .synthetic import gaussian_blobs, saddle_cloud, sphere_cloud, wave_cloud
from .trainer import Mlp, TrainConfig, TrainingTrace, backward_ce, forward, train
from .volume import (
    SeparationReport,
    manifold_volume,
    separation_all,
    separation_degree,
    separation_degree_closed_form,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
