"""splatedit: generative object insertion for Gaussian Splatting scenes.

Library layout:

* ``scene``          Gaussian scene container, PLY I/O, point-cloud sampling
* ``cameras``        pinhole cameras, orbit trajectories, box masks
* ``rasterizer``     differentiable forward rendering and gradients
* ``pipeline``       view bundles, coarse prior, inpainting client and mock
* ``wire``           the inpainting HTTP wire format (encode/decode)
* ``reconstruction`` losses and mask-aware finetuning
* ``metrics``        PSNR/SSIM evaluation reports
* ``cli``            stage-by-stage command line driver
"""

from .cameras import (Camera, OrientedBBox, TrajectorySpec, central_camera,
                      load_bbox_json, load_cameras_json, make_trajectory,
                      point_in_bbox, project_bbox_mask, save_bbox_json,
                      save_cameras_json)
from .errors import (ConfigError, EmptyEditingRegionError, ParameterError,
                     PlyFormatError, ProtocolError, SceneDataError,
                     SplateditError, TrainingDivergedError, TransportError)
from .metrics import EvalReport, background_fidelity_eval, consistency_eval, psnr
from .pipeline import (InpaintRequest, InpaintResponse, ViewBundle,
                       conditioning_image, extract_view_bundles, inpaint,
                       mock_inpainter, seed_coarse_prior)
from .rasterizer import RenderGrad, RenderOutput, render, render_backward, render_fast
from .reconstruction import (EditedView, SupervisionSet, TrainConfig, TrainingView,
                             density_control, finetune, l_gs, l_rec, ssim)
from .scene import (GaussianScene, PointCloudSample, load_ply, sample_point_cloud,
                    save_ply)

__version__ = "0.1.0"
