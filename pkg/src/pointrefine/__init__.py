"""Point-based refinement of coarse instance masks with COCO-style evaluation
and mask-area statistics, plus a synthetic line-space defect generator."""

__version__ = "0.1.0"

from .errors import (ConfigError, CorruptMaskError, InvalidInputError, ParseError,
                     TrainingDivergedError, UnsupportedFormatError, UnsupportedShapeError)
from .evaluation import APReport, EvalConfig, average_precision, evaluate, relative_improvement
from .grid import bilinear_sample, scatter_points, upsample2x
from .mask_geometry import (DEFECT_CLASSES, BBox, BinaryMask, MaskInstance, bbox_iou,
                            mask_area, mask_iou, mask_to_bbox, polygon_to_mask, rle_decode,
                            rle_encode)
from .point_head import (PointHeadParams, TrainConfig, forward, init_params, load_params,
                         loss_and_grad, save_params, train)
from .renderer import RenderConfig, binarize, refine
from .sampling import (TrainSamplerConfig, sample_training_points, select_top_uncertain,
                       uncertainty_from_logits)
from .stats import AreaStats, area_statistics, boxplot_series
