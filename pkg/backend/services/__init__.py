"""Services package: codecs, metric, augmentation, baseline and pipeline"""

from .pipeline import LayoutPipeline, get_pipeline  # noqa: F401
