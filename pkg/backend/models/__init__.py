"""Data models package"""

from .baseline import BaselineTable, GeometryStats  # noqa: F401
from .config import (  # noqa: F401
    ArQuantizer,
    AugmentConfig,
    EncodingConfig,
    FilterConfig,
    PipelineConfig,
    SleuConfig,
)
from .evaluation import (  # noqa: F401
    EvaluationReport,
    RealBox,
    RestoredLayout,
    RestoredLayoutFile,
    SampleScore,
    ShiftVector,
    SleuResult,
    VisualRelationship,
    VisualRelationshipSet,
)
from .graph import (  # noqa: F401
    ClassFrequencies,
    CorpusDocument,
    CorpusObject,
    CorpusRelationship,
    CorpusSample,
    GroundedSample,
    ObjectNode,
    PixelBox,
    Relationship,
    SceneGraph,
    SemanticLayout,
)
from .sequences import (  # noqa: F401
    BacsKind,
    BacsMode,
    BacsSequence,
    BacsToken,
    GridBox,
    GridFrame,
    LabeledGridBox,
    NodeSequence,
    QuantizedLayout,
    SfSequence,
)
