"""tli: data-free parameter transfer between different architectures.

Matches parameter tensors of two models by execution-path similarity
over their computation graphs, injects teacher tensors into student
shapes via a crop/resize blend, and reports an aggregate similarity
score in [0, 1].
"""

from .errors import (
    BoundsError,
    CycleError,
    DanglingRefError,
    EmptyModelError,
    HeaderError,
    NonFiniteError,
    RankMismatchError,
    SchemaError,
    ShapeError,
    ShapeMismatchError,
    TliError,
)
from .graph_model import (
    MERGE_TAGS,
    NORM_ROLES,
    GraphDoc,
    Node,
    OpKind,
    OpTag,
    ParamInfo,
    ParamRole,
    load_graph,
    serialize_graph,
    topo_order,
)
from .injection import (
    InjectionConfig,
    center_crop,
    combo_injection,
    resize,
    softmax_mix,
    softmax_weights,
)
from .matching import (
    DEFAULT_WEIGHTS,
    MatchReport,
    PathScore,
    ScoreWeights,
    levenshtein,
    match,
    score_pair,
)
from .segmentation import ExecutionPath, Submodule, extract_paths, segment
from .tensor_store import read_store, read_store_file, write_store, write_store_file
from .transfer import (
    Model,
    NormPolicy,
    TransferConfig,
    select_best_teacher,
    similarity,
    transfer,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsError", "CycleError", "DanglingRefError", "EmptyModelError",
    "HeaderError", "NonFiniteError", "RankMismatchError", "SchemaError",
    "ShapeError", "ShapeMismatchError", "TliError",
    "MERGE_TAGS", "NORM_ROLES", "GraphDoc", "Node", "OpKind", "OpTag",
    "ParamInfo", "ParamRole", "load_graph", "serialize_graph", "topo_order",
    "InjectionConfig", "center_crop", "combo_injection", "resize",
    "softmax_mix", "softmax_weights",
    "DEFAULT_WEIGHTS", "MatchReport", "PathScore", "ScoreWeights",
    "levenshtein", "match", "score_pair",
    "ExecutionPath", "Submodule", "extract_paths", "segment",
    "read_store", "read_store_file", "write_store", "write_store_file",
    "Model", "NormPolicy", "TransferConfig", "select_best_teacher",
    "similarity", "transfer",
]
