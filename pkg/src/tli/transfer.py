"""End-to-end transfer: match paths, filter by policy, inject, mix, and
assemble the student's new tensor store.

The student store must arrive pre-initialized (Kaiming, Xavier, zeros —
the caller's choice); every parameter the pipeline skips keeps its
incoming value verbatim, which makes the whole operation a drop-in layer
on top of any classical initializer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyModelError, ShapeError
from .graph_model import NORM_ROLES, GraphDoc, ParamRole
from .injection import InjectionConfig, combo_injection, softmax_mix
from .matching import DEFAULT_WEIGHTS, MatchReport, ScoreWeights, match
from .segmentation import ExecutionPath, extract_paths, segment
from .tensor_store import TensorMap


class NormPolicy(str, Enum):
    """Which normalization-layer parameters may receive teacher values."""

    TRANSFER_ALL = "transfer_all"
    SKIP_NORM_PARAMS = "skip_norm_params"
    SKIP_RUNNING_STATS = "skip_running_stats"


_SKIPPED_ROLES: dict[NormPolicy, frozenset[ParamRole]] = {
    NormPolicy.TRANSFER_ALL: frozenset(),
    NormPolicy.SKIP_NORM_PARAMS: NORM_ROLES,
    NormPolicy.SKIP_RUNNING_STATS: frozenset({ParamRole.RUNNING_STAT}),
}


@dataclass(frozen=True)
class TransferConfig:
    injection: InjectionConfig = field(default_factory=InjectionConfig)
    min_score: float = 0.0
    norm_policy: NormPolicy = NormPolicy.TRANSFER_ALL
    score_weights: ScoreWeights = field(default_factory=ScoreWeights)

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0, 1]")


@dataclass
class Model:
    """A graph plus (optionally) its tensor store."""

    graph: GraphDoc
    tensors: TensorMap | None = None

    def validate_store(self) -> None:
        """Cross-check the store against the graph's parameter index."""
        if self.tensors is None:
            return
        for name in self.graph.param_index:
            if name not in self.tensors:
                raise ShapeError(
                    f"model {self.graph.name!r}: parameter {name!r} missing "
                    "from the tensor store"
                )

    def paths(self) -> list[ExecutionPath]:
        shapes = None
        if self.tensors is not None:
            self.validate_store()
            shapes = {name: tuple(arr.shape) for name, arr in self.tensors.items()}
        return extract_paths(self.graph, segment(self.graph), shapes)


def _inject_aligned(teacher: np.ndarray, target_shape: tuple[int, ...],
                    crop_weight: float) -> np.ndarray:
    """combo_injection with trailing-singleton rank alignment: the
    lower-rank shape is padded with leading 1s before injecting."""
    if teacher.ndim == len(target_shape):
        return combo_injection(teacher, target_shape, crop_weight)
    if teacher.ndim < len(target_shape):
        padded = teacher.reshape((1,) * (len(target_shape) - teacher.ndim) + teacher.shape)
        return combo_injection(padded, target_shape, crop_weight)
    padded_target = (1,) * (teacher.ndim - len(target_shape)) + tuple(target_shape)
    return combo_injection(teacher, padded_target, crop_weight).reshape(target_shape)


def transfer(student: Model, teacher: Model,
             cfg: TransferConfig | None = None) -> tuple[TensorMap, MatchReport]:
    """Produce the student's transferred store and the match report.

    Every student parameter not excluded by the norm policy receives the
    softmax mix of its top-k same-role candidates, each combo-injected to
    the student shape.  Excluded or unmatched parameters keep their
    incoming values; tensors in the store that the graph does not own
    pass through untouched.  Deterministic: same inputs, same bytes.
    """
    cfg = cfg or TransferConfig()
    if student.tensors is None:
        raise ShapeError("transfer needs the student's tensor store")
    if teacher.tensors is None:
        raise ShapeError("transfer needs the teacher's tensor store")
    student.validate_store()
    teacher.validate_store()

    student_paths = student.paths()
    teacher_paths = teacher.paths()
    report = match(student_paths, teacher_paths,
                   k=cfg.injection.k, min_score=cfg.min_score,
                   weights=cfg.score_weights)

    skipped_roles = _SKIPPED_ROLES[cfg.norm_policy]
    teacher_roles = {p.param_name: p.role for p in teacher_paths}
    out: TensorMap = dict(student.tensors)
    decisions: dict[str, str] = {}
    for path in student_paths:
        name = path.param_name
        if path.role in skipped_roles:
            decisions[name] = "kept: excluded by norm policy"
            continue
        candidates = report.per_param.get(name, [])
        usable = [(t, ps) for t, ps in candidates if teacher_roles[t] == path.role]
        if not usable:
            decisions[name] = ("kept: no candidate above threshold" if not candidates
                               else "kept: candidates had mismatched roles")
            continue
        target_shape = tuple(student.tensors[name].shape)
        injected = [
            (_inject_aligned(teacher.tensors[t], target_shape, cfg.injection.crop_weight),
             ps.total)
            for t, ps in usable
        ]
        out[name] = softmax_mix(injected, cfg.injection.temperature)
        sources = ",".join(t for t, _ in usable)
        decisions[name] = f"injected from {sources}"
    report.decisions = decisions
    return out, report


def similarity(student: Model, teacher: Model, k: int = 1, min_score: float = 0.0,
               weights: ScoreWeights = DEFAULT_WEIGHTS) -> MatchReport:
    """Match-only entry point (no stores required on either side)."""
    return match(student.paths(), teacher.paths(), k=k, min_score=min_score,
                 weights=weights)


def select_best_teacher(student: Model, teachers: list[Model],
                        cfg: TransferConfig | None = None) -> tuple[int, float]:
    """Index and score of the library teacher most similar to the student;
    ties go to the lowest index."""
    cfg = cfg or TransferConfig()
    if not teachers:
        raise EmptyModelError("teacher library is empty")
    student_paths = student.paths()
    best_index = 0
    best_score = -math.inf
    for index, teacher in enumerate(teachers):
        report = match(student_paths, teacher.paths(),
                       k=cfg.injection.k, min_score=cfg.min_score,
                       weights=cfg.score_weights)
        if report.tli_score > best_score:
            best_index, best_score = index, report.tli_score
    return best_index, best_score
