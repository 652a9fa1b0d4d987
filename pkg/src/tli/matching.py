"""Scoring of execution-path pairs and top-K teacher selection.

Every student/teacher path pair gets a score in [0, 1] blended from five
components (op-sequence similarity, activation overlap, submodule
position, branch placement, shape compatibility).  Per student parameter
the best-scoring teacher candidates are kept, and the element-weighted
mean of the best scores is the model-level similarity ("tli_score").
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyModelError
from .segmentation import ExecutionPath


@dataclass(frozen=True)
class ScoreWeights:
    """Blend weights of the five score components; must sum to 1."""

    seq: float = 0.35
    activations: float = 0.15
    position: float = 0.20
    branch: float = 0.10
    shape: float = 0.20

    def __post_init__(self) -> None:
        values = (self.seq, self.activations, self.position, self.branch, self.shape)
        if any(w < 0 for w in values):
            raise ValueError("score weights must be non-negative")
        if abs(math.fsum(values) - 1.0) > 1e-9:
            raise ValueError(f"score weights must sum to 1, got {math.fsum(values)!r}")


DEFAULT_WEIGHTS = ScoreWeights()


@dataclass(frozen=True)
class PathScore:
    """Total score plus its per-component breakdown."""

    total: float
    components: dict[str, float]

    def to_dict(self) -> dict:
        return {"total": self.total, "components": dict(self.components)}


@dataclass
class MatchReport:
    """Ranked teacher candidates per student parameter.

    per_param lists, per matched student parameter, up to K
    (teacher name, PathScore) pairs sorted by total descending with ties
    broken by teacher name; unmatched holds the student parameters whose
    best candidate fell below the threshold.  decisions is filled by the
    transfer pipeline with the action taken per parameter.
    """

    per_param: dict[str, list[tuple[str, PathScore]]]
    tli_score: float
    unmatched: list[str]
    notes: list[str] = field(default_factory=list)
    decisions: dict[str, str] | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "tli_score": self.tli_score,
            "per_param": {
                name: [{"teacher": t, **ps.to_dict()} for t, ps in ranked]
                for name, ranked in self.per_param.items()
            },
            "unmatched": list(self.unmatched),
            "notes": list(self.notes),
        }
        if self.decisions is not None:
            doc["decisions"] = dict(self.decisions)
        return doc


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Classic edit distance (insert/delete/substitute, unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i]
        for j, item_b in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (item_a != item_b),
            ))
        previous = current
    return previous[-1]


def _multiset_jaccard(a: tuple[str, ...], b: tuple[str, ...]) -> float:
    if not a and not b:
        return 1.0
    ca, cb = Counter(a), Counter(b)
    intersection = sum((ca & cb).values())
    union = sum((ca | cb).values())
    return intersection / union


def _branch_component(s: ExecutionPath, t: ExecutionPath) -> float:
    if s.branch_count == t.branch_count and s.branch_index == t.branch_index:
        return 1.0
    s_rel = s.branch_index / s.branch_count
    t_rel = t.branch_index / t.branch_count
    return 0.5 if abs(s_rel - t_rel) <= 0.25 else 0.0


def _geometric_dim_ratio(a: Sequence[int], b: Sequence[int]) -> float:
    product = 1.0
    for da, db in zip(a, b):
        product *= min(da, db) / max(da, db)
    return product ** (1.0 / len(a))


def _shape_component(s: ExecutionPath, t: ExecutionPath) -> float:
    if s.role != t.role:
        return 0.0
    if s.shape is None or t.shape is None:
        # No store on at least one side: roles are the only evidence.
        return 1.0
    if len(s.shape) != len(t.shape):
        rank = min(len(s.shape), len(t.shape))
        return 0.5 * _geometric_dim_ratio(s.shape[-rank:], t.shape[-rank:])
    return _geometric_dim_ratio(s.shape, t.shape)


def score_pair(s: ExecutionPath, t: ExecutionPath,
               weights: ScoreWeights = DEFAULT_WEIGHTS) -> PathScore:
    """Symmetric similarity of two execution paths, in [0, 1].

    A path scored against itself is exactly 1.0 under the default
    weights.
    """
    components = {
        "seq": 1.0 - levenshtein(s.op_sequence, t.op_sequence) / max(s.depth, t.depth),
        "activations": _multiset_jaccard(s.activations, t.activations),
        "position": 1.0 - abs(s.submodule_pos - t.submodule_pos),
        "branch": _branch_component(s, t),
        "shape": _shape_component(s, t),
    }
    total = math.fsum((
        weights.seq * components["seq"],
        weights.activations * components["activations"],
        weights.position * components["position"],
        weights.branch * components["branch"],
        weights.shape * components["shape"],
    ))
    return PathScore(total=min(1.0, max(0.0, total)), components=components)


def _elems(path: ExecutionPath) -> int:
    return math.prod(path.shape) if path.shape is not None else 1


def match(student_paths: Sequence[ExecutionPath],
          teacher_paths: Sequence[ExecutionPath],
          k: int = 1,
          min_score: float = 0.0,
          weights: ScoreWeights = DEFAULT_WEIGHTS) -> MatchReport:
    """Score all student x teacher pairs and keep the top-k per student
    parameter.

    Candidates below min_score are dropped; parameters left with no
    candidate go to ``unmatched`` and contribute a best score of 0 to the
    aggregate.  tli_score is the mean of best scores weighted by each
    student tensor's element count.

    Ties on total break by teacher name ascending, except that a teacher
    parameter named exactly like the student one sorts first inside its
    tie tier: feature-identical parameters (batchnorm mean/var pairs)
    would otherwise swap values on identity transfers.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= min_score <= 1.0:
        raise ValueError("min_score must be in [0, 1]")
    if not student_paths or not teacher_paths:
        raise EmptyModelError("both models need at least one parameter tensor")

    per_param: dict[str, list[tuple[str, PathScore]]] = {}
    unmatched: list[str] = []
    weighted_sum = 0.0
    weight_total = 0.0
    for sp in student_paths:
        scored = [(tp.param_name, score_pair(sp, tp, weights)) for tp in teacher_paths]
        scored.sort(key=lambda entry: (
            -entry[1].total, entry[0] != sp.param_name, entry[0]))
        kept = [entry for entry in scored if entry[1].total >= min_score][:k]
        elems = _elems(sp)
        if kept:
            per_param[sp.param_name] = kept
            best = kept[0][1].total
        else:
            unmatched.append(sp.param_name)
            best = 0.0
        weighted_sum += elems * best
        weight_total += elems

    notes = sorted({
        f"fan-in below merge level linearized on path of {p.param_name!r}"
        for p in (*student_paths, *teacher_paths) if p.fanin_linearized
    })
    return MatchReport(
        per_param=per_param,
        tli_score=weighted_sum / weight_total,
        unmatched=unmatched,
        notes=notes,
    )
