"""Clustering a graph into submodules and extracting per-parameter paths.

A submodule is a run of non-input nodes, in topological order, that ends
immediately after a merge operation (add/mul/concat); the trailing run,
if any, ends at the graph output.  Each parameter tensor then gets one
execution path: the op sequence from its submodule's entry up to the
owning node, plus positional features used by the matcher.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ShapeError
from .graph_model import MERGE_TAGS, GraphDoc, OpTag, ParamRole, topo_order


@dataclass(frozen=True)
class Submodule:
    """One cluster of the segmented graph.

    index_from_head 0 is nearest the inputs; boundary_kind is the merge
    op that closed the cluster, or OUTPUT for the final one.
    """

    index_from_head: int
    node_ids: tuple[str, ...]
    boundary_kind: OpTag


@dataclass(frozen=True)
class ExecutionPath:
    """Matching features of one parameter tensor.

    op_sequence runs from the submodule entry boundary to the owning node
    inclusive; activations is the multiset of activation labels along it
    (kept sorted); submodule_pos is the owning submodule's index
    normalized to [0, 1]; shape is None when no tensor store was given.
    fanin_linearized flags op sequences that crossed a non-merge fan-in
    and were flattened in topological order.
    """

    param_name: str
    op_sequence: tuple[OpTag, ...]
    activations: tuple[str, ...]
    depth: int
    branch_index: int
    branch_count: int
    submodule_pos: float
    shape: tuple[int, ...] | None
    role: ParamRole
    fanin_linearized: bool = False


def segment(g: GraphDoc) -> list[Submodule]:
    """Partition all non-input nodes into submodules.

    Walks the deterministic topological order; every merge node closes
    the submodule it belongs to.
    """
    subs: list[Submodule] = []
    current: list[str] = []
    for node_id in topo_order(g):
        node = g.node(node_id)
        if node.kind.tag is OpTag.INPUT:
            continue
        current.append(node_id)
        if node.kind.tag in MERGE_TAGS:
            subs.append(Submodule(len(subs), tuple(current), node.kind.tag))
            current = []
    if current:
        subs.append(Submodule(len(subs), tuple(current), OpTag.OUTPUT))
    return subs


def _branch_layout(g: GraphDoc, sub: Submodule) -> tuple[dict[str, int], int]:
    """Branch index per tail node feeding the submodule's closing node.

    The closing node's distinct input ids, sorted ascending, define the
    parallel branches; branch_count counts them all, including branches
    that carry no node inside the submodule (identity skips).
    """
    closing = g.node(sub.node_ids[-1])
    tails = sorted(set(closing.inputs))
    return {tail: i for i, tail in enumerate(tails)}, max(1, len(tails))


def _branch_of(g: GraphDoc, start: str, members: frozenset[str],
               consumers: Mapping[str, tuple[str, ...]],
               tail_index: Mapping[str, int]) -> int:
    """Smallest branch index among tails reachable forward from start
    without leaving the submodule; 0 when none is reachable."""
    best: int | None = None
    seen = {start}
    frontier = [start]
    while frontier:
        node_id = frontier.pop()
        idx = tail_index.get(node_id)
        if idx is not None and (best is None or idx < best):
            best = idx
        for nxt in consumers.get(node_id, ()):
            if nxt in members and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return 0 if best is None else best


def _walk_back(g: GraphDoc, start: str, members: frozenset[str]) -> tuple[set[str], bool]:
    """Nodes of the op sequence for a parameter owned by ``start``.

    Follows input edges backward inside the submodule; at a fan-in the
    tie-break (smallest id) branch is followed and the skipped inputs are
    still recorded, kind-only, so the sequence stays linear.
    """
    collected = {start}
    fanin = False
    current = start
    while True:
        ins = sorted({i for i in g.node(current).inputs if i in members})
        if not ins:
            return collected, fanin
        if len(ins) > 1:
            fanin = True
            collected.update(ins[1:])
        current = ins[0]
        collected.add(current)


def extract_paths(
    g: GraphDoc,
    subs: list[Submodule],
    shapes: Mapping[str, tuple[int, ...]] | None = None,
) -> list[ExecutionPath]:
    """One ExecutionPath per parameter of the graph, in deterministic
    order (topological order of owning nodes, declaration order within a
    node).

    ``shapes`` maps parameter names to tensor shapes (usually from the
    companion store); when omitted every path's shape is None and the
    matcher falls back to role-only shape comparison.
    """
    order = topo_order(g)
    topo_pos = {node_id: i for i, node_id in enumerate(order)}
    sub_of: dict[str, int] = {}
    for sub in subs:
        for node_id in sub.node_ids:
            sub_of[node_id] = sub.index_from_head

    consumers: dict[str, tuple[str, ...]] = {}
    for node in g.nodes:
        for src in node.inputs:
            consumers[src] = consumers.get(src, ()) + (node.id,)

    denominator = max(1, len(subs) - 1)
    paths: list[ExecutionPath] = []
    for node_id in order:
        node = g.node(node_id)
        if not node.param_refs:
            continue
        sub = subs[sub_of[node_id]]
        members = frozenset(sub.node_ids)
        tail_index, branch_count = _branch_layout(g, sub)
        seq_nodes, fanin = _walk_back(g, node_id, members)
        ordered = sorted(seq_nodes, key=topo_pos.__getitem__)
        op_sequence = tuple(g.node(n).kind.tag for n in ordered)
        activations = tuple(sorted(
            g.node(n).kind.activation for n in ordered
            if g.node(n).kind.tag is OpTag.ACTIVATION
        ))
        branch_index = _branch_of(g, node_id, members, consumers, tail_index)
        submodule_pos = sub.index_from_head / denominator
        for param in node.param_refs:
            shape: tuple[int, ...] | None = None
            if shapes is not None:
                if param not in shapes:
                    raise ShapeError(f"no tensor named {param!r} in the model's store")
                shape = tuple(shapes[param])
            paths.append(ExecutionPath(
                param_name=param,
                op_sequence=op_sequence,
                activations=activations,
                depth=len(op_sequence),
                branch_index=branch_index,
                branch_count=branch_count,
                submodule_pos=submodule_pos,
                shape=shape,
                role=g.param_index[param].role,
                fanin_linearized=fanin,
            ))
    return paths


def path_to_dict(p: ExecutionPath) -> dict:
    """JSON-friendly view of a path (used by the inspect command)."""
    return {
        "param": p.param_name,
        "ops": [t.value for t in p.op_sequence],
        "activations": list(p.activations),
        "depth": p.depth,
        "branch_index": p.branch_index,
        "branch_count": p.branch_count,
        "submodule_pos": p.submodule_pos,
        "shape": list(p.shape) if p.shape is not None else None,
        "role": p.role.value,
        "fanin_linearized": p.fanin_linearized,
    }


def submodule_to_dict(s: Submodule) -> dict:
    return {
        "index_from_head": s.index_from_head,
        "node_ids": list(s.node_ids),
        "boundary_kind": s.boundary_kind.value,
    }
