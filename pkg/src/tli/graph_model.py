"""Neutral computation-graph interchange representation.

A model is described by a ``.tligraph.json`` document: a named DAG of
operation nodes, each optionally owning parameter tensors identified by
name and role.  The engine never sees framework-specific op names;
exporters normalize to the fixed kind vocabulary below (anything else
must be exported as ``opaque``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

import networkx as nx

from .errors import CycleError, DanglingRefError, SchemaError


class OpTag(str, Enum):
    """Operation kinds of the interchange format."""

    CONV = "conv"
    LINEAR = "linear"
    BATCHNORM = "batchnorm"
    LAYERNORM = "layernorm"
    ACTIVATION = "activation"
    ADD = "add"
    MUL = "mul"
    CONCAT = "concat"
    POOL = "pool"
    RESHAPE = "reshape"
    INPUT = "input"
    OUTPUT = "output"
    OPAQUE = "opaque"


#: Kinds that terminate a submodule during segmentation.
MERGE_TAGS = frozenset({OpTag.ADD, OpTag.MUL, OpTag.CONCAT})


class ParamRole(str, Enum):
    """What a parameter tensor is for, within its owning node."""

    WEIGHT = "weight"
    BIAS = "bias"
    SCALE = "scale"
    SHIFT = "shift"
    RUNNING_STAT = "running_stat"


#: Roles belonging to normalization layers (the norm-policy targets).
NORM_ROLES = frozenset({ParamRole.SCALE, ParamRole.SHIFT, ParamRole.RUNNING_STAT})


@dataclass(frozen=True)
class OpKind:
    """Operation kind plus the activation label when tag is ``activation``."""

    tag: OpTag
    activation: str | None = None

    def __post_init__(self) -> None:
        if (self.tag is OpTag.ACTIVATION) != (self.activation is not None):
            raise SchemaError(
                f"activation label must be present iff kind is 'activation' "
                f"(got tag={self.tag.value!r}, activation={self.activation!r})"
            )


AttrValue = int | float | tuple[int, ...]


@dataclass(frozen=True)
class Node:
    """One operation of the graph.

    ``inputs`` is the ordered list of producer node ids; ``param_refs``
    the ordered names of the parameter tensors this node owns (roles live
    in the owning GraphDoc's param_index).  ``attrs`` is informational
    only (stride, kernel size, ...) and never influences matching.
    """

    id: str
    kind: OpKind
    inputs: tuple[str, ...] = ()
    param_refs: tuple[str, ...] = ()
    attrs: Mapping[str, AttrValue] = field(default_factory=dict)


@dataclass(frozen=True)
class ParamInfo:
    """Owning node and role of one named parameter tensor."""

    node_id: str
    role: ParamRole


@dataclass(frozen=True)
class GraphDoc:
    """A validated, acyclic computation graph.

    Immutable after load; safe to share across threads read-only.
    """

    name: str
    nodes: tuple[Node, ...]
    outputs: tuple[str, ...]
    param_index: Mapping[str, ParamInfo]

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    @property
    def _by_id(self) -> dict[str, Node]:
        # Derived lookup, built lazily; object.__setattr__ because frozen.
        cached = self.__dict__.get("_by_id_cache")
        if cached is None:
            cached = {n.id: n for n in self.nodes}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphDoc):
            return NotImplemented
        return (
            self.name == other.name
            and self.nodes == other.nodes
            and self.outputs == other.outputs
            and dict(self.param_index) == dict(other.param_index)
        )


_KIND_BY_VALUE = {t.value: t for t in OpTag}
_ROLE_BY_VALUE = {r.value: r for r in ParamRole}

_TOP_KEYS = {"name", "nodes", "outputs"}
_NODE_KEYS = {"id", "kind", "activation", "inputs", "params", "attrs"}
_PARAM_KEYS = {"name", "role"}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _parse_attrs(raw: Any, where: str) -> dict[str, AttrValue]:
    _require(isinstance(raw, dict), f"{where}: 'attrs' must be an object")
    out: dict[str, AttrValue] = {}
    for key, value in raw.items():
        _require(isinstance(key, str), f"{where}: attr keys must be strings")
        if isinstance(value, bool):
            raise SchemaError(f"{where}: attr {key!r} must be a number or int list")
        if isinstance(value, (int, float)):
            out[key] = value
        elif isinstance(value, list) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            out[key] = tuple(value)
        else:
            raise SchemaError(f"{where}: attr {key!r} must be a number or int list")
    return out


def _parse_node(raw: Any, position: int) -> tuple[Node, list[tuple[str, str]]]:
    """Returns the node plus its (param name, role string) pairs."""
    where = f"nodes[{position}]"
    _require(isinstance(raw, dict), f"{where}: node must be an object")
    unknown = set(raw) - _NODE_KEYS
    _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")
    for key in ("id", "kind", "inputs", "params"):
        _require(key in raw, f"{where}: missing required key {key!r}")

    node_id = raw["id"]
    _require(isinstance(node_id, str) and node_id != "", f"{where}: 'id' must be a non-empty string")
    where = f"node {node_id!r}"

    kind_str = raw["kind"]
    _require(isinstance(kind_str, str), f"{where}: 'kind' must be a string")
    tag = _KIND_BY_VALUE.get(kind_str)
    _require(tag is not None, f"{where}: unknown kind {kind_str!r}")

    activation = raw.get("activation")
    if activation is not None:
        _require(isinstance(activation, str) and activation != "",
                 f"{where}: 'activation' must be a non-empty string")
    if (tag is OpTag.ACTIVATION) != (activation is not None):
        raise SchemaError(
            f"{where}: 'activation' is required for kind 'activation' and "
            f"forbidden otherwise"
        )

    inputs = raw["inputs"]
    _require(isinstance(inputs, list) and all(isinstance(i, str) for i in inputs),
             f"{where}: 'inputs' must be a list of node ids")

    params_raw = raw["params"]
    _require(isinstance(params_raw, list), f"{where}: 'params' must be a list")
    params: list[tuple[str, str]] = []
    for entry in params_raw:
        _require(isinstance(entry, dict), f"{where}: each param must be an object")
        unknown = set(entry) - _PARAM_KEYS
        _require(not unknown, f"{where}: unknown param keys {sorted(unknown)}")
        _require("name" in entry and "role" in entry,
                 f"{where}: params need 'name' and 'role'")
        pname, role = entry["name"], entry["role"]
        _require(isinstance(pname, str) and pname != "",
                 f"{where}: param 'name' must be a non-empty string")
        _require(isinstance(role, str) and role in _ROLE_BY_VALUE,
                 f"{where}: unknown param role {role!r}")
        params.append((pname, role))
    if params and tag is OpTag.INPUT:
        raise SchemaError(f"{where}: input nodes cannot own parameters")

    attrs = _parse_attrs(raw.get("attrs", {}), where)
    node = Node(
        id=node_id,
        kind=OpKind(tag, activation),
        inputs=tuple(inputs),
        param_refs=tuple(name for name, _ in params),
        attrs=attrs,
    )
    return node, params


def load_graph(document: str | bytes) -> GraphDoc:
    """Parse and validate an interchange JSON document.

    Raises SchemaError for structural problems, DanglingRefError for edges
    or outputs referencing unknown node ids, CycleError if the graph is
    not a DAG.
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"document is not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"document is not valid JSON: {exc}") from exc

    _require(isinstance(raw, dict), "top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"top level: unknown keys {sorted(unknown)}")
    for key in _TOP_KEYS:
        _require(key in raw, f"top level: missing required key {key!r}")
    _require(isinstance(raw["name"], str) and raw["name"] != "",
             "top level: 'name' must be a non-empty string")
    _require(isinstance(raw["nodes"], list), "top level: 'nodes' must be a list")
    _require(isinstance(raw["outputs"], list)
             and all(isinstance(o, str) for o in raw["outputs"]),
             "top level: 'outputs' must be a list of node ids")

    nodes: list[Node] = []
    param_index: dict[str, ParamInfo] = {}
    seen_ids: set[str] = set()
    for position, raw_node in enumerate(raw["nodes"]):
        node, params = _parse_node(raw_node, position)
        _require(node.id not in seen_ids, f"duplicate node id {node.id!r}")
        seen_ids.add(node.id)
        for pname, role in params:
            _require(pname not in param_index,
                     f"parameter name {pname!r} owned by more than one node")
            param_index[pname] = ParamInfo(node.id, _ROLE_BY_VALUE[role])
        nodes.append(node)

    _require(any(n.kind.tag is OpTag.INPUT for n in nodes),
             "graph needs at least one input node")
    _require(len(raw["outputs"]) > 0, "graph needs at least one output reference")

    # Referential integrity after structure: distinct error type.
    for node in nodes:
        for src in node.inputs:
            if src not in seen_ids:
                raise DanglingRefError(f"node {node.id!r} has edge from unknown id {src!r}")
    for out in raw["outputs"]:
        if out not in seen_ids:
            raise DanglingRefError(f"outputs reference unknown id {out!r}")

    graph = nx.DiGraph()
    graph.add_nodes_from(seen_ids)
    for node in nodes:
        for src in node.inputs:
            if src == node.id:
                raise CycleError(f"node {node.id!r} has a self-loop")
            graph.add_edge(src, node.id)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = " -> ".join(u for u, _ in nx.find_cycle(graph))
        raise CycleError(f"graph contains a cycle: {cycle}")

    return GraphDoc(
        name=raw["name"],
        nodes=tuple(nodes),
        outputs=tuple(raw["outputs"]),
        param_index=param_index,
    )


def serialize_graph(g: GraphDoc) -> str:
    """Canonical JSON text; load_graph(serialize_graph(g)) == g."""
    doc = {
        "name": g.name,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.tag.value,
                **({"activation": n.kind.activation} if n.kind.activation is not None else {}),
                "inputs": list(n.inputs),
                "params": [
                    {"name": p, "role": g.param_index[p].role.value} for p in n.param_refs
                ],
                "attrs": {
                    k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in sorted(n.attrs.items())
                },
            }
            for n in g.nodes
        ],
        "outputs": list(g.outputs),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def topo_order(g: GraphDoc) -> list[str]:
    """Topological order of node ids, ties broken by ascending id.

    Deterministic: repeated calls (and re-loads of the same document)
    always produce the same order.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(n.id for n in g.nodes)
    for node in g.nodes:
        graph.add_edges_from((src, node.id) for src in node.inputs)
    return list(nx.lexicographical_topological_sort(graph))
