import numpy as np

from tli import OpTag, extract_paths, load_graph, segment, topo_order

from generators import random_model
from toys import (
    chain,
    concat_branches,
    doc_text,
    node,
    rename_order_preserving,
    residual,
)


def paths_by_name(graph, tensors=None):
    shapes = None
    if tensors is not None:
        shapes = {k: v.shape for k, v in tensors.items()}
    return {p.param_name: p for p in extract_paths(graph, segment(graph), shapes)}


def test_chain_is_single_submodule():
    g, _ = chain()
    subs = segment(g)
    assert len(subs) == 1
    assert subs[0].boundary_kind is OpTag.OUTPUT
    assert subs[0].index_from_head == 0
    assert set(subs[0].node_ids) == {n.id for n in g.nodes if n.kind.tag is not OpTag.INPUT}


def test_residual_two_submodules():
    g, _ = residual()
    subs = segment(g)
    assert len(subs) == 2
    assert subs[0].boundary_kind is OpTag.ADD
    assert subs[0].node_ids == ("n1_conv", "n2_act", "n3_conv", "n4_add")
    assert subs[1].boundary_kind is OpTag.OUTPUT
    assert subs[1].node_ids == ("n5_conv", "n6_act", "n7_lin", "n8_out")


def test_three_sequential_merges_make_four_submodules():
    nodes = [node("in0", "input")]
    prev = "in0"
    for i in range(3):
        conv_id, add_id = f"n{2 * i}_conv", f"n{2 * i + 1}_add"
        nodes.append(node(conv_id, "conv", [prev], [(f"w{i}", "weight")]))
        nodes.append(node(add_id, "add", [conv_id, prev]))
        prev = add_id
    nodes.append(node("n9_conv", "conv", [prev], [("w9", "weight")]))
    nodes.append(node("n9_out", "output", ["n9_conv"]))
    g = load_graph(doc_text("m", nodes, ["n9_out"]))
    subs = segment(g)
    assert len(subs) == 4
    assert [s.boundary_kind for s in subs] == [OpTag.ADD] * 3 + [OpTag.OUTPUT]
    assert [s.index_from_head for s in subs] == [0, 1, 2, 3]


def test_sole_conv_paths():
    g = load_graph(doc_text("m", [
        node("in", "input"),
        node("conv", "conv", ["in"], [("w", "weight"), ("b", "bias")]),
        node("out", "output", ["conv"]),
    ], ["out"]))
    paths = extract_paths(g, segment(g))
    by_name = {p.param_name: p for p in paths}
    assert set(by_name) == {"w", "b"}
    for p in by_name.values():
        # The conv and the output land in one submodule; the conv's own
        # path stops at the conv.
        assert p.op_sequence == (OpTag.CONV,)
        assert p.depth == 1
        assert p.submodule_pos == 0.0
    assert by_name["w"].role.value == "weight"
    assert by_name["b"].role.value == "bias"


def test_chain_second_conv_path():
    g, t = chain()
    p = paths_by_name(g, t)["n3.w"]
    assert p.op_sequence == (OpTag.CONV, OpTag.ACTIVATION, OpTag.CONV)
    assert p.activations == ("relu",)
    assert p.depth == 3


def test_parallel_branch_indices():
    g, t = concat_branches()
    paths = paths_by_name(g, t)
    assert paths["ba.w"].branch_index == 0
    assert paths["bb.w"].branch_index == 1
    assert paths["ba.w"].branch_count == 2
    assert paths["bb.w"].branch_count == 2
    # Tail conv sits in the second submodule on a single branch.
    assert paths["tail.w"].branch_index == 0
    assert paths["tail.w"].branch_count == 1
    assert paths["tail.w"].submodule_pos == 1.0


def test_residual_identity_skip_counts_as_branch():
    g, t = residual()
    paths = paths_by_name(g, t)
    # add has two inputs (conv chain + identity): two branches; the
    # identity tail "in0" sorts before "n3_conv".
    assert paths["cb.w"].branch_count == 2
    assert paths["cb.w"].branch_index == 1
    assert paths["ca.w"].submodule_pos == 0.0
    assert paths["cc.w"].submodule_pos == 1.0


def test_path_count_equals_param_count_on_random_graphs():
    rng = np.random.default_rng(21)
    for i in range(40):
        g, t = random_model(rng, name=f"m{i}")
        paths = extract_paths(g, segment(g), {k: v.shape for k, v in t.items()})
        assert len(paths) == len(g.param_index)
        assert {p.param_name for p in paths} == set(g.param_index)
        for p in paths:
            assert p.depth == len(p.op_sequence) >= 1
            assert 0 <= p.branch_index < p.branch_count
            assert 0.0 <= p.submodule_pos <= 1.0


def test_submodule_pos_non_decreasing_in_topo_order():
    rng = np.random.default_rng(22)
    for i in range(20):
        g, _ = random_model(rng, name=f"m{i}")
        order = {nid: k for k, nid in enumerate(topo_order(g))}
        paths = extract_paths(g, segment(g))
        owner = {p.param_name: g.param_index[p.param_name].node_id for p in paths}
        ranked = sorted(paths, key=lambda p: order[owner[p.param_name]])
        positions = [p.submodule_pos for p in ranked]
        assert positions == sorted(positions)


def test_rename_preserves_features():
    rng = np.random.default_rng(23)
    for i in range(15):
        g, t = random_model(rng, name=f"m{i}")
        g2, t2 = rename_order_preserving(g, t)
        original = extract_paths(g, segment(g), {k: v.shape for k, v in t.items()})
        renamed = extract_paths(g2, segment(g2), {k: v.shape for k, v in t2.items()})
        strip = lambda p: (p.op_sequence, p.activations, p.depth, p.branch_index,
                           p.branch_count, p.submodule_pos, p.shape, p.role)
        assert [strip(p) for p in original] == [strip(p) for p in renamed]


def test_submodules_partition_non_input_nodes():
    rng = np.random.default_rng(24)
    for i in range(25):
        g, _ = random_model(rng, name=f"m{i}")
        subs = segment(g)
        seen: list[str] = []
        for s in subs:
            seen.extend(s.node_ids)
        non_input = {n.id for n in g.nodes if n.kind.tag is not OpTag.INPUT}
        assert len(seen) == len(set(seen))
        assert set(seen) == non_input
        assert [s.index_from_head for s in subs] == list(range(len(subs)))


def test_graph_ending_in_merge_has_no_tail_submodule():
    g = load_graph(doc_text("m", [
        node("in", "input"),
        node("a_conv", "conv", ["in"], [("a.w", "weight")]),
        node("b_conv", "conv", ["in"], [("b.w", "weight")]),
        node("c_add", "add", ["a_conv", "b_conv"]),
    ], ["c_add"]))
    subs = segment(g)
    assert len(subs) == 1
    assert subs[0].boundary_kind is OpTag.ADD
    paths = extract_paths(g, subs)
    assert {p.param_name for p in paths} == {"a.w", "b.w"}
    assert all(p.branch_count == 2 for p in paths)


def test_multi_output_graph():
    g = load_graph(doc_text("m", [
        node("in", "input"),
        node("a_conv", "conv", ["in"], [("a.w", "weight")]),
        node("b_head", "linear", ["a_conv"], [("b.w", "weight")]),
        node("c_head", "linear", ["a_conv"], [("c.w", "weight")]),
    ], ["b_head", "c_head"]))
    paths = extract_paths(g, segment(g))
    assert len(paths) == 3


def test_duplicate_input_edges_collapse_to_one_branch():
    g = load_graph(doc_text("m", [
        node("in", "input"),
        node("a_conv", "conv", ["in"], [("a.w", "weight")]),
        node("b_add", "add", ["a_conv", "a_conv"]),
        node("c_out", "output", ["b_add"]),
    ], ["c_out"]))
    paths = {p.param_name: p for p in extract_paths(g, segment(g))}
    assert paths["a.w"].branch_count == 1
    assert paths["a.w"].branch_index == 0


def test_fanin_below_merge_is_linearized():
    # conv_c consumes two in-submodule producers without a merge op.
    g = load_graph(doc_text("m", [
        node("in", "input"),
        node("a_conv", "conv", ["in"], [("a.w", "weight")]),
        node("b_pool", "pool", ["in"]),
        node("c_conv", "conv", ["a_conv", "b_pool"], [("c.w", "weight")]),
        node("out", "output", ["c_conv"]),
    ], ["out"]))
    paths = {p.param_name: p for p in extract_paths(g, segment(g))}
    p = paths["c.w"]
    assert p.fanin_linearized
    # Followed branch is a_conv (tie-break); b_pool recorded kind-only,
    # in topo order.
    assert p.op_sequence == (OpTag.CONV, OpTag.POOL, OpTag.CONV)
    assert not paths["a.w"].fanin_linearized
