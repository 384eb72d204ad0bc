import numpy as np
import pytest

from core.errors import PreconditionError
from core.graph import AttributedGraph, GraphCollection, assign_degree_labels, neighbors


def test_neighbors_of_triangle(triangle):
    assert neighbors(triangle, 0) == {1, 2}


def test_neighbors_of_single_node(single_node):
    assert neighbors(single_node, 0) == set()


def test_neighbors_of_path_middle(path3):
    assert neighbors(path3, 1) == {0, 2}


def test_neighbors_invalid_index(path3):
    with pytest.raises(ValueError):
        neighbors(path3, 3)
    with pytest.raises(ValueError):
        neighbors(path3, -1)


def test_neighbors_symmetric():
    rng = np.random.default_rng(3)
    rows, cols = np.triu_indices(9, k=1)
    keep = rng.random(rows.size) < 0.4
    g = AttributedGraph(node_count=9, edges=zip(rows[keep], cols[keep]))
    for u in range(9):
        for v in range(9):
            assert (u in neighbors(g, v)) == (v in neighbors(g, u))


def test_edges_normalized_and_deduplicated():
    g = AttributedGraph(node_count=3, edges=[(1, 0), (0, 1), (2, 1)])
    assert g.edges == frozenset({(0, 1), (1, 2)})
    assert g.edge_count == 2


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        AttributedGraph(node_count=2, edges=[(1, 1)])


def test_edge_endpoint_out_of_range():
    with pytest.raises(ValueError):
        AttributedGraph(node_count=2, edges=[(0, 2)])


def test_label_count_must_match():
    with pytest.raises(ValueError):
        AttributedGraph(node_count=3, labels=(0, 1))


def test_attributes_shape_checked():
    with pytest.raises(ValueError):
        AttributedGraph(node_count=2, attributes=np.zeros((3, 2)))
    g = AttributedGraph(node_count=2, attributes=[[1.0, 2.0], [3.0, 4.0]])
    assert g.attribute_dim == 2
    with pytest.raises(ValueError):
        g.attributes[0, 0] = 5.0


def test_assign_degree_labels_triangle():
    g = AttributedGraph(node_count=3, edges={(0, 1), (1, 2), (0, 2)})
    assert assign_degree_labels(g).labels == (2, 2, 2)


def test_assign_degree_labels_path():
    g = AttributedGraph(node_count=3, edges={(0, 1), (1, 2)})
    assert assign_degree_labels(g).labels == (1, 2, 1)


def test_assign_degree_labels_isolated_node():
    assert assign_degree_labels(AttributedGraph(node_count=1)).labels == (0,)


def test_assign_degree_labels_keeps_existing_unless_forced(path3):
    assert assign_degree_labels(path3).labels == (0, 1, 2)
    assert assign_degree_labels(path3, force=True).labels == (1, 2, 1)


def test_require_labels_and_attributes():
    g = AttributedGraph(node_count=2)
    with pytest.raises(PreconditionError):
        g.require_labels()
    with pytest.raises(PreconditionError):
        g.require_attributes()


def test_collection_rejects_mixed_dimensions():
    a = AttributedGraph(node_count=1, attributes=[[1.0]])
    b = AttributedGraph(node_count=1, attributes=[[1.0, 2.0]])
    with pytest.raises(ValueError):
        GraphCollection(graphs=[a, b])


def test_collection_helpers():
    graphs = [AttributedGraph(node_count=1, attributes=[[float(i)]], class_label=i % 2) for i in range(4)]
    collection = GraphCollection(graphs=graphs, name="toy")
    assert len(collection) == 4
    assert collection.attribute_dim == 1
    assert collection.class_labels() == [0, 1, 0, 1]
    subset = collection.subset([1, 3])
    assert subset.class_labels() == [1, 1]
    assert subset.name == "toy"


def test_class_labels_missing():
    collection = GraphCollection(graphs=[AttributedGraph(node_count=1)])
    with pytest.raises(PreconditionError):
        collection.class_labels()
