"""Shared builders and independent brute-force oracles for the test suite."""

import numpy as np
import pytest

from depnn.adp import Arc, DependencyGraph, Direction, PathStep, Token
from depnn.classifier import Model, TrainConfig
from depnn.corpus import Vocabulary


def graph_of(n_tokens, arcs, forms=None, inactive=(), **token_fields):
    """Build a graph from (head, dependent, relation) triples. token_fields
    maps an index to extra Token keyword arguments."""
    tokens = []
    for i in range(1, n_tokens + 1):
        form = forms[i - 1] if forms else f"w{i}"
        tokens.append(Token(i, form, **token_fields.get(i, {})))
    return DependencyGraph(tokens, [Arc(*a) for a in arcs], inactive)


def random_tree(rng, max_nodes=12, labels=("nsubj", "dobj", "det", "amod", "prep_with")):
    """Random recursive tree rooted at token 1."""
    n = 1 + int(rng.integers(max_nodes))
    tokens = [Token(i, f"w{i}") for i in range(1, n + 1)]
    arcs = [Arc(0, 1, "root")]
    for i in range(2, n + 1):
        parent = 1 + int(rng.integers(i - 1))
        arcs.append(Arc(parent, i, labels[int(rng.integers(len(labels)))]))
    return DependencyGraph(tokens, arcs)


def enumerate_tree_path(graph, a, b):
    """Exhaustive-DFS path oracle: the unique simple path from a to b in the
    undirected view, with relation labels and directions read straight off
    the arc set."""
    adjacency = {}
    relation_of = {}
    for arc in graph.arcs:
        if arc.head == 0:
            continue
        adjacency.setdefault(arc.head, []).append(arc.dependent)
        adjacency.setdefault(arc.dependent, []).append(arc.head)
        relation_of[(arc.head, arc.dependent)] = arc.relation

    found = []

    def dfs(node, seen, acc):
        if node == b:
            found.append(list(acc))
            return
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                acc.append(nxt)
                dfs(nxt, seen, acc)
                acc.pop()
                seen.remove(nxt)

    dfs(a, {a}, [a])
    assert len(found) == 1, f"expected a unique simple path, found {len(found)}"
    tokens = found[0]
    steps = [PathStep(tokens[0])]
    for prev, cur in zip(tokens, tokens[1:]):
        if (prev, cur) in relation_of:
            steps.append(PathStep(cur, relation_of[(prev, cur)], Direction.FORWARD))
        else:
            steps.append(PathStep(cur, relation_of[(cur, prev)], Direction.INVERSE))
    return steps


def offpath_descendants(graph, path_tokens, word):
    """Reachability oracle: descendants of a path word, never stepping onto
    another path token."""
    out = set()
    stack = [word]
    while stack:
        node = stack.pop()
        for arc in graph.children(node):
            if arc.dependent in path_tokens or arc.dependent in out:
                continue
            out.add(arc.dependent)
            stack.append(arc.dependent)
    return out


TINY_CONFIG = dict(dim=6, dim_c=4, hidden=5, window=3, lex_dim=3, seed=11)


def tiny_model(instances, **overrides):
    settings = dict(TINY_CONFIG)
    settings.update(overrides)
    config = TrainConfig(**settings)
    return Model.build(config, Vocabulary.build(instances))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
