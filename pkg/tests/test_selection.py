import math

import numpy as np
import pytest

from eremu.buffer import DomainDataset, new_buffer
from eremu.errors import ContractViolation
from eremu.kernels import MultiKernel, mk_mmd
from eremu.selection import (
    EMPTY,
    SelectionResult,
    ddm_es,
    random_selection,
    rank_domains_by_distance,
    sigmoid,
)
from oracles import naive_descending_order


def test_sigmoid_values():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(1.0) == pytest.approx(0.731059, abs=1e-6)
    assert sigmoid(1.0) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-15)
    assert sigmoid(50.0) == pytest.approx(1.0, abs=1e-15)
    assert 0 < sigmoid(-800.0) < 1e-300 or sigmoid(-800.0) == 0.0
    xs = np.linspace(-20, 20, 401)
    ys = [sigmoid(x) for x in xs]
    assert all(b >= a for a, b in zip(ys, ys[1:]))


def test_rank_examples():
    assert rank_domains_by_distance([("A", 0.3), ("B", 0.1)]) == [0, 1]
    assert rank_domains_by_distance([("A", 0.3), ("B", 0.3)]) == [0, 1]
    assert rank_domains_by_distance([("A", 0.3), ("B", 0.1)], descending=False) == [1, 0]
    assert rank_domains_by_distance([("A", 0.3), ("B", 0.3)], descending=False) == [0, 1]
    with pytest.raises(ContractViolation):
        rank_domains_by_distance([("A", math.nan)])


def test_rank_matches_naive_sort(rng):
    for _ in range(50):
        # rounded values force ties
        pairs = [(f"d{i}", float(v)) for i, v in enumerate(np.round(rng.uniform(size=10), 1))]
        assert rank_domains_by_distance(pairs) == naive_descending_order(pairs)


def point_domain(name, idx, value):
    return DomainDataset(name, idx, [[value]], [0])


def buffer_with(values, capacity=10):
    buf = new_buffer(capacity, 5)
    rng = np.random.default_rng(0)
    for i, (name, v) in enumerate(values, start=1):
        buf.update(point_domain(name, i, v), rng)
    return buf


def test_empty_buffer_returns_empty():
    res = ddm_es(new_buffer(3, 3), point_domain("cur", 1, 0.0), 2, MultiKernel.gaussian([1.0]))
    assert res is EMPTY and len(res) == 0 and not res


def test_selects_most_distant_with_sigmoid_weights():
    # linear kernel on single points: distance = squared gap
    mk = MultiKernel.gaussian([1.0])
    lin = MultiKernel((__import__("eremu.kernels", fromlist=["KernelSpec"]).KernelSpec("linear"),), (1.0,))
    buf = buffer_with([("A", math.sqrt(0.1)), ("B", math.sqrt(0.5)), ("C", math.sqrt(0.9))])
    cur = point_domain("cur", 4, 0.0)
    res = ddm_es(buf, cur, 2, lin)
    assert res.domain_ids == ("C", "B")
    np.testing.assert_allclose(res.distances, [0.9, 0.5], atol=1e-12)
    np.testing.assert_allclose(res.weights, [0.710950, 0.622459], atol=1e-6)
    assert ddm_es(buf, cur, 2, mk).domain_ids == ("C", "B")


def test_literal_ascending_variant():
    from eremu.kernels import KernelSpec

    lin = MultiKernel((KernelSpec("linear"),), (1.0,))
    buf = buffer_with([("A", 0.3), ("B", 0.7), ("C", 0.9)])
    res = ddm_es(buf, point_domain("cur", 4, 0.0), 2, lin, ascending=True)
    assert res.domain_ids == ("A", "B")


def test_selection_clamped_to_buffer_size():
    buf = buffer_with([("A", 1.0)])
    res = ddm_es(buf, point_domain("cur", 2, 0.0), 5, MultiKernel.gaussian([1.0]))
    assert res.domain_ids == ("A",)
    assert res.weights[0] == sigmoid(res.distances[0])


def test_ties_prefer_older():
    buf = buffer_with([("A", 1.0), ("B", -1.0), ("C", 0.0)])
    res = ddm_es(buf, point_domain("cur", 4, 0.0), 1, MultiKernel.gaussian([1.0]))
    assert res.domain_ids == ("A",)


def test_dimension_mismatch():
    buf = buffer_with([("A", 1.0)])
    cur = DomainDataset("cur", 2, [[0.0, 0.0]], [0])
    with pytest.raises(ContractViolation):
        ddm_es(buf, cur, 1, MultiKernel.gaussian([1.0]))


def test_invalid_l():
    with pytest.raises(ContractViolation):
        ddm_es(buffer_with([("A", 1.0)]), point_domain("c", 2, 0.0), 0, MultiKernel.gaussian([1.0]))


def random_buffer(rng, n_domains, dim=2):
    buf = new_buffer(10, 6)
    for i in range(1, n_domains + 1):
        n = int(rng.integers(2, 8))
        buf.update(
            DomainDataset(f"d{i}", i, rng.normal(size=(n, dim)) + rng.normal(scale=2, size=dim), np.zeros(n, int)),
            rng,
        )
    return buf


def test_purity_and_weight_properties(rng):
    mk = MultiKernel.gaussian([0.5, 1.0, 2.0])
    for _ in range(20):
        buf = random_buffer(rng, int(rng.integers(1, 11)))
        cur = DomainDataset("cur", 99, rng.normal(size=(7, 2)), np.zeros(7, int))
        before = buf.fingerprint()
        l = int(rng.integers(1, 12))
        r1, r2 = ddm_es(buf, cur, l, mk), ddm_es(buf, cur, l, mk)
        assert buf.fingerprint() == before
        assert r1 == r2
        assert len(r1) == min(l, len(buf))
        assert all(0.5 < w < 1 for w in r1.weights)
        assert all(a >= b for a, b in zip(r1.weights, r1.weights[1:]))
        assert all(a >= b for a, b in zip(r1.distances, r1.distances[1:]))


def test_ranking_invariant_to_positive_scaling(rng):
    for _ in range(10):
        buf = random_buffer(rng, 8)
        cur = DomainDataset("cur", 99, rng.normal(size=(7, 2)), np.zeros(7, int))
        entries = buf.stored_domains()
        base = [mk_mmd(cur.features, e.samples.features, MultiKernel.gaussian([0.5, 2.0], [0.3, 0.7])) for e in entries]
        scaled = [3.7 * d for d in base]
        ids = [e.domain_id for e in entries]
        assert rank_domains_by_distance(list(zip(ids, base))) == rank_domains_by_distance(list(zip(ids, scaled)))


def test_random_selection():
    buf = buffer_with([("A", 0.0), ("B", 1.0), ("C", 2.0), ("D", 3.0)])
    res = random_selection(buf, 2, np.random.default_rng(3))
    assert len(res) == 2 and res.weights == (1.0, 1.0)
    assert all(math.isnan(d) for d in res.distances)
    again = random_selection(buf, 2, np.random.default_rng(3))
    assert again.domain_ids == res.domain_ids
    assert random_selection(buf, 10, np.random.default_rng(0)).domain_ids == ("A", "B", "C", "D")
    assert random_selection(new_buffer(2, 2), 3, np.random.default_rng(0)) is EMPTY


def test_random_selection_sigmoid_weighting():
    buf = buffer_with([("A", 0.0), ("B", 1.0), ("C", 2.0)])
    cur = point_domain("cur", 9, 0.5)
    mk = MultiKernel.gaussian([1.0])
    res = random_selection(buf, 3, np.random.default_rng(0), "sigmoid", cur, mk)
    full = ddm_es(buf, cur, 3, mk)
    assert set(res.domain_ids) == set(full.domain_ids)
    lookup = dict(zip(full.domain_ids, full.weights))
    assert [lookup[d] for d in res.domain_ids] == list(res.weights)
    with pytest.raises(ContractViolation):
        random_selection(buf, 1, np.random.default_rng(0), "sigmoid")


def test_selection_result_alignment():
    with pytest.raises(ContractViolation):
        SelectionResult((), (0.5,), ())
