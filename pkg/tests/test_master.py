import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factories import random_instance
from kepcg.errors import ValidationError
from kepcg.exchange import Exchange, ExchangeKind, enumerate_exchanges, make_chain
from kepcg.instance import SolveStatus, g1_fixture
from kepcg.master import RestrictedMaster, is_integral, lagrangian_ub, solve_restricted_ip, solve_rmp
from oracles import exchange_list, exhaustive_packing, rational_packing_lp


def full_master(inst):
    m = RestrictedMaster(inst)
    for e in enumerate_exchanges(inst):
        m.add(e)
    return m


def test_g1_lp_and_ip():
    m = full_master(g1_fixture())
    lp = solve_rmp(m)
    assert lp.value == pytest.approx(5.0)
    assert set(lp.duals) == set(g1_fixture().vertices)
    assert all(a >= 0 for a in lp.duals.values())
    ip = solve_restricted_ip(m, lp=lp)
    assert ip.objective == 5.0 and ip.status is SolveStatus.OPTIMAL_LP


def test_dedup_and_validation():
    g1 = g1_fixture()
    m = RestrictedMaster(g1)
    e = make_chain(g1, (1, 3))
    assert m.add(e) and not m.add(e)
    assert len(m) == 1 and m.columns[0].column_id == 0 and e in m
    with pytest.raises(ValidationError):
        m.add(Exchange(ExchangeKind.CHAIN, (1, 4), 1.0))


def test_empty_pool():
    lp = solve_rmp(RestrictedMaster(g1_fixture()))
    assert lp.value == 0.0 and all(a == 0.0 for a in lp.duals.values())


def test_lagrangian_formula():
    assert lagrangian_ub(3.0, 0.5, 7) == pytest.approx(3.0 + 3.5 * 0.5)
    assert lagrangian_ub(3.0, -1.0, 7) == 3.0


def test_is_integral():
    import numpy as np
    assert is_integral(np.array([0.0, 1.0, 1 - 1e-9]))
    assert not is_integral(np.array([0.5]))


def test_fractional_triangle_branches():
    # three 2-cycles on a triangle of pairs: LP 1.5 (weights 1), IP 1
    from kepcg.instance import CompatibilityInstance
    arcs = [(0, 1, 0.5), (1, 0, 0.5), (1, 2, 0.5), (2, 1, 0.5), (0, 2, 0.5), (2, 0, 0.5)]
    inst = CompatibilityInstance({0, 1, 2}, set(), arcs, k=2)
    m = full_master(inst)
    lp = solve_rmp(m)
    assert lp.value == pytest.approx(1.5)
    ip = solve_restricted_ip(m, lp=lp)
    assert ip.objective == pytest.approx(1.0) and ip.upper_bound == pytest.approx(1.5)
    assert ip.ip_nodes >= 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 10), st.integers(0, 3), st.floats(0.15, 0.5),
       st.booleans())
def test_lp_ip_match_oracles(seed, n_pairs, n_alt, density, unit):
    inst = random_instance(seed, n_pairs, n_alt, density, l=4, unit=unit)
    m = full_master(inst)
    cols = exchange_list(inst)
    lp = solve_rmp(m)
    exact = float(rational_packing_lp(cols, inst.vertices))
    assert lp.value == pytest.approx(exact, abs=1e-7)
    # dual feasibility: no column has positive reduced cost at an LP optimum
    for e in m.columns:
        assert e.weight - sum(lp.duals[v] for v in e.vertices) <= 1e-7
    ip = solve_restricted_ip(m, lp=lp)
    assert ip.objective == pytest.approx(exhaustive_packing(cols, inst.vertices), abs=1e-9)
    used = [v for e in ip.chosen for v in e.vertices]
    assert len(used) == len(set(used))
    assert ip.objective <= lp.value + 1e-7


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 9), st.integers(1, 3))
def test_lagrangian_bound_valid_on_restricted_pools(seed, n_pairs, n_alt):
    inst = random_instance(seed, n_pairs, n_alt, 0.35, l=4)
    everything = enumerate_exchanges(inst)
    full = float(rational_packing_lp(exchange_list(inst), inst.vertices))
    # keep only the cycles and short chains, then bound the full LP
    m = RestrictedMaster(inst)
    for e in everything:
        if e.kind is ExchangeKind.CYCLE or len(e.vertices) == 2:
            m.add(e)
    lp = solve_rmp(m)
    max_rc = max((e.weight - sum(lp.duals[v] for v in e.vertices) for e in everything), default=0.0)
    assert lagrangian_ub(lp.value, max_rc, inst.num_vertices) >= full - 1e-7
    assert lp.value <= full + 1e-7


def test_monotone_after_add():
    inst = random_instance(4, 8, 2, 0.4, l=4)
    m = RestrictedMaster(inst)
    prev = solve_rmp(m).value
    for e in enumerate_exchanges(inst):
        m.add(e)
        value = solve_rmp(m).value
        assert value >= prev - 1e-9
        prev = value


def test_lagrangian_needs_unfloored_half():
    # triangle of unit 2-cycles: full LP 3 (every column at 1/2), sum x = 1.5 > floor(3/2)
    from kepcg.instance import CompatibilityInstance
    arcs = [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (0, 2, 1.0), (2, 0, 1.0)]
    inst = CompatibilityInstance({0, 1, 2}, set(), arcs, k=2)
    full = float(rational_packing_lp(exchange_list(inst), inst.vertices))
    assert full == 3.0
    # empty pool: z = 0, all duals 0, best reduced cost 2
    assert 0.0 + (3 // 2) * 2.0 < full
    assert lagrangian_ub(0.0, 2.0, 3) >= full
