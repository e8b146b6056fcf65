from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critfpp.circuits import (between_region, color_switch, count_interface_half_loops, interface_curves,
                              outermost_yellow_half_circuit, rho_plus)
from critfpp.fpp import T_plus
from critfpp.lattice import RegionSpec, SiteCoord, build_region
from critfpp.percolation import BLUE, BoundaryColoring, Configuration, enumerate_configs, sample_config
from critfpp.rng import RngStream

from oracles import components, min_path_time, nbrs


def layers(r, R):
    mask = build_region(RegionSpec.half_annulus(r, R))
    n, stack = rho_plus(mask, Configuration.constant(mask, 1))
    return mask, list(stack.site_sets)


def adjacent_to(mask, boundary):
    return [tuple(s) for s in mask.sites if any(SiteCoord(*v) in boundary for v in nbrs(tuple(s)))]


def is_valid_half_circuit(mask, cfg, circ):
    sites = {tuple(s) for s in circ.sites}
    if not sites or any(cfg.bit(s) != 1 for s in sites):
        return False
    if components(sites) != 1:
        return False
    if not any(SiteCoord(*v) in mask.boundary_l for s in sites for v in nbrs(s)):
        return False
    if not any(SiteCoord(*v) in mask.boundary_r for s in sites for v in nbrs(s)):
        return False
    # every inner-to-outer crossing meets it
    w = {tuple(s): int(tuple(s) in sites) for s in mask.sites}
    return min_path_time(w, adjacent_to(mask, mask.boundary_i), adjacent_to(mask, mask.boundary_o)) >= 1


def inside_oracle(mask, delimiter):
    """Flood fill from the inner boundary that never steps onto ``delimiter``."""
    delim = {tuple(s) for s in delimiter}
    sites = {tuple(s) for s in mask.sites}
    seen = {s for s in adjacent_to(mask, mask.boundary_i) if s not in delim}
    stack = list(seen)
    while stack:
        u = stack.pop()
        for v in nbrs(u):
            if v in sites and v not in delim and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def test_all_blue():
    mask = build_region(RegionSpec.half_annulus(2, 5))
    cfg = Configuration.constant(mask, 0)
    n, stack = rho_plus(mask, cfg)
    assert n == 0 and len(stack) == 0
    assert outermost_yellow_half_circuit(mask, cfg) is None
    assert count_interface_half_loops(mask, cfg) == 0
    assert color_switch(mask, cfg) == cfg


def test_one_painted_circuit():
    mask, ls = layers(2, 5)
    cfg = Configuration.from_sites(mask, ls[1])
    n, stack = rho_plus(mask, cfg)
    assert n == 1
    circ = outermost_yellow_half_circuit(mask, cfg)
    assert set(circ.sites) == set(ls[1])
    assert is_valid_half_circuit(mask, cfg, circ)
    assert count_interface_half_loops(mask, cfg) == 2
    curves = interface_curves(mask, cfg)
    assert sum(c.end_l and c.end_r for c in curves) == 2


def test_two_nested_circuits():
    mask, ls = layers(2, 6)
    cfg = Configuration.from_sites(mask, ls[0] | ls[2])
    assert rho_plus(mask, cfg)[0] == 2
    assert T_plus(2, 6, cfg) == 2


def test_circuit_sites_ordered_left_to_right():
    mask, ls = layers(3, 7)
    cfg = Configuration.from_sites(mask, ls[1])
    circ = outermost_yellow_half_circuit(mask, cfg)
    path = circ.sites
    assert any(SiteCoord(*v) in mask.boundary_l for v in nbrs(tuple(path[0])))
    assert any(SiteCoord(*v) in mask.boundary_r for v in nbrs(tuple(path[-1])))


@pytest.mark.parametrize("r,R", [(2, 3), (3, 4)])
def test_exhaustive_outermost_circuit(r, R):
    mask = build_region(RegionSpec.half_annulus(r, R))
    assert mask.n_sites <= 18
    for cfg in enumerate_configs(mask):
        t = T_plus(r, R, cfg)
        circ = outermost_yellow_half_circuit(mask, cfg)
        assert (circ is None) == (t == 0)
        if circ is not None and t == 1:
            assert is_valid_half_circuit(mask, cfg, circ)


def test_exhaustive_counts_agree_small():
    mask = build_region(RegionSpec.half_annulus(2, 3))
    ht, hn = Counter(), Counter()
    for cfg in enumerate_configs(mask):
        t = T_plus(2, 3, cfg)
        assert rho_plus(mask, cfg)[0] == t
        ht[t] += 1
        hn[count_interface_half_loops(mask, cfg)] += 1
    assert ht == hn
    assert sum(ht.values()) == 2 ** mask.n_sites


def test_color_switch_identity_at_level_zero():
    mask = build_region(RegionSpec.half_annulus(2, 5))
    for s in range(50):
        cfg = sample_config(mask, RngStream(s, 0))
        if rho_plus(mask, cfg)[0] == 0:
            assert color_switch(mask, cfg) == cfg


def test_color_switch_level_one_flips_inside_only():
    mask, ls = layers(2, 6)
    rng = np.random.default_rng(4)
    circ = ls[1]
    inner = inside_oracle(mask, circ)
    checked = 0
    for _ in range(20):
        bits = rng.integers(0, 2, mask.n_sites).astype(np.uint8)
        cfg = Configuration(mask, bits)
        # paint the circuit yellow and everything outside it blue so that n = 1
        for s in mask.sites:
            k = mask.index_of(s)
            if tuple(s) in {tuple(c) for c in circ}:
                cfg.bits[k] = 1
            elif tuple(s) not in inner:
                cfg.bits[k] = 0
        if rho_plus(mask, cfg)[0] != 1:
            continue
        out = color_switch(mask, cfg)
        c1 = set(rho_plus(mask, cfg)[1].site_sets[0])
        flipped = {tuple(s) for s in mask.sites if out.bit(s) != cfg.bit(s)}
        assert flipped == set(between_region(mask, c1, "boundary_i"))
        checked += 1
    assert checked >= 10


def test_between_adjacent_circuits_is_empty():
    mask, ls = layers(2, 6)
    assert between_region(mask, ls[0], ls[1]) == frozenset()


def test_between_with_gap_row():
    mask, ls = layers(2, 6)
    assert set(between_region(mask, ls[0], ls[2])) == set(ls[1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_between_matches_set_difference(seed):
    mask, ls = layers(2, 7)
    rng = np.random.default_rng(seed)
    i, j = sorted(rng.choice(len(ls), size=2, replace=False))
    outer, inner = ls[i], ls[j]
    expect = inside_oracle(mask, outer) - (inside_oracle(mask, inner) | {tuple(s) for s in inner})
    assert {tuple(s) for s in between_region(mask, outer, inner)} == expect
    whole = {tuple(s) for s in mask.sites} - (inside_oracle(mask, inner) | {tuple(s) for s in inner})
    assert {tuple(s) for s in between_region(mask, "boundary_o", inner)} == whole


def test_interface_count_requires_blue_outer():
    mask = build_region(RegionSpec.half_annulus(2, 4))
    cfg = Configuration.constant(mask, 0)
    with pytest.raises(ValueError):
        count_interface_half_loops(mask, cfg, BoundaryColoring({"o": "yellow"}))
    with pytest.raises(ValueError):
        count_interface_half_loops(mask, cfg, BoundaryColoring({"o": BLUE, "l": BLUE}))


def test_interface_curve_text():
    mask, ls = layers(2, 5)
    cfg = Configuration.from_sites(mask, ls[1])
    for c in interface_curves(mask, cfg):
        rows = c.to_text().splitlines()
        assert len(rows) == len(c.dual_edges)
        assert all(len(r.split()) == 4 for r in rows)
