import random
from dataclasses import replace
from fractions import Fraction
from math import comb

import pytest

from conftest import complete
from hampow.errors import GraphValidationError, InfeasibleError
from hampow.graphs import Config, gen_random
from hampow.paths import VertexSeq, decompose, is_path, is_properly_terminated, is_valid_pair
from hampow.sequencing import (
    build_template_matrix,
    build_trim_path,
    compute_trim_template,
    group_patterns,
    run_sequencing,
    solve_part_sizes,
    verify_plan,
    z_vector,
)


class TestTrimTemplate:
    def test_c0_is_n_mod_r(self):
        t = compute_trim_template([11, 11, 11, 11], 3, Fraction(1, 100))
        assert sum([11, 11, 11, 11]) % 3 == 2
        assert t.c[0] == 2
        assert (44 - t.c[0]) % 3 == 0

    def test_worked_example_s1(self):
        t = compute_trim_template([5, 4, 3, 3], 3, Fraction(1, 40))
        assert t.s == 1
        assert t.type_sequence == (
            z_vector(4, 4, 3),
            z_vector(3, 4, 3),
            z_vector(2, 4, 3),
            z_vector(4, 4, 3),
        )
        assert t.q == 4 and t.p == 12

    def test_balanced_zero_corrections(self):
        # n divisible by r, all parts well below n/r - 2*sigma*n: plain descent
        t = compute_trim_template([6, 6, 6, 6], 3, Fraction(1, 100))
        assert t.s == 0 and t.c == (0,)
        assert t.type_sequence[0] == z_vector(4, 4, 3)
        assert t.type_sequence[-1] == z_vector(4, 4, 3)

    def test_adjacent_types_always_valid(self):
        rng = random.Random(1)
        for _ in range(50):
            r = rng.randint(2, 5)
            k = rng.randint(r + 1, 2 * r - 1)
            top = rng.randint(6, 12)
            sizes = sorted((rng.randint(3, top) for _ in range(k)), reverse=True)
            n = sum(sizes)
            if any(r * s > n for s in sizes):
                continue
            try:
                t = compute_trim_template(sizes, r, Fraction(1, 2 * r * (r + 1) + 1))
            except InfeasibleError:
                continue
            for za, zb in zip(t.type_sequence, t.type_sequence[1:]):
                assert is_valid_pair(za, zb, r)

    def test_sigma_too_large_rejected(self):
        with pytest.raises(InfeasibleError, match="s="):
            compute_trim_template([6, 6, 6, 6], 3, Fraction(1, 4))

    def test_ascending_sizes_rejected(self):
        with pytest.raises(GraphValidationError):
            compute_trim_template([3, 4, 5, 5], 3, Fraction(1, 30))


class TestTemplateMatrix:
    def test_k4_r3_s2(self):
        m = build_template_matrix(4, 3, 2)
        assert m.ell == 2
        assert m.cols == ((1, 1, 1, 0), (1, 1, 0, 1))

    def test_k5_r3_s1(self):
        m = build_template_matrix(5, 3, 1)
        assert m.ell == comb(4, 2) == 6
        assert m.cols[0] == (1, 1, 1, 0, 0)
        assert m.cols[-1] == (1, 0, 0, 1, 1)

    def test_s_equals_r_single_column(self):
        m = build_template_matrix(5, 3, 3)
        assert m.ell == 1 and m.cols == ((1, 1, 1, 0, 0),)

    def test_full_exhaustion(self):
        # validate() checks distinctness, forced ends, and the seam condition
        for r in range(2, 6):
            for k in range(r, 2 * r):
                for s in range(0, r + 1):
                    m = build_template_matrix(k, r, s)
                    assert m.ell == comb(k - s, r - s)


class TestSolver:
    def _matrix(self):
        return build_template_matrix(4, 3, 2)

    def test_worked_example(self):
        x = solve_part_sizes(self._matrix(), (10, 10, 6, 4), 1)
        assert x == (6, 4)
        assert self._matrix().mul(x) == (10, 10, 6, 4)

    def test_already_solved(self):
        m = self._matrix()
        b = m.mul((5, 5))
        assert solve_part_sizes(m, b, 5) == (5, 5)

    def test_column_sum_identity(self):
        m = build_template_matrix(5, 3, 1)
        rng = random.Random(0)
        xstar = [rng.randint(2, 9) for _ in range(m.ell)]
        b = m.mul(xstar)
        x = solve_part_sizes(m, b, 2)
        assert sum(x) * 3 == sum(b)

    def test_precondition_failures_report_property(self):
        m = self._matrix()
        with pytest.raises(InfeasibleError, match="P1"):
            solve_part_sizes(m, (1, 1, 1, 1), 1)
        with pytest.raises(InfeasibleError, match="P2"):
            solve_part_sizes(m, (10, 13, 6, 4), 1)  # rows 1,2 must match exactly
        with pytest.raises(InfeasibleError, match="P3"):
            solve_part_sizes(m, (12, 12, 13, -1), 1)

    def test_random_feasible_instances(self):
        rng = random.Random(7)
        for _ in range(200):
            r = rng.randint(2, 5)
            k = rng.randint(r, 2 * r - 1)
            s = rng.randint(0, r)
            m = build_template_matrix(k, r, s)
            floor = rng.randint(1, 3)
            xstar = [floor + rng.randint(0, 5) for _ in range(m.ell)]
            b = m.mul(xstar)
            x = solve_part_sizes(m, b, floor)
            assert m.mul(x) == b
            assert all(xj >= floor for xj in x)
            # progress identity: one iteration per r residual units
            assert sum(xj - floor for xj in x) == (sum(b) - 3 * 0 - m.ell * floor * r) // r


def _pipeline_fixture(seed=0, relaxed=True, delta=1, sizes=(12, 12, 12, 12)):
    g = gen_random(4, list(sizes), delta, seed)
    cfg = Config.default(3, seed=seed)
    return g, cfg, run_sequencing(g, cfg, relaxed=relaxed)


class TestTrimPath:
    def test_postconditions_on_complete_host(self):
        g = complete(4, [9, 9, 9, 8])
        cfg = Config.default(3, seed=2)
        tmpl = compute_trim_template([9, 9, 9, 8], 3, cfg.sigma)
        p0 = build_trim_path(g, tmpl, cfg, relaxed=True)
        assert is_path(g, p0)
        assert is_properly_terminated(g, p0)
        dec = decompose(g, p0)
        assert dec.types() == tmpl.type_sequence
        for za, zb in zip(dec.types(), dec.types()[1:]):
            assert is_valid_pair(za, zb, 3)

    def test_residual_identities(self):
        g = complete(4, [9, 9, 9, 8])
        cfg = Config.default(3, seed=2)
        tmpl = compute_trim_template([9, 9, 9, 8], 3, cfg.sigma)
        p0 = build_trim_path(g, tmpl, cfg, relaxed=True)
        used = set(p0.vertices)
        residual = [len([v for v in p if v not in used]) for p in g.parts]
        total = g.n - len(p0)
        assert total % 3 == 0
        for i in range(tmpl.s):
            assert residual[i] == total // 3


class TestRefineAndPlan:
    def test_cells_sum_to_rows(self):
        g, cfg, res = _pipeline_fixture()
        m = res.matrix
        for i in range(4):
            cells = [len(res.plan.refined_parts[(i, j)]) for j in range(m.ell)]
            assert cells == [m.entry(i, j) * m.x[j] for j in range(m.ell)]

    def test_single_column_refinement_is_identity(self):
        g = complete(4, [16, 16, 15, 4])
        cfg = Config.default(3, seed=1)
        res = run_sequencing(g, cfg, relaxed=True)
        assert res.plan.ell == 1
        assert res.report.ok

    def test_complete_host_passes_first_attempt(self):
        g, cfg, res = _pipeline_fixture()
        assert res.report.ok
        assert res.report.measured_group_slack == 1

    def test_group_patterns_ascend(self):
        m = build_template_matrix(5, 3, 1)
        for pattern in group_patterns(m):
            assert list(pattern) == sorted(pattern)
            assert len(pattern) == 3


class TestVerifyPlanFaults:
    def test_pipeline_plan_verifies(self):
        g, cfg, res = _pipeline_fixture(seed=3)
        assert res.report.ok

    def test_connector_vertex_moved_into_group_breaks_a4(self):
        g, cfg, res = _pipeline_fixture(seed=3)
        plan = res.plan
        conn = plan.connectors[0]
        stolen = plan.p0.vertices[0]  # lives in p0: reuse breaks disjointness
        broken = replace(
            plan,
            connectors=(VertexSeq((stolen,) + conn.vertices[1:], 3),) + plan.connectors[1:],
        )
        rep = verify_plan(g, broken, cfg)
        assert not rep.condition("A4").ok

    def test_emptied_cell_breaks_a1(self):
        g, cfg, res = _pipeline_fixture(seed=3)
        plan = res.plan
        (i, j) = next(
            (i, j)
            for (i, j), cell in plan.refined_parts.items()
            if cell and j == 0 and i in plan.group_sequences[0]
        )
        cells = dict(plan.refined_parts)
        cells[(i, j)] = frozenset()
        rep = verify_plan(g, replace(plan, refined_parts=cells), cfg)
        assert not rep.condition("A1").ok

    def test_truncated_p0_breaks_a3(self):
        g, cfg, res = _pipeline_fixture(seed=3)
        plan = res.plan
        rep = verify_plan(
            g, replace(plan, p0=VertexSeq(plan.p0.vertices[1:], 3)), cfg
        )
        assert not rep.condition("A3").ok


class TestRunSequencingRandom:
    def test_dense_random_instances_relaxed(self):
        done = 0
        seed = 0
        while done < 10:
            seed += 1
            g = gen_random(4, [13, 13, 12, 10], Fraction(9, 10), seed)
            cfg = Config.default(3, seed=seed)
            try:
                res = run_sequencing(g, cfg, relaxed=True)
            except InfeasibleError:
                continue
            structural = [c for c in res.report.conditions if c.name != "A2"]
            assert all(c.ok for c in structural)
            done += 1

    def test_strict_mode_rejects_sparse(self):
        g = gen_random(4, [12, 12, 12, 12], Fraction(1, 2), 0)
        cfg = Config.default(3, seed=0)
        with pytest.raises(InfeasibleError):
            run_sequencing(g, cfg, relaxed=False)

    def test_other_powers(self):
        # r=2 with k=3, and r=4 at both ends of its k range
        res = run_sequencing(
            complete(3, [12, 12, 12]), Config.default(2, seed=0), relaxed=True
        )
        assert res.report.ok and res.plan.ell == 3
        res = run_sequencing(
            complete(5, [20] * 5), Config.default(4, seed=2), relaxed=True
        )
        assert res.report.ok and res.plan.ell == 5
        res = run_sequencing(
            complete(7, [48] * 7), Config.default(4, seed=3), relaxed=True
        )
        assert res.report.ok and res.plan.ell == 35
        assert len(res.plan.connectors) == 34
