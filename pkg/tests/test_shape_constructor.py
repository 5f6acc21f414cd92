import numpy as np
import pytest

from errors import ConstructionError, InfeasibleEpsilon, InvalidInput, NestingError
from hardy_models import conjugate, custom, disc, ellipse
from psi_field import Lcg
from shape_constructor import (
    ShapeProblem,
    check_block_law,
    check_intermediate_levels,
    choose_block,
    choose_epsilon,
    closure_samples,
    construct,
    exterior_ring,
    exterior_samples,
    plan_domains,
    problem_from_dict,
    psi_of_blocks,
    result_matrix,
    verify_inclusions,
)

THREE_DISCS = [disc(1.0), disc(0.6), disc(0.3)]


@pytest.fixture(scope="module")
def three_disc_result():
    return construct(ShapeProblem(THREE_DISCS, 0.15))


class TestPlanning:
    def test_three_discs(self):
        omegas = plan_domains(ShapeProblem(THREE_DISCS, 0.15))
        assert [o.radius for o in omegas] == pytest.approx([0.7, 0.375])

    def test_single_step(self):
        omegas = plan_domains(ShapeProblem([disc(1.0), disc(0.5)], 0.1))
        assert omegas[0].radius == pytest.approx(0.625)

    def test_ellipses(self):
        omegas = plan_domains(ShapeProblem([ellipse(1.0, 0.8), ellipse(0.5, 0.4)], 0.05))
        assert (omegas[0].a, omegas[0].b) == pytest.approx((0.625, 0.5))

    def test_identical_domains(self):
        with pytest.raises(NestingError):
            plan_domains(ShapeProblem([disc(1.0), disc(1.0)], 0.1))

    def test_not_nested(self):
        with pytest.raises(NestingError):
            plan_domains(ShapeProblem([disc(0.5), disc(1.0)], 0.1))

    def test_infeasible_eps(self):
        with pytest.raises(InfeasibleEpsilon) as info:
            plan_domains(ShapeProblem(THREE_DISCS, 0.5))
        assert info.value.achieved == pytest.approx(0.3, abs=1e-9)
        assert info.value.stage == "plan_domains"

    def test_origin_required(self):
        with pytest.raises(InvalidInput):
            plan_domains(ShapeProblem([disc(1.0, 3.0), disc(0.5, 3.0)], 0.1))

    def test_custom_rejected(self):
        ring = 2 * np.exp(2j * np.pi * np.arange(32) / 32)
        with pytest.raises(InvalidInput):
            plan_domains(ShapeProblem([custom(ring), disc(0.5)], 0.1))

    def test_problem_validation(self):
        with pytest.raises(InvalidInput):
            ShapeProblem([disc(1.0)], 0.1)
        with pytest.raises(InvalidInput):
            problem_from_dict({"domains": [{"kind": "disc", "radius": 1.0}], "eps1": 0.1})
        with pytest.raises(InvalidInput):
            problem_from_dict({"domains": [{"kind": "disc", "radius": 1.0}] * 2, "eps1": -1})

    def test_problem_from_dict(self):
        problem = problem_from_dict({
            "domains": [{"kind": "disc", "radius": r} for r in (1.0, 0.6, 0.3)],
            "eps1": 0.15,
        })
        assert problem.m == 2 and problem.domains == THREE_DISCS


class TestSampling:
    def test_exterior_ring_is_outside(self):
        ring = exterior_ring(disc(1.0), 0.1)
        assert np.abs(np.abs(ring) - 1.1).max() <= 1e-3

    def test_clockwise_boundary_pushed_outward(self):
        ring = exterior_ring(conjugate(disc(0.5, -0.2j)), 0.1)
        assert np.abs(np.abs(ring - 0.2j) - 0.6).max() <= 1e-3

    def test_closure_samples_inside(self):
        pts = closure_samples(disc(0.5))
        assert np.abs(pts).max() <= 0.5 + 1e-12
        assert closure_samples([0.1, 0.2j]).shape == (2,)

    def test_psi_of_blocks_is_minimum(self):
        pts = exterior_samples(disc(1.0), 0.2)
        psi = psi_of_blocks([np.zeros((1, 1)), np.array([[0.5]])], pts)
        assert np.allclose(psi, np.minimum(np.abs(pts), np.abs(pts - 0.5)))


class TestChoices:
    def test_block_for_origin(self):
        N, block, margins = choose_block(disc(0.7), [0j], 0.15)
        assert N == 8 and block.N == 8
        assert margins["interior_max"] <= 0.075

    def test_ladder_exhausted(self):
        with pytest.raises(ConstructionError) as info:
            choose_block(disc(0.7), [0.3], 1e-12, ladder=(8, 16))
        assert info.value.stage == "choose_block"
        assert info.value.margins["N"] == 16

    def test_choose_epsilon(self):
        eps = choose_epsilon([np.zeros((1, 1))], disc(1.0), 0.15, 0.05)
        assert eps == pytest.approx(0.025)

    def test_choose_epsilon_resolvent_limited(self):
        eps = choose_epsilon([np.zeros((1, 1))], disc(0.1), 1.0, 1.0)
        assert eps == pytest.approx(0.05)


class TestConstruct:
    def test_three_discs(self, three_disc_result):
        result = three_disc_result
        assert len(result.eps) == 2
        assert result.eps[0] == 0.15
        assert 0 < result.eps[1] < result.eps[0]
        assert sum(result.Ns) <= 512
        assert result.delta == pytest.approx(0.075, abs=1e-9)
        assert result.passed
        for note in result.verification.notes.values():
            assert note["outer_margin"] > 0 and note["inner_margin"] > 0
        assert result.block_law.passed
        assert result.T.shape == (sum(result.Ns), sum(result.Ns))

    def test_deterministic(self, three_disc_result):
        again = construct(ShapeProblem(THREE_DISCS, 0.15))
        assert again.eps == three_disc_result.eps
        assert again.Ns == three_disc_result.Ns
        assert np.array_equal(again.T, three_disc_result.T)

    def test_intermediate_levels(self, three_disc_result):
        assert check_intermediate_levels(three_disc_result, THREE_DISCS).passed

    def test_nilpotent(self, three_disc_result):
        T = three_disc_result.T
        assert np.abs(np.linalg.matrix_power(T, max(three_disc_result.Ns))).max() <= 1e-6

    def test_inflated_last_eps_fails(self, three_disc_result):
        result = three_disc_result
        psi_out = psi_of_blocks(result.blocks, exterior_samples(THREE_DISCS[1], result.delta))
        eps = result.eps[:-1] + [1.5 * float(psi_out.min())]
        assert not verify_inclusions(result.blocks, eps, THREE_DISCS, result.delta).passed

    def test_to_dict(self, three_disc_result):
        d = three_disc_result.to_dict(with_matrices=False)
        assert d["pass"] is True
        assert "matrix" not in d["blocks"][0]
        assert result_matrix(three_disc_result)["rows"] == sum(three_disc_result.Ns)

    def test_single_step(self):
        result = construct(ShapeProblem([disc(1.0), disc(0.5)], 0.1))
        assert result.passed and result.eps == [0.1]
        report = check_intermediate_levels(result, [disc(1.0), disc(0.5)])
        assert report.passed and report.samples == 0
        assert report.to_dict()["max_violation"] is None

    def test_ellipses(self):
        result = construct(ShapeProblem([ellipse(1.0, 0.8), ellipse(0.5, 0.4)], 0.05))
        assert result.passed and result.block_law.passed
        assert result.verification.notes["k=1"]["inner_margin"] > 0

    @pytest.mark.slow
    def test_three_ellipses(self):
        domains = [ellipse(1.0, 0.8), ellipse(0.6, 0.45), ellipse(0.3, 0.2)]
        result = construct(ShapeProblem(domains, 0.1))
        assert result.passed

    def test_not_nested(self):
        with pytest.raises(NestingError):
            construct(ShapeProblem([disc(0.3), disc(0.6)], 0.1))


class TestVerification:
    def test_zero_matrix_off_center_target(self):
        domains = [disc(1.0), disc(0.3, 0.5)]
        report = verify_inclusions([np.zeros((1, 1))], [0.1], domains, 0.05)
        assert not report.passed
        assert report.notes["k=1"]["outer_margin"] > 0
        assert report.notes["k=1"]["inner_margin"] < 0

    def test_block_law_on_scalars(self):
        report = check_block_law([np.zeros((1, 1)), np.array([[1.0]])], Lcg(3), samples=20)
        assert report.passed and report.samples == 20

    def test_zero_margin_fails(self):
        domains = [disc(1.0), disc(0.5)]
        blocks = [np.zeros((1, 1))]
        eps = float(psi_of_blocks(blocks, closure_samples(domains[1])).max())
        report = verify_inclusions(blocks, [eps], domains, 0.1)
        assert report.notes["k=1"]["inner_margin"] == 0.0
        assert report.notes["k=1"]["outer_margin"] > 0
        assert not report.passed
        assert report.witnesses[0]["input"]["part"] == "inner"
