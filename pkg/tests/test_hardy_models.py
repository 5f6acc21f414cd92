import numpy as np
import pytest

from errors import ConditioningError, InvalidInput
from hardy_models import (
    COND_CAP,
    RESIDUAL_CAP,
    block_for,
    block_psi_limit,
    build_basis,
    conjugate,
    contains,
    custom,
    disc,
    domain_from_dict,
    ellipse,
    gram,
    mult_matrix,
    nilpotent_block,
    quadrature,
    taylor_coeffs,
    winding_number,
)
from linalg_core import psi_eval

ELLIPSE = ellipse(1.0, 0.6)


def _circle(radius, n):
    return radius * np.exp(2j * np.pi * np.arange(n) / n)


class TestDomains:
    def test_disc_contains(self):
        d = disc(0.5, 0.2j)
        assert contains(d, 0.2j + 0.4)
        assert not contains(d, 0.8)

    def test_winding_on_boundary_node(self):
        assert winding_number(disc(1.0), 1.0) == 0

    def test_ellipse_contains(self):
        assert contains(ELLIPSE, 0.9)
        assert not contains(ELLIPSE, 0.7j)

    def test_custom_polygon(self):
        d = custom(_circle(1.0, 64))
        assert contains(d, 0.3 - 0.2j)
        assert not contains(d, 1.2)

    def test_custom_too_few_samples(self):
        with pytest.raises(InvalidInput):
            custom(_circle(1.0, 8))

    @pytest.mark.parametrize("bad", [lambda: disc(0), lambda: ellipse(1, -1)])
    def test_nonpositive_sizes(self, bad):
        with pytest.raises(InvalidInput):
            bad()

    def test_conjugate_reflects_center(self):
        d = conjugate(disc(0.3, 0.5j))
        assert contains(d, -0.5j)
        assert not contains(d, 0.5j)
        assert conjugate(d) == disc(0.3, 0.5j)

    def test_from_dict(self):
        d = domain_from_dict({"kind": "ellipse", "a": 1.0, "b": 0.6, "center": [0, 0]})
        assert d == ELLIPSE
        c = domain_from_dict({"kind": "disc", "radius": 0.5, "conjugate": True})
        assert c.conjugated

    @pytest.mark.parametrize("doc", [
        {"kind": "disc"},
        {"kind": "ellipse", "a": 1.0},
        {"kind": "square", "radius": 1.0},
        {"kind": "disc", "radius": -1.0},
        {"kind": "custom", "samples": [[0, 0]] * 3},
    ])
    def test_from_dict_invalid(self, doc):
        with pytest.raises(InvalidInput):
            domain_from_dict(doc)


class TestQuadrature:
    def test_unit_circle_weights(self):
        rule = quadrature(disc(1.0), 64)
        assert np.allclose(rule.weights, 2 * np.pi / 64)

    def test_circle_length(self):
        assert quadrature(disc(0.3), 128).length == pytest.approx(2 * np.pi * 0.3, rel=1e-12)

    def test_ellipse_length_converges(self):
        coarse = quadrature(ELLIPSE, 512).length
        fine = quadrature(ELLIPSE, 2**16).length
        assert coarse == pytest.approx(fine, abs=1e-10)

    def test_custom_length(self):
        assert quadrature(custom(_circle(1.0, 64)), 0).length == pytest.approx(2 * np.pi, rel=1e-2)

    def test_too_few_nodes(self):
        with pytest.raises(InvalidInput):
            quadrature(disc(1.0), 8)


class TestGram:
    def test_unit_circle(self):
        assert np.allclose(gram(disc(1.0), 4), 2 * np.pi * np.eye(4), atol=1e-12)

    def test_disc_radius(self):
        r = 0.5
        expected = np.diag(2 * np.pi * r * r ** (2 * np.arange(4)))
        assert np.allclose(gram(disc(r), 4), expected, atol=1e-12)

    def test_hermitian(self):
        G = gram(ELLIPSE, 10)
        assert np.abs(G - G.conj().T).max() <= 1e-12

    def test_ill_conditioned(self):
        with pytest.raises(ConditioningError) as info:
            gram(ELLIPSE, 100)
        assert info.value.cond_estimate > COND_CAP

    def test_invalid_size(self):
        with pytest.raises(InvalidInput):
            gram(disc(1.0), 0)


class TestBasis:
    def test_large_ellipse_basis(self):
        # the monomial Gram of this size is far past COND_CAP
        basis = build_basis(ELLIPSE, 100)
        assert basis.K == 100
        assert basis.values.shape == (len(basis.rule.nodes), 101)
        assert basis.orth_error <= 1e-10
        assert basis.cond_estimate <= 1 + 1e-8

    def test_too_few_nodes(self):
        with pytest.raises(InvalidInput):
            build_basis(custom(_circle(1.0, 32)), 40)

    @pytest.mark.parametrize("domain,K", [(disc(0.8), 16), (ELLIPSE, 12)])
    def test_orthonormal(self, domain, K):
        basis = build_basis(domain, K)
        C = basis.coeff
        G = gram(domain, K)
        assert np.abs(C.conj().T @ G @ C - np.eye(K)).max() <= 1e-8

    def test_coefficients_triangular(self):
        C = build_basis(ELLIPSE, 10).coeff
        assert np.array_equal(np.tril(C, -1), np.zeros_like(C))
        assert np.all(np.diag(C).real > 0)


class TestMultMatrix:
    def test_disc_is_scaled_shift(self):
        M = mult_matrix(build_basis(disc(0.5), 8))
        assert np.allclose(M, 0.5 * np.eye(7, k=-1), atol=1e-12)

    def test_hessenberg(self):
        M = mult_matrix(build_basis(ELLIPSE, 16))
        assert np.array_equal(np.tril(M, -2), np.zeros_like(M))

    def test_large_ellipse_stays_bounded(self):
        M = mult_matrix(build_basis(ELLIPSE, 96))
        assert np.all(np.diag(M, -1).real > 0)
        # ||M|| <= max |z| on the boundary
        assert np.linalg.norm(M, 2) <= 1.0 + 1e-8


class TestTaylorCoeffs:
    def test_disc(self):
        r = 0.5
        A = taylor_coeffs(build_basis(disc(r), 8), 4)
        assert np.allclose(A, np.eye(4, 8) / np.sqrt(2 * np.pi * r), atol=1e-12)

    def test_orientation_independent(self):
        A = taylor_coeffs(build_basis(ELLIPSE, 12), 4)
        B = taylor_coeffs(build_basis(conjugate(ELLIPSE), 12), 4)
        # the conjugated boundary runs clockwise
        assert np.allclose(A, B.conj(), atol=1e-10)

    def test_matches_monomial_coefficients(self):
        basis = build_basis(ELLIPSE, 10)
        A = taylor_coeffs(basis, 5)
        C = basis.coeff[:5] * (basis.scale ** np.arange(5))[:, None]
        assert np.allclose(A, C, atol=1e-9)

    def test_origin_outside(self):
        with pytest.raises(InvalidInput):
            taylor_coeffs(build_basis(disc(0.2, 1.0), 8), 2)


class TestNilpotentBlock:
    def test_disc_block(self):
        block = block_for(disc(0.8), 16)
        assert np.allclose(block.matrix, 0.8 * np.eye(16, k=1), atol=1e-8)

    def test_size_one(self):
        block = block_for(disc(0.8), 1)
        assert block.matrix.shape == (1, 1)
        assert abs(block.matrix[0, 0]) <= 1e-12

    def test_ellipse_nilpotent(self):
        block = block_for(ELLIPSE, 8)
        assert block.residual <= RESIDUAL_CAP
        assert np.abs(np.tril(block.matrix)).max() <= 1e-12

    @pytest.mark.parametrize("domain", [ELLIPSE, conjugate(ellipse(1.0, 0.8))])
    def test_ellipse_block_size_32(self, domain):
        block = block_for(domain, 32)
        assert block.matrix.shape == (32, 32)
        assert block.residual <= RESIDUAL_CAP
        assert np.abs(np.tril(block.matrix)).max() <= 1e-12

    def test_too_large(self):
        with pytest.raises(InvalidInput):
            nilpotent_block(build_basis(disc(1.0), 8), 5)

    def test_to_dict(self):
        d = block_for(disc(0.5), 2).to_dict()
        assert d["N"] == 2 and d["domain"]["kind"] == "disc"
        assert d["matrix"]["rows"] == 2


class TestBlockPsiLimit:
    def test_disc(self):
        assert block_psi_limit(disc(0.8), 1.0) == pytest.approx(0.2)
        assert block_psi_limit(disc(0.8), 0.3j) == 0.0

    def test_ellipse_sampling(self):
        z = 1.5 + 1j
        assert block_psi_limit(ELLIPSE, z) == pytest.approx(block_psi_limit(ELLIPSE, z, m=2**16), abs=1e-6)

    def test_disc_blocks_bounded_below(self):
        for N in (8, 16, 32):
            assert psi_eval(block_for(disc(0.5), N).matrix, 1.0) >= 0.5 - 1e-12

    @pytest.mark.parametrize("domain,z,sizes", [(disc(0.5), 1.0, (8, 32)), (ELLIPSE, 1.5, (8, 32))])
    def test_blocks_approach_limit(self, domain, z, sizes):
        limit = block_psi_limit(domain, z)
        small, big = (abs(psi_eval(block_for(domain, N).matrix, z) - limit) for N in sizes)
        assert big <= small + 0.05

    def test_inside_decays(self):
        assert psi_eval(block_for(disc(0.5), 16).matrix, 0.2) < 1e-3
