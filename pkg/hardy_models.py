"""
H^2 of a smooth simply connected domain, realized by trapezoid quadrature
of boundary arclength.

The orthonormal basis comes from Stieltjes orthogonalization of z e_k on
the quadrature nodes, so it never forms the monomial Gram matrix. The
nilpotent blocks are the compression of M* to ker (M*)^N computed through
the reproducing kernel at 0 and its derivatives, whose coefficients are
boundary Cauchy integrals of the basis.
"""
import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
import scipy.linalg
from pydantic import ValidationError

from errors import ConditioningError, InvalidInput
from linalg_core import matrix_to_dict, op_norm
from schemas import DomainIn

log = logging.getLogger(__name__)

COND_CAP = 1e12
MIN_NODES = 16
WINDING_SAMPLES = 4096
DISTANCE_SAMPLES = 8192
RESIDUAL_CAP = 1e-6


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    center: complex = 0j
    radius: float = 0.0
    a: float = 0.0
    b: float = 0.0
    samples: Tuple[complex, ...] = ()
    conjugated: bool = False

    @property
    def scale(self):
        """Typical boundary modulus; monomials are normalized by it."""
        if self.kind == "disc":
            return self.radius
        if self.kind == "ellipse":
            return (self.a + self.b) / 2
        return float(np.mean(np.abs(np.array(self.samples))))

    def curve(self, m):
        """Boundary nodes and speeds |dgamma/dt| at t_k = 2 pi k / m."""
        t = 2 * np.pi * np.arange(m) / m
        if self.kind == "disc":
            z = self.center + self.radius * np.exp(1j * t)
            speed = np.full(m, self.radius)
        elif self.kind == "ellipse":
            z = self.center + self.a * np.cos(t) + 1j * self.b * np.sin(t)
            speed = np.hypot(self.a * np.sin(t), self.b * np.cos(t))
        else:
            raise InvalidInput("custom domains only have their own sample points")
        return (np.conj(z) if self.conjugated else z), speed

    def tangent(self, m):
        """dgamma/dt at t_k = 2 pi k / m, following the orientation of curve()."""
        t = 2 * np.pi * np.arange(m) / m
        if self.kind == "disc":
            dz = 1j * self.radius * np.exp(1j * t)
        elif self.kind == "ellipse":
            dz = -self.a * np.sin(t) + 1j * self.b * np.cos(t)
        else:
            raise InvalidInput("custom domains only have their own sample points")
        return np.conj(dz) if self.conjugated else dz

    def boundary(self, m):
        if self.kind == "custom":
            z = np.array(self.samples)
            return np.conj(z) if self.conjugated else z
        return self.curve(m)[0]

    def to_dict(self):
        c = self.center
        d = {"kind": self.kind, "center": [c.real, c.imag], "conjugate": self.conjugated}
        if self.kind == "disc":
            d["radius"] = self.radius
        elif self.kind == "ellipse":
            d.update(a=self.a, b=self.b)
        else:
            d["samples"] = [[p.real, p.imag] for p in self.samples]
        return d


def disc(radius, center=0j):
    if radius <= 0:
        raise InvalidInput(f"disc radius must be positive, got {radius}")
    return DomainSpec("disc", complex(center), radius=float(radius))


def ellipse(a, b, center=0j):
    if a <= 0 or b <= 0:
        raise InvalidInput(f"ellipse semi-axes must be positive, got {a}, {b}")
    return DomainSpec("ellipse", complex(center), a=float(a), b=float(b))


def custom(samples):
    samples = tuple(complex(p) for p in samples)
    if len(samples) < MIN_NODES:
        raise InvalidInput(f"custom domain needs at least {MIN_NODES} boundary samples")
    return DomainSpec("custom", samples=samples)


def conjugate(domain):
    return replace(domain, conjugated=not domain.conjugated)


def domain_from_dict(data):
    try:
        doc = DomainIn.model_validate(data)
    except ValidationError as e:
        raise InvalidInput(f"invalid domain: {e}")
    center = complex(*doc.center)
    if doc.kind == "disc":
        d = disc(doc.radius, center)
    elif doc.kind == "ellipse":
        d = ellipse(doc.a, doc.b, center)
    else:
        d = custom(complex(*p) for p in doc.samples)
    return conjugate(d) if doc.conjugate else d


def winding_number(domain, z, m=WINDING_SAMPLES):
    w = domain.boundary(m) - z
    if np.any(w == 0):
        return 0
    return int(np.round(np.sum(np.angle(np.roll(w, -1) / w)) / (2 * np.pi)))


def contains(domain, z):
    """Strict interior membership by winding number (orientation ignored)."""
    return winding_number(domain, complex(z)) != 0


def _segment_distance(poly, z):
    p0 = poly
    p1 = np.roll(poly, -1)
    d = p1 - p0
    t = np.clip(np.real((z - p0) * np.conj(d)) / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
    return float(np.abs(p0 + t * d - z).min())


def boundary_distance(domain, z, m=DISTANCE_SAMPLES):
    z = complex(z)
    if domain.kind == "disc":
        c = np.conj(domain.center) if domain.conjugated else domain.center
        return abs(abs(z - c) - domain.radius)
    if domain.kind == "custom":
        return _segment_distance(domain.boundary(0), z)
    return float(np.abs(domain.boundary(m) - z).min())


def block_psi_limit(domain, z, m=DISTANCE_SAMPLES):
    """dist(z, clos Omega): 0 inside, distance to the boundary outside."""
    z = complex(z)
    if contains(domain, z):
        return 0.0
    d = boundary_distance(domain, z, m)
    if domain.kind == "ellipse":
        resolution = 2 * np.pi * max(domain.a, domain.b) / m
        if d < resolution:
            log.debug("%s is within boundary sampling resolution of the domain", z)
    return d


@dataclass
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    dz: np.ndarray

    @property
    def length(self):
        return float(self.weights.sum())


def quadrature(domain, m):
    """Trapezoid rule in the curve parameter; weights speed * 2 pi / m, dz = gamma' * 2 pi / m."""
    if domain.kind == "custom":
        z = domain.boundary(0)
        # periodic central differences of the polygon
        dz = (np.roll(z, -1) - np.roll(z, 1)) / 2
        return QuadratureRule(z, np.abs(dz), dz)
    if m < MIN_NODES:
        raise InvalidInput(f"quadrature needs m >= {MIN_NODES}, got {m}")
    z, speed = domain.curve(m)
    h = 2 * np.pi / m
    return QuadratureRule(z, speed * h, domain.tangent(m) * h)


def _default_nodes(K):
    return max(512, 8 * K)


def _gram_matrix(rule, K, scale):
    powers = np.arange(K)
    with np.errstate(over="ignore", invalid="ignore"):
        V = (rule.nodes[:, None] / scale) ** powers[None, :]
        G = (V.conj().T * rule.weights) @ V
    return (G + G.conj().T) / 2


def _cond(G):
    if not np.all(np.isfinite(G)):
        return np.inf
    w = np.linalg.eigvalsh(G)
    return np.inf if w[0] <= 0 else float(w[-1] / w[0])


def gram(domain, K, m=None, scale=1.0):
    """G[j, k] = sum_q w_q u_k(z_q) conj(u_j(z_q)) for u_k = (z / scale)^k."""
    if K < 1:
        raise InvalidInput(f"K must be >= 1, got {K}")
    rule = quadrature(domain, m or _default_nodes(K))
    G = _gram_matrix(rule, K, scale)
    cond = _cond(G)
    if cond > COND_CAP:
        raise ConditioningError(f"monomial Gram of size {K} has condition {cond:.3g}", cond)
    return G


@dataclass
class HardyBasis:
    """Orthonormal polynomials e_0..e_K sampled at the quadrature nodes.

    values[:, k] holds e_k on the nodes and z e_k = sum_{j <= k+1} H[j, k] e_j.
    """

    domain: DomainSpec
    K: int
    scale: float
    rule: QuadratureRule
    values: np.ndarray
    H: np.ndarray
    orth_error: float
    cond_estimate: float

    @property
    def coeff(self):
        """Monomial coefficients, e_j = sum_k z^k coeff[k, j]; only stable for small K."""
        K = self.K
        C = np.zeros((K, K), dtype=complex)
        C[0, 0] = self.values[0, 0]
        for k in range(K - 1):
            v = np.roll(C[:, k], 1)
            v -= C[:, : k + 1] @ self.H[: k + 1, k]
            C[:, k + 1] = v / self.H[k + 1, k]
        return C


def build_basis(domain, K, m=None):
    """Stieltjes orthogonalization of z e_k against e_0..e_k, two Gram-Schmidt passes per step."""
    if K < 1:
        raise InvalidInput(f"K must be >= 1, got {K}")
    rule = quadrature(domain, m or _default_nodes(K))
    z, w = rule.nodes, rule.weights
    if len(z) <= K:
        raise InvalidInput(f"{len(z)} boundary nodes cannot carry {K + 1} orthonormal polynomials")
    Q = np.zeros((len(z), K + 1), dtype=complex)
    H = np.zeros((K + 1, K), dtype=complex)
    Q[:, 0] = 1 / np.sqrt(w.sum())
    for k in range(K):
        v = z * Q[:, k]
        size = np.sqrt(np.sum(w * np.abs(v) ** 2))
        for _ in range(2):
            h = Q[:, : k + 1].conj().T @ (w * v)
            v = v - Q[:, : k + 1] @ h
            H[: k + 1, k] += h
        beta = np.sqrt(np.sum(w * np.abs(v) ** 2))
        if beta <= 1e-13 * size:
            raise ConditioningError(f"orthogonalization broke down at degree {k + 1}", np.inf)
        H[k + 1, k] = beta
        Q[:, k + 1] = v / beta
    G = (Q.conj().T * w) @ Q
    orth_error = float(np.abs(G - np.eye(K + 1)).max())
    log.debug("basis of size %d on %s, orthogonality defect %.3g", K, domain.kind, orth_error)
    return HardyBasis(domain, K, domain.scale, rule, Q, H, orth_error, _cond((G + G.conj().T) / 2))


def mult_matrix(basis):
    """Multiplication by z in the orthonormal basis, (K-1) x (K-1) upper Hessenberg."""
    K = basis.K
    return basis.H[: K - 1, : K - 1].copy()


def taylor_coeffs(basis, N):
    """A[l, k] = coefficient of (z / scale)^l in e_k, for l < N.

    Trapezoid Cauchy integrals over the boundary, normalized by the
    discrete contour integral of dz / z so orientation drops out.
    """
    z, dz = basis.rule.nodes, basis.rule.dz
    turns = np.sum(dz / z)
    if abs(turns) < np.pi:
        raise InvalidInput("the origin must lie inside the domain")
    l = np.arange(N)
    kern = (basis.scale / z[None, :]) ** l[:, None] * (dz / z)[None, :]
    return kern @ basis.values[:, : basis.K] / turns


@dataclass
class NilpotentBlock:
    N: int
    matrix: np.ndarray
    domain: DomainSpec
    residual: float

    def to_dict(self, with_matrix=True):
        d = {"N": self.N, "domain": self.domain.to_dict(), "residual": self.residual}
        if with_matrix:
            d["matrix"] = matrix_to_dict(self.matrix)
        return d


def nilpotent_block(basis, N):
    """M* compressed to ker (M*)^N = (z^N H^2)^perp, in an orthonormal basis.

    On V = ker (M*)^N the kernels k^(l) represent f -> f^(l)(0), and
    M* k^(l) = l k^(l-1). Gram-Schmidt on k^(0), ..., k^(N-1) turns that
    bidiagonal action into a strictly upper triangular matrix.
    """
    if N < 1 or 2 * N > basis.K:
        raise InvalidInput(f"need 1 <= N <= K/2, got N={N}, K={basis.K}")
    # kappa_l = sum_k conj(A[l, k]) e_k represents f -> coefficient of (z / scale)^l
    A = taylor_coeffs(basis, N)
    G = A @ A.conj().T
    G = (G + G.conj().T) / 2
    try:
        L = scipy.linalg.cholesky(G, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise ConditioningError(f"kernel Gram breakdown for N={N}", _cond(G))
    # factorial weights of the kernels collapse to scale * J^T
    JT = np.eye(N, k=1) * basis.scale
    T = L.conj().T @ JT @ scipy.linalg.solve_triangular(L.conj().T, np.eye(N), lower=False)
    residual = op_norm(np.linalg.matrix_power(T, N))
    if residual > RESIDUAL_CAP:
        raise ConditioningError(f"block N={N} fails nilpotency, ||T^N||={residual:.3g}", _cond(G))
    return NilpotentBlock(N, T, basis.domain, residual)


def block_for(domain, N, m=None):
    """Nilpotent block of size N from a basis of size 2N."""
    return nilpotent_block(build_basis(domain, 2 * N, m), N)
