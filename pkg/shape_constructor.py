"""
Nilpotent matrices with prescribed pseudospectral shapes.

Given nested domains G_0 > G_1 > ... > G_m around 0 and eps_1, pick
intermediate domains Omega_k, a decreasing sequence eps_k and nilpotent
blocks T_k = M(conj Omega_k)* on ker (M*)^{N_k} so that

    G_0 > sigma_{eps_1}(T) > G_1 > sigma_{eps_2}(T) > ... > G_m

for T the direct sum of the blocks; then check the chain on samples.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

import hardy_models
from errors import ConditioningError, ConstructionError, InfeasibleEpsilon, InvalidInput, NestingError
from hardy_models import DomainSpec, NilpotentBlock
from linalg_core import block_diag, matrix_to_dict, psi_eval
from psi_field import Lcg, PropertyReport
from schemas import ProblemIn

log = logging.getLogger(__name__)

INTERPOLATION_WEIGHT = 0.75
BOUNDARY_SAMPLES = 256
INTERIOR_RADII = (0.2, 0.4, 0.6, 0.8)
INTERIOR_ANGLES = 16
N_LADDER = tuple(8 * 2 ** k for k in range(7))  # 8 .. 512
SPECTRUM_HIT = 1e-14
BLOCK_LAW_TOL = 1e-12
# margins must be strictly positive
STRICT = -np.finfo(float).tiny


@dataclass
class ShapeProblem:
    domains: List[DomainSpec]
    eps1: float

    def __post_init__(self):
        if len(self.domains) < 2:
            raise InvalidInput("a shape problem needs G_0 and at least one G_k")
        if not self.eps1 > 0:
            raise InvalidInput(f"eps1 must be positive, got {self.eps1}")

    @property
    def m(self):
        return len(self.domains) - 1


def problem_from_dict(data):
    try:
        doc = ProblemIn.model_validate(data)
    except ValidationError as e:
        raise InvalidInput(f"invalid shape problem: {e}")
    return ShapeProblem(
        [hardy_models.domain_from_dict(d.model_dump()) for d in doc.domains],
        doc.eps1,
    )


@dataclass
class ShapeResult:
    omegas: List[DomainSpec]
    eps: List[float]
    Ns: List[int]
    blocks: List[NilpotentBlock]
    T: np.ndarray
    delta: float
    verification: PropertyReport
    block_law: Optional[PropertyReport] = None
    margins: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verification.passed and (self.block_law is None or self.block_law.passed)

    def to_dict(self, with_matrices=True):
        d = {
            "omegas": [o.to_dict() for o in self.omegas],
            "eps": self.eps,
            "Ns": self.Ns,
            "delta": self.delta,
            "margins": self.margins,
            "pass": self.passed,
            "verification": self.verification.to_dict(),
            "blocks": [b.to_dict(with_matrix=with_matrices) for b in self.blocks],
        }
        if self.block_law is not None:
            d["block_law"] = self.block_law.to_dict()
        return d


# --- Sampling ---

def boundary_samples(domain, n=BOUNDARY_SAMPLES):
    return domain.boundary(n)


def _centroid(domain):
    if domain.kind == "custom":
        return complex(np.mean(domain.boundary(0)))
    c = domain.center
    return np.conj(c) if domain.conjugated else c


def interior_samples(domain):
    """Radial-angular points of clos G: four radii fractions at sixteen angles."""
    c = _centroid(domain)
    ring = domain.boundary(INTERIOR_ANGLES) if domain.kind != "custom" else \
        domain.boundary(0)[:: max(len(domain.samples) // INTERIOR_ANGLES, 1)][:INTERIOR_ANGLES]
    return np.array([c + s * (p - c) for s in INTERIOR_RADII for p in ring])


def closure_samples(target):
    """Boundary plus interior samples of a domain, or explicit points as given."""
    if isinstance(target, DomainSpec):
        return np.concatenate([boundary_samples(target), interior_samples(target)])
    return np.atleast_1d(np.asarray(target, dtype=complex))


def exterior_ring(domain, offset, n=BOUNDARY_SAMPLES):
    """Boundary pushed outward along the normal by `offset`."""
    p = boundary_samples(domain, n)
    tangent = np.roll(p, -1) - np.roll(p, 1)
    # shoelace sign: positive area means counterclockwise
    area = np.sum(p.real * np.roll(p.imag, -1) - np.roll(p.real, -1) * p.imag)
    normal = -1j * tangent / np.abs(tangent)
    if area < 0:
        normal = -normal
    return p + offset * normal


def exterior_samples(domain, delta):
    return np.concatenate([boundary_samples(domain), exterior_ring(domain, delta / 2)])


def _matrices(blocks):
    return [b.matrix if isinstance(b, NilpotentBlock) else np.atleast_2d(b) for b in blocks]


def psi_of_blocks(blocks, points, threads=1):
    """Psi of the direct sum at each point, as the min over blocks."""
    mats = _matrices(blocks)

    def at(z):
        return min(psi_eval(A, z) for A in mats)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(at, points)))
    return np.array([at(z) for z in points])


# --- Planning ---

def _check_nested(outer, inner, label):
    pts = boundary_samples(inner)
    if not all(hardy_models.contains(outer, z) for z in pts):
        raise NestingError(f"{label}: inner boundary leaves the outer domain")
    gap = min(hardy_models.boundary_distance(outer, z) for z in pts)
    if gap <= 1e-9:
        raise NestingError(f"{label}: boundaries touch (distance {gap:.3g})")
    return gap


def boundary_gap(outer, inner):
    return min(hardy_models.boundary_distance(outer, z) for z in boundary_samples(inner))


def _interpolate(outer, inner, w=INTERPOLATION_WEIGHT):
    if outer.conjugated != inner.conjugated:
        raise InvalidInput("consecutive domains must share the conjugation flag")
    center = (1 - w) * outer.center + w * inner.center
    if outer.kind == "disc" and inner.kind == "disc":
        d = hardy_models.disc((1 - w) * outer.radius + w * inner.radius, center)
    else:
        oa, ob = (outer.radius, outer.radius) if outer.kind == "disc" else (outer.a, outer.b)
        ia, ib = (inner.radius, inner.radius) if inner.kind == "disc" else (inner.a, inner.b)
        d = hardy_models.ellipse((1 - w) * oa + w * ia, (1 - w) * ob + w * ib, center)
    return hardy_models.conjugate(d) if outer.conjugated else d


def plan_domains(problem):
    """Omega_k between G_{k-1} and G_k, three quarters of the way toward G_k."""
    G = problem.domains
    for d in G:
        if d.kind == "custom":
            raise InvalidInput("construction takes discs and ellipses; custom domains are for verification")
        if not hardy_models.contains(d, 0):
            raise InvalidInput(f"{d.kind} domain does not contain the origin")
    for k in range(1, len(G)):
        _check_nested(G[k - 1], G[k], f"G_{k - 1} / G_{k}")

    omegas = [_interpolate(G[k - 1], G[k]) for k in range(1, len(G))]
    for k, om in enumerate(omegas, start=1):
        _check_nested(G[k - 1], om, f"G_{k - 1} / Omega_{k}")
        _check_nested(om, G[k], f"Omega_{k} / G_{k}")

    achieved = boundary_gap(G[0], omegas[0])
    if not problem.eps1 < achieved:
        raise InfeasibleEpsilon(problem.eps1, achieved)
    log.info("planned %d intermediate domains; dist(dG_0, dOmega_1) = %.4g", len(omegas), achieved)
    return omegas


def domain_delta(omegas, domains):
    """min over j, k of dist(dOmega_j, dG_k)."""
    return min(boundary_gap(g, om) for om in omegas for g in domains)


# --- Block and epsilon choices ---

def choose_block(omega, target, eps, exterior=None, eps_exterior=None, delta=None,
                 ladder=N_LADDER, threads=1):
    """Smallest N on the ladder with Psi_block <= eps/2 on clos(target).

    With `exterior` given, also require Psi_block > eps_exterior on its
    boundary and on a ring delta/2 outside it.
    """
    if not eps > 0:
        raise InvalidInput(f"eps must be positive, got {eps}")
    inside = closure_samples(target)
    outside = exterior_samples(exterior, delta) if exterior is not None else None
    margins = {}
    for N in ladder:
        try:
            block = hardy_models.block_for(hardy_models.conjugate(omega), N)
        except ConditioningError as e:
            raise ConstructionError(str(e), "choose_block", margins)
        inner = float(psi_of_blocks([block], inside, threads).max())
        margins = {"N": N, "interior_max": inner, "interior_target": eps / 2}
        ok = inner <= eps / 2
        if outside is not None:
            outer = float(psi_of_blocks([block], outside, threads).min())
            margins.update(exterior_min=outer, exterior_target=eps_exterior)
            ok = ok and outer > eps_exterior
        log.debug("choose_block N=%d: %s", N, margins)
        if ok:
            log.info("block accepted at N=%d", N)
            return N, block, margins
    raise ConstructionError(f"no block up to N={ladder[-1]} meets eps={eps:g}", "choose_block", margins)


def choose_epsilon(blocks, outer, eps_prev, delta):
    """eps_k = 0.5 min(eps_{k-1}, delta, 1/R), R the largest resolvent norm outside G_{k-1}."""
    points = exterior_samples(outer, delta)
    psi = psi_of_blocks(blocks, points)
    hits = psi <= SPECTRUM_HIT
    if hits.any():
        log.info("choose_epsilon: %d samples on the spectrum excluded", int(hits.sum()))
        psi = psi[~hits]
    if psi.size == 0:
        raise ConstructionError("every exterior sample hit the spectrum", "choose_epsilon")
    R = 1.0 / psi.min()
    eps = 0.5 * min(eps_prev, delta, 1.0 / R)
    log.info("choose_epsilon: R=%.4g, eps=%.4g", R, eps)
    return eps


# --- Verification ---

def _margin_report(name):
    return PropertyReport(name, STRICT, max_violation=-np.inf)


def verify_inclusions(blocks, eps, domains, delta, threads=1):
    """Per k: Psi > eps_k outside G_{k-1} and Psi < eps_k on clos G_k.

    A positive margin on samples certifies, by 1-Lipschitz continuity,
    the same inequality on a margin-neighbourhood of every sample.
    """
    report = _margin_report("inclusions")
    for k, e in enumerate(eps, start=1):
        outside = exterior_samples(domains[k - 1], delta)
        psi_out = psi_of_blocks(blocks, outside, threads)
        i = int(np.argmin(psi_out))
        margin_out = float(psi_out[i] - e)
        report.record(-margin_out, {"k": k, "part": "outer", "z": [outside[i].real, outside[i].imag]})

        inside = closure_samples(domains[k])
        psi_in = psi_of_blocks(blocks, inside, threads)
        j = int(np.argmax(psi_in))
        margin_in = float(e - psi_in[j])
        report.record(-margin_in, {"k": k, "part": "inner", "z": [inside[j].real, inside[j].imag]})

        report.notes[f"k={k}"] = {"eps": e, "outer_margin": margin_out, "inner_margin": margin_in}
    return report


def check_block_law(blocks, lcg, samples=100, box=(-1.5, 1.5, -1.5, 1.5)):
    """Psi of the assembled direct sum equals the min over blocks."""
    mats = _matrices(blocks)
    T = block_diag(*mats)
    report = PropertyReport("block_min_law", BLOCK_LAW_TOL)
    for _ in range(samples):
        z = lcg.point(box)
        excess = abs(psi_eval(T, z) - min(psi_eval(A, z) for A in mats))
        report.record(excess, [z.real, z.imag])
    return report


def construct(problem, ladder=N_LADDER, seed=0x5EED, threads=1):
    omegas = plan_domains(problem)
    G = problem.domains
    delta = domain_delta(omegas, G)
    log.info("delta = %.4g", delta)

    eps = [problem.eps1]
    N, block, m1 = choose_block(omegas[0], G[1], eps[0], exterior=G[0], eps_exterior=eps[0],
                                delta=delta, ladder=ladder, threads=threads)
    blocks, Ns, margins = [block], [N], {"k=1": m1}
    for k in range(2, problem.m + 1):
        e = choose_epsilon(blocks, G[k - 1], eps[-1], delta)
        if not 0 < e < eps[-1]:
            raise ConstructionError(f"eps_{k}={e:g} does not decrease", "choose_epsilon")
        eps.append(e)
        N, block, mk = choose_block(omegas[k - 1], G[k], e, ladder=ladder, threads=threads)
        blocks.append(block)
        Ns.append(N)
        margins[f"k={k}"] = mk

    T = block_diag(*[b.matrix for b in blocks])
    verification = verify_inclusions(blocks, eps, G, delta, threads)
    law = check_block_law(blocks, Lcg(seed))
    result = ShapeResult(omegas, eps, Ns, blocks, T, delta, verification, law, margins)
    log.info("construction %s: eps=%s Ns=%s", "passed" if result.passed else "FAILED", eps, Ns)
    return result


def check_intermediate_levels(result, domains, n_eps=8, threads=1):
    """For eps in [eps_{k+1}, eps_k]: G_{k+1} inside sigma_eps(T) inside G_{k-1}."""
    report = _margin_report("intermediate_levels")
    for k in range(1, len(result.eps)):
        hi, lo = result.eps[k - 1], result.eps[k]
        for e in np.geomspace(lo, hi, n_eps):
            outside = exterior_samples(domains[k - 1], result.delta)
            inside = closure_samples(domains[k + 1])
            margin_out = float(psi_of_blocks(result.blocks, outside, threads).min() - e)
            margin_in = float(e - psi_of_blocks(result.blocks, inside, threads).max())
            report.record(-min(margin_out, margin_in), {"k": k, "eps": float(e)})
    return report


def result_matrix(result):
    return matrix_to_dict(result.T)
