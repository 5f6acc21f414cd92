"""
Psi on grids, pseudospectrum boundaries and empirical checks of the
elementary inequalities satisfied by Psi_T(z) = 1 / ||(T - z)^{-1}||.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals

from errors import InvalidInput
from linalg_core import (
    _square,
    op_norm,
    psi_eval,
    sigma_min,
    support_function,
)

log = logging.getLogger(__name__)

LIP_TOL = 1e-9
BAND_TOL = 1e-9
RATIO_TOL = 1e-9
SEMICONVEX_TOL = 1e-8
SUBHARMONIC_TOL = 1e-6
MUELLER_TOL = 1e-12
SPECTRUM_MARGIN = 1e-6
SEGMENT_SAMPLES = 33
CONVEXITY_TRIPLES = 17
INTERIOR_RINGS = 5
MAX_WITNESSES = 10
# unit roundoff times a safety factor, for the backward error of an SVD
ROUNDING = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidInput(f"empty grid rectangle {self}")
        if self.nx < 2 or self.ny < 2:
            raise InvalidInput("grid needs nx, ny >= 2")

    @classmethod
    def parse(cls, text):
        """Parse `xmin:xmax:ymin:ymax:nx:ny`."""
        parts = text.split(":")
        if len(parts) != 6:
            raise InvalidInput(f"grid must be xmin:xmax:ymin:ymax:nx:ny, got {text!r}")
        try:
            x0, x1, y0, y1 = (float(p) for p in parts[:4])
            nx, ny = int(parts[4]), int(parts[5])
        except ValueError:
            raise InvalidInput(f"malformed grid {text!r}")
        return cls(x0, x1, y0, y1, nx, ny)

    @property
    def xs(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def cell_diagonal(self):
        dx = (self.x_max - self.x_min) / (self.nx - 1)
        dy = (self.y_max - self.y_min) / (self.ny - 1)
        return float(np.hypot(dx, dy))

    def points(self):
        """Complex nodes, shape (ny, nx), row-major over y then x."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return X + 1j * Y

    def contains(self, z):
        return self.x_min <= z.real <= self.x_max and self.y_min <= z.imag <= self.y_max

    def to_dict(self):
        return {
            "x_min": self.x_min, "x_max": self.x_max,
            "y_min": self.y_min, "y_max": self.y_max,
            "nx": self.nx, "ny": self.ny,
        }


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise InvalidInput("field values do not match the grid")

    def interpolate(self, z):
        """Bilinear interpolation of the sampled values at z."""
        g = self.grid
        fx = (z.real - g.x_min) / (g.x_max - g.x_min) * (g.nx - 1)
        fy = (z.imag - g.y_min) / (g.y_max - g.y_min) * (g.ny - 1)
        j = min(max(int(np.floor(fx)), 0), g.nx - 2)
        i = min(max(int(np.floor(fy)), 0), g.ny - 2)
        tx, ty = fx - j, fy - i
        v = self.values
        return float(
            (1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i, j + 1]
            + (1 - tx) * ty * v[i + 1, j] + tx * ty * v[i + 1, j + 1]
        )


@dataclass
class LevelSet:
    epsilon: float
    polylines: list

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "polylines": [[[float(p.real), float(p.imag)] for p in line] for line in self.polylines],
        }


@dataclass
class PropertyReport:
    name: str
    tolerance: float
    samples: int = 0
    excluded: int = 0
    max_violation: float = 0.0
    witnesses: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.max_violation <= self.tolerance

    def record(self, excess, witness):
        """Count one evaluated sample; keep it as a witness if it breaks tolerance."""
        self.samples += 1
        if excess > self.max_violation:
            self.max_violation = float(excess)
        if excess > self.tolerance and len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append({"input": witness, "excess": float(excess)})

    def exclude(self):
        self.excluded += 1

    def to_dict(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "excluded": self.excluded,
            "max_violation": self.max_violation if np.isfinite(self.max_violation) else None,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "witnesses": self.witnesses,
            "notes": self.notes,
        }


def _pt(z):
    return [float(z.real), float(z.imag)]


# --- Sampling ---

class Lcg:
    """64-bit linear congruential generator (Knuth's MMIX constants).

    state <- a*state + c mod 2^64; uniforms use the top 53 bits.
    """

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed=0x5EED):
        self.state = seed & self.MASK

    def next_u64(self):
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * ((self.next_u64() >> 11) / float(1 << 53))

    def point(self, box):
        x0, x1, y0, y1 = box
        return complex(self.uniform(x0, x1), self.uniform(y0, y1))

    def polar(self, r_lo, r_hi):
        r = self.uniform(r_lo, r_hi)
        t = self.uniform(0.0, 2 * np.pi)
        return r * np.exp(1j * t)


def sample_pairs(lcg, n, box=(-3, 3, -3, 3)):
    return [(lcg.point(box), lcg.point(box)) for _ in range(n)]


def sample_points(lcg, n, box=(-3, 3, -3, 3)):
    return [lcg.point(box) for _ in range(n)]


def sample_annulus(lcg, n, r_lo, r_hi):
    return [lcg.polar(r_lo, r_hi) for _ in range(n)]


def sample_annulus_pairs(lcg, n, r_lo, r_hi):
    return [(lcg.polar(r_lo, r_hi), lcg.polar(r_lo, r_hi)) for _ in range(n)]


def sample_segments(lcg, n, box=(-3, 3, -3, 3), max_half=0.5):
    return [(lcg.point(box), lcg.polar(0.0, max_half)) for _ in range(n)]


def sample_discs(lcg, n, box=(-3, 3, -3, 3), r_range=(0.05, 0.5), m=64):
    return [(lcg.point(box), lcg.uniform(*r_range), m) for _ in range(n)]


# --- Fields and level sets ---

def compute_field(A, grid, threads=1):
    """Psi_A at every grid node; nodes are independent so any order gives the same bits."""
    A = _square(A)
    Z = grid.points()

    def row(i):
        return [psi_eval(A, z) for z in Z[i]]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(grid.ny)))
    else:
        rows = [row(i) for i in range(grid.ny)]
    return ScalarField(grid, np.array(rows, dtype=float))


def _edge_point(field, a, b, eps):
    """Linear interpolation of the eps crossing on the edge between nodes a and b."""
    (ia, ja), (ib, jb) = a, b
    va, vb = field.values[ia, ja], field.values[ib, jb]
    t = (eps - va) / (vb - va)
    t = min(max(t, 0.0), 1.0)
    xs, ys = field.grid.xs, field.grid.ys
    pa = complex(xs[ja], ys[ia])
    pb = complex(xs[jb], ys[ib])
    return pa + t * (pb - pa)


def _cell_segments(inside, center_inside):
    """Edge pairs crossed inside one cell.

    Corners: 0 bottom-left, 1 bottom-right, 2 top-right, 3 top-left.
    Edges: 0 bottom, 1 right, 2 top, 3 left.
    """
    crossings = {
        0: inside[0] != inside[1],
        1: inside[1] != inside[2],
        2: inside[3] != inside[2],
        3: inside[0] != inside[3],
    }
    crossed = [e for e in range(4) if crossings[e]]
    if len(crossed) == 2:
        return [tuple(crossed)]
    if len(crossed) == 4:
        # saddle: the center decides which diagonal pair is joined
        if center_inside == inside[0]:
            return [(0, 1), (2, 3)]
        return [(0, 3), (1, 2)]
    return []


def extract_level(field, eps):
    """Marching-squares polylines of {Psi = eps}; closed curves repeat their first vertex."""
    if not eps > 0:
        raise InvalidInput(f"epsilon must be positive, got {eps}")
    v = field.values
    ny, nx = v.shape
    inside_grid = v < eps

    points = {}
    adjacency = {}

    def edge_key(i, j, e):
        return {
            0: ("h", i, j),
            1: ("v", i, j + 1),
            2: ("h", i + 1, j),
            3: ("v", i, j),
        }[e]

    def edge_nodes(key):
        kind, i, j = key
        return ((i, j), (i, j + 1)) if kind == "h" else ((i, j), (i + 1, j))

    for i in range(ny - 1):
        for j in range(nx - 1):
            corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)]
            inside = [bool(inside_grid[c]) for c in corners]
            center = np.mean([v[c] for c in corners]) < eps
            for e0, e1 in _cell_segments(inside, center):
                k0, k1 = edge_key(i, j, e0), edge_key(i, j, e1)
                for k in (k0, k1):
                    if k not in points:
                        points[k] = _edge_point(field, *edge_nodes(k), eps)
                        adjacency[k] = []
                adjacency[k0].append(k1)
                adjacency[k1].append(k0)

    polylines = []
    seen = set()

    def walk(start):
        line = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev and k not in seen]
            if not nxt:
                if len(line) > 2 and start in adjacency[cur] and prev != start:
                    line.append(start)
                return line
            prev, cur = cur, nxt[0]
            seen.add(cur)
            line.append(cur)

    # open curves end on the grid border with a single neighbour
    for k in adjacency:
        if k not in seen and len(adjacency[k]) == 1:
            polylines.append(walk(k))
    for k in adjacency:
        if k not in seen:
            polylines.append(walk(k))

    return LevelSet(float(eps), [np.array([points[k] for k in line]) for line in polylines])


def levels_from_field(field, eps_list):
    return [extract_level(field, eps) for eps in eps_list]


# --- Property checks ---

def check_lip1(A, pairs):
    """|Psi(z) - Psi(z')| <= |z - z'|."""
    A = _square(A)
    if not pairs:
        raise InvalidInput("check_lip1 needs at least one pair")
    report = PropertyReport("lip1", LIP_TOL)
    for z, w in pairs:
        excess = abs(psi_eval(A, z) - psi_eval(A, w)) - abs(z - w)
        report.record(max(excess, 0.0), [_pt(z), _pt(w)])
    return report


def check_mueller(A, zs):
    """For matrices j_A(z), j_{A*}(conj z) and Psi_A(z) coincide."""
    A = _square(A)
    report = PropertyReport("mueller", MUELLER_TOL)
    norm = op_norm(A)
    n = A.shape[0]
    for z in zs:
        j = sigma_min(A - z * np.eye(n))
        j_adj = sigma_min(A.conj().T - np.conj(z) * np.eye(n))
        psi = psi_eval(A, z)
        scale = 1 + norm + abs(z)
        excess = max(abs(j - j_adj), abs(j - psi)) / scale
        report.record(excess, _pt(z))
    return report


def check_band(A, zs):
    """|z| - rho <= Psi(z) <= sqrt(|z|^2 - 2 rho |z| + ||A||^2), and the gap bound."""
    A = _square(A)
    norm = op_norm(A)
    report = PropertyReport("band", BAND_TOL)
    for z in zs:
        r = abs(z)
        rho = support_function(A, np.angle(z))
        if r <= rho:
            report.exclude()
            continue
        psi = psi_eval(A, z)
        upper = np.sqrt(max(r * r - 2 * rho * r + norm * norm, 0.0))
        gap_bound = (norm * norm - rho * rho) / (2 * (r - rho))
        excess = max(
            (r - rho) - psi,
            psi - upper,
            abs((r - psi) - rho) - gap_bound,
        )
        report.record(excess, _pt(z))
    report.notes["precondition_violated"] = report.excluded
    return report


def check_num_range_limit(A, thetas, radii):
    """r - Psi(r e^{i theta}) approaches rho_theta from below, within the band gap bound."""
    A = _square(A)
    norm = op_norm(A)
    report = PropertyReport("num_range_limit", BAND_TOL)
    for theta in thetas:
        rho = support_function(A, theta)
        for r in radii:
            if r <= rho:
                report.exclude()
                continue
            gap = (r - psi_eval(A, r * np.exp(1j * theta))) - rho
            bound = (norm * norm - rho * rho) / (2 * (r - rho))
            report.record(max(gap, -gap - bound), [float(theta), float(r)])
    return report


def check_ratio(A, pairs, c):
    """The two-point ratio estimate and Lipschitz continuity of Psi(z)/|z| on |z| >= c."""
    A = _square(A)
    norm = op_norm(A)
    if not c > norm:
        raise InvalidInput(f"c={c} must exceed ||A||={norm}")
    eta = norm / c ** 2
    report = PropertyReport("ratio", RATIO_TOL)
    report.notes["eta"] = eta
    for z, w in pairs:
        if abs(z) < c or abs(w) < c:
            report.exclude()
            continue
        pz, pw = psi_eval(A, z), psi_eval(A, w)
        qz, qw = pz / abs(z), pw / abs(w)
        d = abs(z - w)
        eps_zw = norm * d / (abs(w) * pz)
        eps_wz = norm * d / (abs(z) * pw)
        excess = max(
            qw - qz * (1 + eps_zw),
            qz - qw * (1 + eps_wz),
            abs(qz - qw) - eta * d,
        )
        report.record(excess, [_pt(z), _pt(w)])
    return report


def check_semiconvex(A, segments):
    """2u(mu) - u(mu+eta) - u(mu-eta) <= C'|eta|^2 for u = 1/Psi, C' = 2 (min Psi)^-3."""
    A = _square(A)
    norm = op_norm(A)
    report = PropertyReport("semiconvex", SEMICONVEX_TOL)
    s = np.linspace(-1.0, 1.0, SEGMENT_SAMPLES)
    for mu, eta in segments:
        mu, eta = complex(mu), complex(eta)
        psis = np.array([psi_eval(A, mu + t * eta) for t in s])
        # Psi is 1-Lipschitz, so between samples it dips at most half a spacing
        floor = psis.min() - abs(eta) / (SEGMENT_SAMPLES - 1)
        if floor <= SPECTRUM_MARGIN:
            report.exclude()
            continue
        c_prime = 2.0 / floor ** 3
        u = 1.0 / psis
        # rounding of sigma_min propagated through 1/Psi
        allowance = ROUNDING * (1 + norm + abs(mu) + abs(eta)) * u.max() ** 2 * 4
        mid = SEGMENT_SAMPLES // 2
        excess = 2 * u[mid] - u[-1] - u[0] - c_prime * abs(eta) ** 2 - allowance

        # u + C'/2 |x|^2 convex along the segment, checked at interior triples
        for k in range(1, CONVEXITY_TRIPLES + 1):
            t = -1.0 + 2.0 * k / (CONVEXITY_TRIPLES + 1)
            h = min(1 + t, 1 - t) * eta
            x = mu + t * eta
            ux, up, um = (1.0 / psi_eval(A, x + d) for d in (0, h, -h))
            triple = 2 * ux - up - um - c_prime * abs(h) ** 2 - allowance
            excess = max(excess, triple)
        report.record(excess, [_pt(mu), _pt(eta)])
    return report


def check_subharmonic(A, discs):
    """-log Psi(center) <= mean of -log Psi over the boundary circle."""
    A = _square(A)
    eigs = eigvals(A)
    report = PropertyReport("subharmonic", SUBHARMONIC_TOL)
    for center, radius, m in discs:
        center = complex(center)
        # ring samples can miss an eigenvalue sitting between them
        if np.abs(eigs - center).min() <= radius * (1 + 1e-9):
            report.exclude()
            continue
        theta = 2 * np.pi * np.arange(m) / m
        ring = center + radius * np.exp(1j * theta)
        boundary = np.array([psi_eval(A, z) for z in ring])
        interior = [
            psi_eval(A, center + radius * k / (INTERIOR_RINGS + 1) * np.exp(1j * t))
            for k in range(1, INTERIOR_RINGS + 1)
            for t in theta
        ]
        centre_psi = psi_eval(A, center)
        if min(boundary.min(), min(interior), centre_psi) <= SPECTRUM_MARGIN:
            report.exclude()
            continue
        f = -np.log(boundary)
        second = np.abs(np.roll(f, -1) - 2 * f + np.roll(f, 1)).max()
        allowance = radius ** 2 * second
        excess = -np.log(centre_psi) - f.mean() - allowance
        report.record(excess, [_pt(center), float(radius), int(m)])
    return report


CHECKS = ("lip1", "band", "ratio", "semiconvex", "subharmonic", "mueller", "numrange")


def run_checks(A, names, lcg, samples=200):
    """Run the named checks on LCG-drawn samples; returns reports in the order given."""
    A = _square(A)
    norm = op_norm(A)
    box = (-(norm + 1.5), norm + 1.5, -(norm + 1.5), norm + 1.5)
    reports = []
    for name in names:
        if name == "lip1":
            reports.append(check_lip1(A, sample_pairs(lcg, samples, box)))
        elif name == "band":
            reports.append(check_band(A, sample_annulus(lcg, samples, 1.1 * norm + 1e-3, 10 * norm + 1)))
        elif name == "ratio":
            c = 1.25 * norm + 1e-3
            reports.append(check_ratio(A, sample_annulus_pairs(lcg, samples, c, 4 * c), c))
        elif name == "semiconvex":
            reports.append(check_semiconvex(A, sample_segments(lcg, samples, box)))
        elif name == "subharmonic":
            reports.append(check_subharmonic(A, sample_discs(lcg, samples, box)))
        elif name == "mueller":
            reports.append(check_mueller(A, sample_points(lcg, samples, box)))
        elif name == "numrange":
            thetas = [lcg.uniform(0.0, 2 * np.pi) for _ in range(max(samples // 10, 1))]
            radii = [norm * 2.0 ** k + 1.0 for k in range(1, 11)]
            reports.append(check_num_range_limit(A, thetas, radii))
        else:
            raise InvalidInput(f"unknown property {name!r}; choose from {', '.join(CHECKS)}")
        log.info("%s: %d samples, max violation %.3g", name, reports[-1].samples, reports[-1].max_violation)
    return reports
