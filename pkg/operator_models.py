"""
Banded infinite operators with the standard filtration: finite and
rectangular sections, quasitriangularity defects, closed-form Psi where
one is known, and studies of how sections approximate the operator.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError

from errors import InvalidInput, UnsupportedModel
from linalg_core import lower_toeplitz, op_norm, psi_eval, rect_psi, support_function
from psi_field import PropertyReport
from schemas import MODEL_ADAPTER

log = logging.getLogger(__name__)

WINDING_SAMPLES = 4096
STUDY_SLACK = 1e-10
JOIN_TOL = 1e-12
ADJOINT_TOL = 1e-6
SPECTRUM_MARGIN = 1e-9


def _weight_at(weights, periodic, k):
    return weights[k % len(weights)] if periodic else weights[0]


@dataclass(frozen=True)
class UnilateralShift:
    """fwd: e_k -> w_k e_{k+1};  bwd: e_k -> w_k e_{k-1}, e_0 -> 0."""

    direction: str = "fwd"
    weights: Tuple[complex, ...] = (1.0,)
    periodic: bool = False

    @property
    def lower_bw(self):
        return 1 if self.direction == "fwd" else 0

    @property
    def qt_standard(self):
        return self.direction == "bwd"

    @property
    def norm_bound(self):
        return float(max(abs(w) for w in self.weights))

    def w(self, k):
        return _weight_at(self.weights, self.periodic, k)

    def rect_section(self, n):
        rows = n + self.lower_bw
        R = np.zeros((rows, n), dtype=complex)
        for k in range(n):
            if self.direction == "fwd":
                R[k + 1, k] = self.w(k)
            elif k >= 1:
                R[k - 1, k] = self.w(k)
        return R

    def adjoint(self):
        conj = tuple(complex(w).conjugate() for w in self.weights)
        if self.periodic:
            # fwd weight w_k sits on e_{k+1} -> e_k in the adjoint, so indices move by one
            p = len(conj)
            step = 1 if self.direction == "fwd" else -1
            conj = tuple(conj[(k - step) % p] for k in range(p))
        other = "bwd" if self.direction == "fwd" else "fwd"
        return UnilateralShift(other, conj, self.periodic)

    def psi_oracle(self, z):
        if self.periodic and len(set(self.weights)) > 1:
            return None
        return max(abs(z) - abs(self.weights[0]), 0.0)


@dataclass(frozen=True)
class BilateralShift:
    """T(s) on l2(Z): e_j -> e_{j+1} for j != 0 and e_0 -> s e_1; window [-n, n]."""

    s: complex = 1.0

    lower_bw = 1
    qt_standard = False

    @property
    def norm_bound(self):
        return max(1.0, abs(self.s))

    def rect_section(self, n):
        size = 2 * n + 1
        R = np.zeros((size + 1, size), dtype=complex)
        for j in range(-n, n + 1):
            R[j + 1 + n, j + n] = self.s if j == 0 else 1.0
        return R

    def adjoint(self):
        raise UnsupportedModel("the adjoint of a bilateral shift is not a supported model")

    def psi_oracle(self, z):
        if np.isclose(abs(self.s), 1.0, rtol=0, atol=1e-15):
            return abs(abs(z) - 1.0)
        if self.s == 0:
            return max(abs(z) - 1.0, 0.0)
        return None


@dataclass(frozen=True)
class AnalyticToeplitz:
    """Multiplication by a polynomial symbol on H^2 of the disc (or its adjoint)."""

    symbol: Tuple[complex, ...]
    adjoint_flag: bool = False

    @property
    def degree(self):
        return len(self.symbol) - 1

    @property
    def lower_bw(self):
        return 0 if self.adjoint_flag else self.degree

    @property
    def qt_standard(self):
        return self.adjoint_flag or self.degree == 0

    @property
    def norm_bound(self):
        return float(sum(abs(c) for c in self.symbol))

    def rect_section(self, n):
        col = np.zeros(n + self.degree, dtype=complex)
        col[: len(self.symbol)] = self.symbol
        full = lower_toeplitz(col, n + self.degree)
        if self.adjoint_flag:
            return full[:n, :n].conj().T
        return full[: n + self.degree, :n]

    def adjoint(self):
        return AnalyticToeplitz(self.symbol, not self.adjoint_flag)

    def boundary(self, m=WINDING_SAMPLES):
        w = np.exp(2j * np.pi * np.arange(m) / m)
        return np.polyval(np.array(self.symbol[::-1]), w)

    def psi_oracle(self, z):
        if self.adjoint_flag:
            z = np.conj(z)
        if self.degree == 0:
            return abs(z - self.symbol[0])
        curve = self.boundary() - z
        d = float(np.abs(curve).min())
        if d == 0.0:
            return 0.0
        winding = np.round(np.sum(np.angle(np.roll(curve, -1) / curve)) / (2 * np.pi))
        if abs(winding) >= 1:
            return 0.0
        resolution = float(np.abs(np.diff(curve)).max())
        if d < resolution:
            log.debug("oracle at %s is within boundary sampling resolution (%.2g)", z, resolution)
        return d


@dataclass(frozen=True)
class DiagonalNormal:
    """Diagonal operator with eigenvalues points[k % len(points)]."""

    points: Tuple[complex, ...]

    lower_bw = 0
    qt_standard = True

    @classmethod
    def disc_net(cls, center, radius, spacing):
        k = int(np.floor(radius / spacing))
        offsets = spacing * np.arange(-k, k + 1)
        pts = [
            center + complex(x, y)
            for y in offsets
            for x in offsets
            if abs(complex(x, y)) <= radius + 1e-12
        ]
        return cls(tuple(pts))

    @property
    def norm_bound(self):
        return float(max(abs(p) for p in self.points))

    def rect_section(self, n):
        return np.diag([self.points[k % len(self.points)] for k in range(n)]).astype(complex)

    def adjoint(self):
        return DiagonalNormal(tuple(complex(p).conjugate() for p in self.points))

    def psi_oracle(self, z):
        return float(np.abs(np.array(self.points) - z).min())


@dataclass(frozen=True)
class DirectSum:
    """Round-robin interleave: global index g belongs to child g % m at local index g // m."""

    children: tuple

    def __post_init__(self):
        if not self.children:
            raise InvalidInput("a direct sum needs at least one child")
        for child in self.children:
            if isinstance(child, BilateralShift):
                raise UnsupportedModel("direct sums take one-sided children only")

    @property
    def lower_bw(self):
        return max(c.lower_bw for c in self.children)

    @property
    def qt_standard(self):
        return all(c.qt_standard for c in self.children)

    @property
    def norm_bound(self):
        return max(c.norm_bound for c in self.children)

    def _local_sizes(self, n):
        m = len(self.children)
        return [(n - c + m - 1) // m for c in range(m)]

    def rect_section(self, n):
        m = len(self.children)
        placements = []
        rows_global = set(range(n))
        for c, (child, nc) in enumerate(zip(self.children, self._local_sizes(n))):
            if nc == 0:
                continue
            R = child.rect_section(nc)
            g_rows = [c + m * l for l in range(R.shape[0])]
            g_cols = [c + m * l for l in range(nc)]
            rows_global.update(g_rows)
            placements.append((R, g_rows, g_cols))
        # window rows first, in global order, then the rows below it
        order = sorted(rows_global)
        position = {g: i for i, g in enumerate(order)}
        out = np.zeros((len(order), n), dtype=complex)
        for R, g_rows, g_cols in placements:
            out[np.ix_([position[g] for g in g_rows], g_cols)] = R
        return out

    def adjoint(self):
        return DirectSum(tuple(c.adjoint() for c in self.children))

    def psi_oracle(self, z):
        values = [c.psi_oracle(z) for c in self.children]
        if any(v is None for v in values):
            return None
        return min(values)


def window_size(model, n):
    return 2 * n + 1 if isinstance(model, BilateralShift) else n


def _check_n(n):
    if n < 1:
        raise InvalidInput(f"section size must be >= 1, got {n}")


def rect_section(model, n):
    """Matrix of T restricted to the n-window, with all rows its image reaches."""
    _check_n(n)
    if model.lower_bw is None:
        raise UnsupportedModel(f"{type(model).__name__} has no finite lower band")
    return model.rect_section(n)


def section(model, n):
    """P_n T P_n on the standard window."""
    _check_n(n)
    R = model.rect_section(n)
    return R[: R.shape[1], :]


def qt_defect(model, n):
    """||(I - P_n) T P_n||: norm of the rows of the image below the window."""
    _check_n(n)
    if model.lower_bw is None:
        return float("inf")
    R = model.rect_section(n)
    below = R[R.shape[1]:, :]
    if below.size == 0 or not below.any():
        return 0.0
    return op_norm(below)


def psi_oracle(model, z):
    return model.psi_oracle(complex(z))


def adjoint(model):
    return model.adjoint()


def rect_j(model, n, z):
    """j of T - z on the n-window; nonincreasing in n and bounded below by j_T(z)."""
    return rect_psi(rect_section(model, n), z)


def psi_estimate(model, n, z):
    """min(j_T(z), j_{T*}(conj z)) with both injectivity radii taken on the n-window."""
    z = complex(z)
    j = rect_j(model, n, z)
    try:
        adj = model.adjoint()
    except UnsupportedModel:
        return j
    return min(j, rect_j(adj, n, z.conjugate()))


def _node_map(fn, nodes, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, nodes))
    return [fn(z) for z in nodes]


@dataclass
class StudyTable:
    kind: str
    rows: list
    reference: str = ""
    qt_standard: bool = False
    monotone: bool = True
    witness: Optional[complex] = None

    @property
    def negative_control(self):
        return self.kind == "sections" and not self.qt_standard

    def to_dict(self):
        return {
            "kind": self.kind,
            "reference": self.reference,
            "qt_standard": self.qt_standard,
            "negative_control": self.negative_control,
            "monotone": self.monotone,
            "witness": None if self.witness is None else [self.witness.real, self.witness.imag],
            "rows": self.rows,
        }


def convergence_study(model, grid, sizes, annulus=None, threads=1):
    """sup over nodes of |Psi_{T_n} - reference| for each n.

    The reference is the closed-form Psi for quasitriangular models (or a
    two-sided rectangular estimate at twice the largest n), and the
    rectangular j of T at the largest n otherwise.
    """
    if not sizes:
        raise InvalidInput("convergence_study needs at least one size")
    sizes = sorted(sizes)
    nodes = [complex(z) for z in grid.points().ravel()]
    if annulus is not None:
        r_min, r_max = annulus
        nodes = [z for z in nodes if r_min <= abs(z) <= r_max]
    if not nodes:
        raise InvalidInput("no grid nodes inside the study region")

    if model.qt_standard:
        oracle = [model.psi_oracle(z) for z in nodes]
        if all(v is not None for v in oracle):
            reference, label = oracle, "oracle"
        else:
            n_ref = 2 * sizes[-1]
            reference = _node_map(lambda z: psi_estimate(model, n_ref, z), nodes, threads)
            label = f"psi_estimate(n={n_ref})"
    else:
        try:
            reference = _node_map(lambda z: rect_j(model, sizes[-1], z), nodes, threads)
        except UnsupportedModel:
            raise UnsupportedModel(f"{type(model).__name__} has neither an oracle nor a baseline")
        label = f"rect_j(n={sizes[-1]})"

    rows = []
    witness = None
    for n in sizes:
        A = section(model, n)
        values = _node_map(lambda z: psi_eval(A, z), nodes, threads)
        errors = np.abs(np.array(values) - np.array(reference))
        k = int(np.argmax(errors))
        rows.append({"n": n, "sup_error": float(errors[k])})
        witness = nodes[k]
        log.info("section n=%d: sup error %.3g at %s", n, errors[k], nodes[k])

    sup = [r["sup_error"] for r in rows]
    monotone = all(b <= a + STUDY_SLACK for a, b in zip(sup, sup[1:]))
    return StudyTable("sections", rows, label, model.qt_standard, monotone, witness)


def support_convergence(model, thetas, sizes):
    """rho_theta of nested sections; nondecreasing in n."""
    rows = []
    monotone = True
    for theta in thetas:
        prev = -np.inf
        for n in sorted(sizes):
            rho = support_function(section(model, n), theta)
            if rho < prev - STUDY_SLACK:
                monotone = False
            prev = rho
            rows.append({"theta": float(theta), "n": n, "rho": rho})
    return StudyTable("support", rows, "nested sections", model.qt_standard, monotone)


def join_check(model, K, zs, n=64):
    """Adding a normal summand with spectrum K inside sigma(T) leaves Psi unchanged."""
    K = [complex(k) for k in K]
    report = PropertyReport("join", JOIN_TOL)
    joined = DirectSum((model, DiagonalNormal(tuple(K)))) if K else None
    T_n = section(model, n)
    S_2n = section(joined, 2 * n) if joined is not None else None
    D_n = section(DiagonalNormal(tuple(K)), n) if K else None
    for z in zs:
        z = complex(z)
        psi_T = model.psi_oracle(z)
        if psi_T is None:
            raise UnsupportedModel(f"{type(model).__name__} has no closed-form Psi")
        if psi_T <= SPECTRUM_MARGIN:
            report.exclude()
            continue
        d_K = min((abs(z - k) for k in K), default=np.inf)
        excess = abs(min(psi_T, d_K) - psi_T)
        if joined is not None:
            psi_S = psi_eval(S_2n, z)
            psi_Tn = psi_eval(T_n, z)
            scale = 1 + abs(z) + joined.norm_bound
            excess = max(
                excess,
                (psi_S - psi_Tn) / scale,
                abs(psi_S - min(psi_Tn, psi_eval(D_n, z))) / scale,
            )
        report.record(excess, [z.real, z.imag])
    return report


def adjoint_study(model, zs, n=64):
    """j_T(z) <= j_{T*}(conj z) on the n-window, expected for quasitriangular T."""
    adj = model.adjoint()
    report = PropertyReport("adjoint", ADJOINT_TOL)
    report.notes["qt_standard"] = model.qt_standard
    for z in zs:
        z = complex(z)
        excess = rect_j(model, n, z) - rect_j(adj, n, z.conjugate())
        report.record(excess, [z.real, z.imag])
    return report


def _cx(pair):
    return complex(pair[0], pair[1])


def _build(doc):
    kind = doc.variant
    if kind == "unilateral_shift":
        rule = doc.weights
        if rule.kind == "constant":
            return UnilateralShift(doc.direction, (_cx(rule.value),))
        return UnilateralShift(doc.direction, tuple(_cx(v) for v in rule.values), periodic=True)
    if kind == "bilateral_shift":
        return BilateralShift(_cx(doc.s))
    if kind == "analytic_toeplitz":
        return AnalyticToeplitz(tuple(_cx(c) for c in doc.symbol), doc.adjoint)
    if kind == "diagonal_normal":
        rule = doc.eigenvalues
        if rule.kind == "points":
            return DiagonalNormal(tuple(_cx(v) for v in rule.values))
        return DiagonalNormal.disc_net(_cx(rule.center), rule.radius, rule.spacing)
    return DirectSum(tuple(_build(c) for c in doc.children))


def model_from_dict(data):
    """Validate model JSON and build the operator."""
    try:
        doc = MODEL_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise InvalidInput(f"invalid model: {e}")
    return _build(doc)
