"""
Truncated power series and the functional calculus of nilpotent Jordan
blocks: f(J_N) is the lower-triangular Toeplitz matrix built from the
Taylor coefficients of f.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import betaln

from errors import BranchError, InvalidInput, SaturationError
from linalg_core import lower_toeplitz, op_norm, toeplitz_norm

log = logging.getLogger(__name__)

SATURATION = 1e100
TAU_SAMPLES = 64
DENSE_NORM_MAX = 1024
FIT_WINDOW = (10, 40)
MONOTONE_SLACK = 1e-12


@dataclass
class PowerSeries:
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex).ravel()
        if len(self.coeffs) < 1:
            raise InvalidInput("a power series needs at least one coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInput("power series coefficients must be finite")

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def to_list(self):
        return [[float(c.real), float(c.imag)] for c in self.coeffs]


def series_add(p, q):
    n = max(len(p), len(q))
    out = np.zeros(n, dtype=complex)
    out[: len(p)] += p.coeffs
    out[: len(q)] += q.coeffs
    return PowerSeries(out)


def series_mul(p, q):
    """Cauchy product truncated to the shorter length."""
    n = min(len(p), len(q))
    return PowerSeries(np.convolve(p.coeffs[:n], q.coeffs[:n])[:n])


def _on_cut(w):
    return w.imag == 0 and w.real <= 0


def series_sqrt(p):
    """Principal square root by the coefficient recurrence."""
    p0 = complex(p[0])
    if _on_cut(p0):
        raise BranchError(f"constant term {p0} lies on the branch cut of the principal root")
    N = len(p)
    q = np.zeros(N, dtype=complex)
    q[0] = np.sqrt(p0)
    for n in range(1, N):
        acc = np.dot(q[1:n], q[n - 1:0:-1]) if n > 1 else 0.0
        q[n] = (p[n] - acc) / (2 * q[0])
        if abs(q[n]) > SATURATION:
            raise SaturationError(f"coefficient {n} of the square root exceeds {SATURATION:g}")
    return PowerSeries(q)


def ft_series(t, N):
    """Taylor coefficients of sqrt(z^2 - z + t) at 0."""
    t = complex(t)
    if t == 0:
        raise BranchError("t = 0 puts the root's branch point at the origin")
    if N < 1:
        raise InvalidInput(f"N must be >= 1, got {N}")
    p = np.zeros(N, dtype=complex)
    p[0] = t
    if N > 1:
        p[1] = -1
    if N > 2:
        p[2] = 1
    return series_sqrt(PowerSeries(p))


def sqrt1mz(N):
    p = np.zeros(N, dtype=complex)
    p[0] = 1
    if N > 1:
        p[1] = -1
    return series_sqrt(PowerSeries(p))


def log1mz(N):
    """log(1 / (1 - z)) = sum z^n / n."""
    c = np.zeros(N, dtype=complex)
    c[1:] = 1.0 / np.arange(1, N)
    return PowerSeries(c)


def one(N):
    c = np.zeros(N, dtype=complex)
    c[0] = 1
    return PowerSeries(c)


NAMED_SERIES = {"sqrt1mz": sqrt1mz, "log1mz": log1mz, "one": one}


def c_coefficient(n):
    """c_n = 1 / (2 (n + 1/2)(n - 1/2) B(1/2, n + 1)); sqrt(1 - z) = 1 - sum c_n z^n."""
    return float(np.exp(-betaln(0.5, n + 1.0)) / (2 * (n + 0.5) * (n - 0.5)))


class ClosedForm(NamedTuple):
    c: float
    h: complex
    g_scale: float
    rho: float
    sign: complex


def closed_form_coeffs(t, n):
    """Singular part of the n-th coefficient from the two branch points z_1, z_2.

    h_n = -c_n (a z_1^-n + b z_2^-n); the remainder sign * f_n - h_n is
    O(rho^-n / n^2), returned as g_scale = rho^-n / n^2.
    """
    t = complex(t)
    r = abs(t - 0.25)
    if not (0 < r < 0.25):
        raise InvalidInput(f"|t - 1/4| = {r:g} must lie in (0, 1/4)")
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n}")
    s = np.sqrt(0.25 - t)
    z1, z2 = 0.5 + s, 0.5 - s
    a = np.sqrt(z2 - z1) * np.sqrt(z1)
    b = np.sqrt(z1 - z2) * np.sqrt(z2)
    rho = min(abs(z1), abs(z2))
    c = c_coefficient(n)
    h = -c * (a * z1 ** (-n) + b * z2 ** (-n))
    sign = np.sqrt(z1) * np.sqrt(z2) / np.sqrt(t)
    return ClosedForm(c, complex(h), float(rho ** (-n) / n ** 2), float(rho), complex(np.round(sign.real)))


def fit_g_constant(r=0.1, window=FIT_WINDOW, samples=TAU_SAMPLES):
    """Smallest K with |sign f_n - h_n| <= K rho^-n / n^2 over the window and the t-circle."""
    lo, hi = window
    k_hat = 0.0
    for k in range(samples):
        t = 0.25 + r * np.exp(2j * np.pi * k / samples)
        f = ft_series(t, hi + 1)
        for n in range(lo, hi + 1):
            cf = closed_form_coeffs(t, n)
            k_hat = max(k_hat, abs(cf.sign * f[n] - cf.h) / cf.g_scale)
    log.info("fitted remainder constant K=%.4g on n in [%d, %d], |t - 1/4| = %g", k_hat, lo, hi, r)
    return k_hat


def toeplitz_of_series(q, N):
    if len(q) < N:
        raise InvalidInput(f"series has {len(q)} coefficients, need {N}")
    return lower_toeplitz(q.coeffs, N)


def sqrt_shifted(tau, N):
    """sqrt(tau - S_N) for S_N = 4 J_N - 4 J_N^2, as 2 f_{tau/4}(J_N)."""
    tau = complex(tau)
    if tau == 0:
        raise BranchError("tau = 0 has no principal square root of tau - S_N")
    return 2 * toeplitz_of_series(ft_series(tau / 4, N), N)


def s_matrix(N):
    return toeplitz_of_series(PowerSeries([0, 4, -4] + [0] * max(N - 3, 0)), N)


@dataclass
class OscillationScanResult:
    r: float
    M: float
    per_N: list
    N_star: Optional[int] = None
    contrast: list = field(default_factory=list)

    def to_dict(self):
        return {
            "r": self.r,
            "M": self.M,
            "N_star": self.N_star,
            "per_N": self.per_N,
            "contrast": self.contrast,
        }


def _check_radius(r):
    if not (0 < r < 0.5):
        raise InvalidInput(f"r must lie in (0, 1/2), got {r}")


def _min_norm(N, taus, threads):
    def norm_at(tau):
        try:
            return op_norm(sqrt_shifted(tau, N))
        except SaturationError:
            return np.inf

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            norms = list(pool.map(norm_at, taus))
    else:
        norms = [norm_at(tau) for tau in taus]
    k = int(np.argmin(norms))
    return norms[k], taus[k]


def coefficient_maxima(r, N, samples=TAU_SAMPLES):
    """Running maxima max_{1<=n<=N} |f_n(t)| for t on |t - 1/4| = r, shape (samples, N)."""
    rows = []
    for k in range(samples):
        t = 0.25 + r * np.exp(2j * np.pi * k / samples)
        try:
            f = np.abs(ft_series(t, N + 1).coeffs[1:])
        except SaturationError:
            f = np.full(N, np.inf)
        rows.append(np.maximum.accumulate(f))
    return np.array(rows)


def coefficient_scan(r, M, N_max=150, samples=TAU_SAMPLES):
    """First N at which every t on the circle has some |f_n(t)| > M."""
    maxima = coefficient_maxima(r, N_max, samples)
    first = []
    for row in maxima:
        hit = np.nonzero(row > M)[0]
        first.append(int(hit[0]) + 1 if hit.size else None)
    worst = None if any(f is None for f in first) else max(first)
    log.info("coefficient scan r=%g M=%g: all samples exceed M by N=%s", r, M, worst)
    return {"r": r, "M": M, "N_max": N_max, "first_N": first, "N_all": worst}


def contrast_pair(ladder):
    """||sqrt(I - S_N)|| = ||I - 2 J_N|| per N."""
    return [{"N": N, "norm": op_norm(sqrt_shifted(1.0, N))} for N in ladder]


def oscillation_scan(r, M, ladder, samples=TAU_SAMPLES, threads=1):
    """min over |tau - 1| = r of ||sqrt(tau - S_N)|| for each N on the ladder."""
    _check_radius(r)
    if not ladder:
        raise InvalidInput("empty N ladder")
    taus = [1 + r * np.exp(2j * np.pi * k / samples) for k in range(samples)]
    maxima = coefficient_maxima(r / 4, max(ladder), samples)
    per_N = []
    N_star = None
    for N in ladder:
        m, tau = _min_norm(N, taus, threads)
        saturated = not np.isfinite(m)
        per_N.append({
            "N": N,
            "min_norm": None if saturated else m,
            "argmin_tau": [tau.real, tau.imag],
            "coef_min_max": float(maxima[:, N - 1].min()),
            "saturated": saturated,
        })
        if N_star is None and (saturated or m >= M):
            N_star = N
        log.info("oscillation N=%d: min norm %s", N, "saturated" if saturated else f"{m:.4g}")
    return OscillationScanResult(r, M, per_N, N_star, contrast_pair(ladder))


def multiplier_growth(q, ladder):
    """||q(J_N)|| per N: dense SVD up to N=1024, power iteration beyond."""
    if not ladder:
        raise InvalidInput("empty N ladder")
    if len(q) < max(ladder):
        raise InvalidInput(f"series has {len(q)} coefficients, ladder needs {max(ladder)}")
    rows = []
    for N in sorted(ladder):
        if N <= DENSE_NORM_MAX:
            norm = op_norm(toeplitz_of_series(q, N))
        else:
            norm = toeplitz_norm(q.coeffs, N)
        rows.append({"N": N, "norm": norm})
    norms = [row["norm"] for row in rows]
    monotone = all(b >= a - MONOTONE_SLACK * max(a, 1.0) for a, b in zip(norms, norms[1:]))
    return {"rows": rows, "monotone": monotone}
