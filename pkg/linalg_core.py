"""Dense complex kernels: singular values, norms, Psi and the numerical range."""
import logging

import numpy as np
import scipy.linalg

from errors import InvalidInput

log = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAXITER = 10000


def as_matrix(A):
    """Coerce to a nonempty, finite complex128 2-D array."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidInput(f"matrix must be 2-D and nonempty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("matrix has NaN or Inf entries")
    return A


def _square(A):
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise InvalidInput(f"square matrix required, got {A.shape[0]}x{A.shape[1]}")
    return A


def _scalar(z):
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise InvalidInput(f"non-finite point {z}")
    return z


def singular_values(A):
    """All singular values, descending (LAPACK gesdd bidiagonalization)."""
    return scipy.linalg.svdvals(as_matrix(A), check_finite=False)


def sigma_min(A):
    return float(singular_values(A)[-1])


def op_norm(A):
    return float(singular_values(A)[0])


def psi_eval(A, z):
    """Psi_A(z) = smallest singular value of A - zI (0 on the spectrum)."""
    A = _square(A)
    z = _scalar(z)
    shifted = A.copy()
    shifted[np.diag_indices_from(shifted)] -= z
    return float(scipy.linalg.svdvals(shifted, check_finite=False)[-1])


def rect_psi(R, z):
    """j of a tall rectangular section shifted by z (identity embedded in the top block)."""
    R = as_matrix(R)
    z = _scalar(z)
    if R.shape[0] < R.shape[1]:
        raise InvalidInput("rectangular section must have rows >= cols")
    shifted = R.copy()
    idx = np.arange(R.shape[1])
    shifted[idx, idx] -= z
    return float(scipy.linalg.svdvals(shifted, check_finite=False)[-1])


def hermitian_part(A, theta):
    B = np.exp(-1j * theta) * A
    return (B + B.conj().T) / 2


def support_function(A, theta):
    """rho_theta(A): top eigenvalue of the Hermitian part of e^{-i theta} A."""
    A = _square(A)
    w = scipy.linalg.eigvalsh(hermitian_part(A, float(theta)), check_finite=False)
    return float(w[-1])


def numerical_range_boundary(A, m=256):
    """Boundary points of W(A): <Ax, x> for the top eigenvector x at m angles."""
    A = _square(A)
    points = []
    for theta in np.linspace(0.0, 2 * np.pi, m, endpoint=False):
        _, vecs = scipy.linalg.eigh(hermitian_part(A, theta), check_finite=False)
        x = vecs[:, -1]
        points.append(complex(np.vdot(x, A @ x)))
    return np.array(points)


def lower_toeplitz(col, N):
    """N x N lower-triangular Toeplitz matrix with first column col[:N]."""
    col = np.asarray(col, dtype=complex)
    if len(col) < N:
        raise InvalidInput(f"need {N} coefficients, got {len(col)}")
    T = np.zeros((N, N), dtype=complex)
    for k in range(N):
        idx = np.arange(N - k)
        T[idx + k, idx] = col[k]
    return T


class LowerToeplitz:
    """Lower-triangular Toeplitz operator applied through a circulant embedding."""

    def __init__(self, col, N):
        col = np.asarray(col, dtype=complex)
        if len(col) < N:
            raise InvalidInput(f"need {N} coefficients, got {len(col)}")
        self.N = N
        circ = np.zeros(2 * N, dtype=complex)
        circ[:N] = col[:N]
        self.circ_fft = np.fft.fft(circ)

    def matvec(self, x):
        x_fft = np.fft.fft(x, n=len(self.circ_fft))
        return np.fft.ifft(self.circ_fft * x_fft)[: self.N]

    def rmatvec(self, x):
        # A^H = flip conj(A) flip for a lower-triangular Toeplitz A
        y = x[::-1].conj()
        return self.matvec(y).conj()[::-1]


def toeplitz_norm(col, N, tol=POWER_TOL, maxiter=POWER_MAXITER):
    """Power iteration on A^H A for a large triangular Toeplitz section.

    Starts from the normalized constant vector; the estimates never decrease.
    """
    op = LowerToeplitz(col, N)
    v = np.full(N, 1 / np.sqrt(N), dtype=complex)
    sigma = 0.0
    for it in range(maxiter):
        Av = op.matvec(v)
        new_sigma = float(np.linalg.norm(Av))
        w = op.rmatvec(Av)
        nw = np.linalg.norm(w)
        if nw == 0:
            return new_sigma
        v = w / nw
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1e-300):
            log.debug("toeplitz_norm N=%d converged after %d iterations", N, it + 1)
            return new_sigma
        sigma = new_sigma
    log.info("toeplitz_norm N=%d hit the iteration cap %d", N, maxiter)
    return sigma


def jordan(N):
    """J_N: ones on the first subdiagonal."""
    return np.eye(N, k=-1, dtype=complex)


def block_diag(*blocks):
    return scipy.linalg.block_diag(*[as_matrix(b) for b in blocks])


def random_unitary(n, rng):
    """Orthonormalize a complex Gaussian matrix (phases fixed so the law is Haar)."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_normal(n, rng, scale=1.0):
    """Unitary conjugation of a random diagonal; returns (matrix, eigenvalues)."""
    lam = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    U = random_unitary(n, rng)
    return (U * lam) @ U.conj().T, lam


def random_matrix(n, rng, scale=1.0):
    if n < 1:
        raise InvalidInput(f"matrix size must be >= 1, got {n}")
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)


def matrix_to_dict(A):
    A = as_matrix(A)
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "data": [[float(v.real), float(v.imag)] for v in A.ravel()],
    }
