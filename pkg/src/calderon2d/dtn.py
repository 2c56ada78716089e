"""Finite-element forward solver and boundary operators on the disc.

The Dirichlet-to-Neumann map is assembled weakly through the energy form

    Q(phi) = integral over Omega of grad(u) . sigma grad(u) dx
           = integral over dOmega of Lambda(phi) phi dS,

never by pointwise normal differentiation, so discontinuous sigma is
handled without fuss.  Traces live in the orthonormal trigonometric
basis {1/sqrt(2 pi), cos(n t)/sqrt(pi), sin(n t)/sqrt(pi)} of the
boundary parameter; in that basis the matrix of the quadratic form for
sigma = 1 on the unit disc is diag(0, 1, 1, 2, 2, ...).

Companion operators: the sigma-harmonic conjugate (a Neumann solve for
the conjugate tensor sigma/det sigma with flux equal to minus the
tangential derivative of the primal trace), the boundary Hilbert
transform obtained by tangential integration of the DtN output, the
Cauchy-data pairing, boundary reparametrization of DtN matrices, and the
Neumann-to-Dirichlet pseudo-inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import TriangularMesh, disc_mesh


# ---------------------------------------------------------------------------
# trace basis
# ---------------------------------------------------------------------------


def trace_basis_matrix(theta: np.ndarray, N: int) -> np.ndarray:
    """Rows: orthonormal trig basis functions sampled at the angles theta."""
    rows = [np.full_like(theta, 1.0 / np.sqrt(2.0 * np.pi))]
    for n in range(1, N + 1):
        rows.append(np.cos(n * theta) / np.sqrt(np.pi))
        rows.append(np.sin(n * theta) / np.sqrt(np.pi))
    return np.array(rows)


def basis_size(N: int) -> int:
    return 2 * N + 1


def mode_of_index(a: int) -> int:
    """Fourier order |n| of basis index a."""
    return (a + 1) // 2


@dataclass
class BoundaryTrace:
    """Trace on the boundary circle as orthonormal-trig coefficients."""

    coeffs: np.ndarray
    N: int

    @classmethod
    def from_function(cls, fn, N: int, quad: int = 0) -> "BoundaryTrace":
        nq = quad or max(512, 8 * N)
        th = 2.0 * np.pi * np.arange(nq) / nq
        B = trace_basis_matrix(th, N)
        vals = np.asarray(fn(th))
        coeffs = B @ vals * (2.0 * np.pi / nq)
        return cls(coeffs, N)

    @classmethod
    def cos(cls, n: int, N: int) -> "BoundaryTrace":
        c = np.zeros(basis_size(N))
        if n == 0:
            c[0] = np.sqrt(2.0 * np.pi)
        else:
            c[2 * n - 1] = np.sqrt(np.pi)
        return cls(c, N)

    @classmethod
    def sin(cls, n: int, N: int) -> "BoundaryTrace":
        c = np.zeros(basis_size(N))
        c[2 * n] = np.sqrt(np.pi)
        return cls(c, N)

    def values(self, theta: np.ndarray) -> np.ndarray:
        return trace_basis_matrix(theta, self.N).T @ self.coeffs

    def h_half_norm_sq(self) -> float:
        w = np.array([1.0 + mode_of_index(a) for a in range(len(self.coeffs))])
        return float(np.sum(w * np.abs(self.coeffs) ** 2))

    def zero_mean(self) -> "BoundaryTrace":
        c = self.coeffs.copy()
        c[0] = 0.0
        return BoundaryTrace(c, self.N)


# ---------------------------------------------------------------------------
# P1 assembly and Dirichlet solves
# ---------------------------------------------------------------------------


def assemble_stiffness(mesh: TriangularMesh, sigma_fn) -> sp.csr_matrix:
    """P1 stiffness matrix; sigma evaluated at triangle centroids."""
    p = mesh.pts[mesh.tris]
    x1, y1 = p[:, 0, 0], p[:, 0, 1]
    x2, y2 = p[:, 1, 0], p[:, 1, 1]
    x3, y3 = p[:, 2, 0], p[:, 2, 1]
    det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    area = det / 2.0
    if np.any(area <= 0):
        raise ValueError("mesh contains non-positively-oriented triangles")
    bx = np.stack([y2 - y3, y3 - y1, y1 - y2], axis=1) / det[:, None]
    by = np.stack([x3 - x2, x1 - x3, x2 - x1], axis=1) / det[:, None]
    cx = (x1 + x2 + x3) / 3.0
    cy = (y1 + y2 + y3) / 3.0
    s11, s12, s22 = sigma_fn(cx, cy)
    s11 = np.broadcast_to(s11, cx.shape)
    s12 = np.broadcast_to(s12, cx.shape)
    s22 = np.broadcast_to(s22, cx.shape)
    I, J, V = [], [], []
    for a in range(3):
        for b in range(3):
            val = area * (s11 * bx[:, a] * bx[:, b]
                          + s12 * (bx[:, a] * by[:, b] + by[:, a] * bx[:, b])
                          + s22 * by[:, a] * by[:, b])
            I.append(mesh.tris[:, a])
            J.append(mesh.tris[:, b])
            V.append(val)
    A = sp.csr_matrix((np.concatenate(V), (np.concatenate(I), np.concatenate(J))),
                      shape=(len(mesh.pts), len(mesh.pts)))
    return A


def _sigma_fn(sigma) -> object:
    if callable(sigma):
        return sigma
    if hasattr(sigma, "fem_coefficients"):
        return sigma.fem_coefficients()
    if np.isscalar(sigma):
        c = float(sigma)
        return lambda x, y: (np.full_like(x, c), np.zeros_like(x), np.full_like(x, c))
    raise TypeError(f"cannot interpret conductivity of type {type(sigma)}")


class DiscreteOperator:
    """Factorized stiffness operator for repeated boundary-value solves."""

    def __init__(self, mesh: TriangularMesh, sigma):
        self.mesh = mesh
        self.A = assemble_stiffness(mesh, _sigma_fn(sigma))
        self.interior = mesh.interior_index()
        self.bnd = mesh.boundary
        Aii = self.A[self.interior][:, self.interior].tocsc()
        try:
            self.solve_interior = spla.factorized(Aii)
        except RuntimeError as exc:
            raise RuntimeError(f"singular stiffness matrix: {exc}") from exc
        self.Aib = self.A[self.interior][:, self.bnd]

    def dirichlet(self, boundary_values: np.ndarray) -> np.ndarray:
        """Galerkin solution interpolating the given boundary vertex values."""
        u = np.zeros(len(self.mesh.pts), dtype=boundary_values.dtype)
        if np.iscomplexobj(boundary_values):
            re = self.solve_interior(-(self.Aib @ boundary_values.real))
            im = self.solve_interior(-(self.Aib @ boundary_values.imag))
            u[self.interior] = re + 1j * im
        else:
            u[self.interior] = self.solve_interior(-(self.Aib @ boundary_values))
        u[self.bnd] = boundary_values
        return u

    def energy(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.real(np.conj(v) @ (self.A @ u)))

    def neumann(self, load: np.ndarray) -> np.ndarray:
        """Pure Neumann solve with a consistent load; one dof is pinned and
        the zero-boundary-mean normalization is applied afterwards."""
        n = len(self.mesh.pts)
        A = self.A.tolil(copy=True)
        pin = 0
        A[pin, :] = 0.0
        A[pin, pin] = 1.0
        rhs = load.copy()
        rhs[pin] = 0.0
        u = spla.spsolve(A.tocsc(), rhs)
        u -= u[self.bnd].mean()
        return u


def solve_dirichlet(sigma, trace, mesh: TriangularMesh,
                    op: DiscreteOperator | None = None):
    """Solve div(sigma grad u) = 0 with Dirichlet data given as a
    BoundaryTrace or a callable of the boundary angle."""
    op = op or DiscreteOperator(mesh, sigma)
    th = mesh.boundary_angles()
    if isinstance(trace, BoundaryTrace):
        vals = trace.values(th)
    else:
        vals = np.asarray(trace(th))
    return op.dirichlet(vals), op


# ---------------------------------------------------------------------------
# DtN matrix and friends
# ---------------------------------------------------------------------------


@dataclass
class DtnMatrix:
    """Quadratic form of the DtN operator in the orthonormal trig basis.

    mat[a, b] = energy pairing of the solutions with boundary data
    phi_a, phi_b.  On the unit circle this is also the operator matrix.
    """

    mat: np.ndarray
    N: int
    h: float = float("nan")
    sigma_label: str = ""

    def apply(self, trace: BoundaryTrace) -> BoundaryTrace:
        return BoundaryTrace(self.mat @ trace.coeffs, self.N)

    def pairing(self, psi: BoundaryTrace, phi: BoundaryTrace) -> float:
        return float(np.real(psi.coeffs @ (self.mat @ phi.coeffs)))

    def symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.mat - self.mat.T)
                     / max(np.linalg.norm(self.mat), 1e-300))

    def mode_eigenvalues(self) -> np.ndarray:
        """Diagonal entries grouped as [n=0, n=1(cos), n=1(sin), ...]."""
        return np.diag(self.mat).copy()

    def truncated(self, N: int) -> "DtnMatrix":
        k = basis_size(N)
        return DtnMatrix(self.mat[:k, :k].copy(), N, self.h, self.sigma_label)

    def relative_defect(self, other: "DtnMatrix", N: int | None = None) -> float:
        N = N if N is not None else min(self.N, other.N)
        k = basis_size(N)
        a = self.mat[:k, :k]
        b = other.mat[:k, :k]
        return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def dtn_matrix(sigma, mesh: TriangularMesh, N: int,
               op: DiscreteOperator | None = None,
               label: str = "") -> DtnMatrix:
    """Assemble the DtN quadratic form through the energy bilinear form."""
    nb = len(mesh.boundary)
    if N > nb // 4:
        raise ValueError(f"mode cutoff N={N} too large for boundary ring of "
                         f"size {nb} (need N <= {nb // 4})")
    op = op or DiscreteOperator(mesh, sigma)
    th = mesh.boundary_angles()
    B = trace_basis_matrix(th, N)
    U = np.zeros((basis_size(N), len(mesh.pts)))
    for a in range(basis_size(N)):
        U[a] = op.dirichlet(B[a])
    M = U @ (op.A @ U.T)
    M = 0.5 * (M + M.T)          # symmetrize roundoff
    M[0, :] = 0.0                # constants are in the kernel exactly
    M[:, 0] = 0.0
    return DtnMatrix(M, N, mesh.h, label)


def quadratic_form(lam: DtnMatrix, phi: BoundaryTrace) -> float:
    """Power needed to maintain the boundary voltage phi."""
    return lam.pairing(phi, phi)


def conjugate_solution(sigma, u: np.ndarray, phi: BoundaryTrace,
                       mesh: TriangularMesh,
                       op_hat: DiscreteOperator | None = None) -> np.ndarray:
    """Harmonic conjugate of a forward solution.

    Solves the Neumann problem for the conjugate tensor sigma/det(sigma)
    with boundary flux equal to minus the tangential derivative of the
    primal Dirichlet data (the weak form of grad(conj) = J sigma grad(u)),
    normalized to zero boundary mean.
    """
    from .fields import hat_sigma

    if op_hat is None:
        if hasattr(sigma, "fem_coefficients"):
            sig_hat = hat_sigma(sigma)
        elif np.isscalar(sigma):
            sig_hat = 1.0 / float(sigma)
        else:
            base = _sigma_fn(sigma)

            def sig_hat(x, y):
                a, b, c = base(x, y)
                d = a * c - b * b
                return a / d, b / d, c / d

        op_hat = DiscreteOperator(mesh, sig_hat)

    # boundary load: integral of g v ds with g = -d(phi)/ds, assembled
    # exactly on the trace basis via the tangential-derivative coefficients
    th = mesh.boundary_angles()
    nb = len(mesh.boundary)
    dphi = _tangential_derivative(phi)
    g = dphi.values(th)
    load = np.zeros(len(mesh.pts))
    # trapezoid weights along the boundary ring
    pts = mesh.boundary_points()
    nxt = np.roll(np.arange(nb), -1)
    seg = np.linalg.norm(pts[nxt] - pts, axis=1)
    w = 0.5 * (seg + np.roll(seg, 1))
    load[mesh.boundary] = -g * w
    return op_hat.neumann(load)


def _tangential_derivative(phi: BoundaryTrace) -> BoundaryTrace:
    c = phi.coeffs
    out = np.zeros_like(c)
    for n in range(1, phi.N + 1):
        out[2 * n - 1] = n * c[2 * n]          # d/dt sin -> cos
        out[2 * n] = -n * c[2 * n - 1]         # d/dt cos -> -sin
    return BoundaryTrace(out, phi.N)


def _tangential_antiderivative(phi: BoundaryTrace) -> BoundaryTrace:
    c = phi.coeffs
    out = np.zeros_like(c)
    for n in range(1, phi.N + 1):
        out[2 * n - 1] = -c[2 * n] / n
        out[2 * n] = c[2 * n - 1] / n
    return BoundaryTrace(out, phi.N)


def hilbert_transform(lam: DtnMatrix, phi: BoundaryTrace) -> BoundaryTrace:
    """Boundary Hilbert transform: tangential integration of the DtN output.

    The conjugate trace satisfies d(conj)/ds = Lambda(phi); integrating in
    the trace basis and dropping the free constant (zero-mean convention)
    gives the transform.  For sigma = 1: cos(nt) -> sin(nt), sin -> -cos.
    """
    return _tangential_antiderivative(lam.apply(phi)).zero_mean()


def hilbert_matrix(lam: DtnMatrix) -> np.ndarray:
    """Matrix of the Hilbert transform on the trace basis (mod constants)."""
    k = basis_size(lam.N)
    out = np.zeros((k, k))
    for b in range(k):
        phi = BoundaryTrace(np.eye(k)[b], lam.N)
        out[:, b] = hilbert_transform(lam, phi).coeffs
    return out


@dataclass
class CauchyDataSet:
    """Paired Dirichlet and Neumann trace coefficients."""

    traces: np.ndarray    # (m, 2N+1)
    fluxes: np.ndarray    # (m, 2N+1)
    N: int

    def pairs(self):
        return list(zip(self.traces, self.fluxes))

    def stacked(self) -> np.ndarray:
        return np.hstack([self.traces, self.fluxes])

    def subspace_distance(self, other: "CauchyDataSet") -> float:
        """Largest principal-angle sine between the spanned graph spaces."""
        qa = np.linalg.qr(self.stacked().T)[0]
        qb = np.linalg.qr(other.stacked().T)[0]
        s = np.linalg.svd(qa.T @ qb, compute_uv=False)
        k = min(qa.shape[1], qb.shape[1])
        s = np.clip(s[:k], -1.0, 1.0)
        return float(np.sqrt(max(0.0, 1.0 - s.min() ** 2)))


def cauchy_data(lam: DtnMatrix) -> CauchyDataSet:
    """Cauchy pairs of the Fourier basis; equivalent data to the DtN map."""
    k = basis_size(lam.N)
    return CauchyDataSet(np.eye(k), lam.mat.T.copy(), lam.N)


def composition_matrix(h_angle, N: int, quad: int = 0) -> np.ndarray:
    """Matrix of f -> f o h on the orthonormal trig basis.

    h_angle: callable t -> angle, an orientation-preserving circle map
    (monotone lift).  Monotonicity is verified on the quadrature grid.
    """
    nq = quad or max(1024, 16 * N)
    t = 2.0 * np.pi * np.arange(nq) / nq
    ht = np.asarray(h_angle(t))
    lift = np.unwrap(ht)
    if np.any(np.diff(lift) <= 0):
        raise ValueError("boundary reparametrization is not monotone")
    if abs((lift[-1] - lift[0]) - 2.0 * np.pi * (nq - 1) / nq) > np.pi / 2:
        raise ValueError("boundary reparametrization does not have winding 1")
    B_t = trace_basis_matrix(t, N)
    B_h = trace_basis_matrix(ht, N)
    return B_t @ B_h.T * (2.0 * np.pi / nq)


def transform_dtn(lam: DtnMatrix, h_angle, quad: int = 0) -> DtnMatrix:
    """Reparametrize a DtN form by a boundary homeomorphism.

    h_angle maps the new boundary parameter to the old one; the pairing
    identity  <psi o h, Lambda~ (phi o h)> = <psi, Lambda phi>  makes the
    new form K^T M K with K the composition matrix of h.
    """
    K = composition_matrix(h_angle, lam.N, quad)
    M = K.T @ lam.mat @ K
    M = 0.5 * (M + M.T)
    return DtnMatrix(M, lam.N, lam.h, lam.sigma_label + "|reparam")


def ntd_matrix(lam: DtnMatrix, rcond: float = 1e-10) -> np.ndarray:
    """Pseudo-inverse of the DtN matrix on the zero-mean trace subspace."""
    k = basis_size(lam.N)
    sub = lam.mat[1:, 1:]
    s = np.linalg.svd(sub, compute_uv=False)
    rank = int(np.sum(s > rcond * s[0]))
    if rank < k - 1:
        raise ValueError(f"DtN matrix rank-deficient beyond the constant mode: "
                         f"rank {rank} of {k - 1}")
    out = np.zeros_like(lam.mat)
    out[1:, 1:] = np.linalg.pinv(sub, rcond=rcond)
    return out
