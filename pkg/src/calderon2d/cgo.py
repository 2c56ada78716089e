"""Complex-geometrical-optics solutions and the deformation recovery.

Two exponentially growing probes are computed:

* W(z, k), defined on the whole plane, solving the conjugate-Beltrami
  equation d/dzbar W = mu conj(d/dz W) with W = e^{ikz}(1 + O(1/z)).
  It is computed in the normalized unknown M = W e^{-ikz}; the
  conjugate-linear term then carries the unimodular factor
  exp(-i(kz + conj(kz))).

* G(z, k), defined outside the unit disc, analytic there, with
  G = e^{ikz}(1 + O(1/z)) and boundary coupling
  Im G = H(Re G) + const through a given boundary Hilbert transform.
  G is represented as e^{ikz}(1 + sum_j a_j z^{-j}) and the coupling
  becomes a real-linear least-squares system for the a_j.

The deformation that isotropizes an anisotropic conductivity is
recovered outside the domain from the large-frequency phase
log G(z, k) / (ik), tracked along a frequency schedule with a continuous
branch of the logarithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .beltrami import CauchyBeurling, _mu_on_working_grid, _restrict4
from .dtn import DtnMatrix, basis_size, trace_basis_matrix, transform_dtn
from .grids import GridSpec, ScalarField


@dataclass
class CgoSolution:
    """Whole-plane growing solution in normalized form W = e^{ikz} M."""

    k: complex
    grid: GridSpec
    M: np.ndarray                # normalized part on the grid
    residual: float              # relative equation residual on supp(mu)
    iterations: int
    method: str                  # "fixed-point" or "gmres"
    density_l1: float = 0.0      # integral of |d/dzbar M| over the plane
    support_radius: float = 0.0

    def W(self) -> np.ndarray:
        Z = self.grid.points()
        return np.exp(1j * self.k * Z) * self.M

    def normalization_defect(self, ring_width: int = 2) -> float:
        ring = self.grid.boundary_ring_mask(ring_width)
        return float(np.abs(self.M[ring] - 1.0).max())

    def far_field_tail_bound(self, ring_width: int = 2) -> float:
        """A-posteriori bound on |M - 1| at the grid edge from the solved
        density: |C g| <= ||g||_L1 / (pi * dist(ring, supp))."""
        d = self.grid.L - ring_width * self.grid.h - self.support_radius
        if d <= 0:
            return float("inf")
        return self.density_l1 / (np.pi * d)

    def check_nonvanishing(self):
        a = np.abs(self.M)
        if a.min() <= 0.0:
            i, j = np.unravel_index(np.argmin(a), a.shape)
            z = self.grid.points()[i, j]
            raise ValueError(f"W vanishes at cell ({i}, {j}), z = {z:.4f}")


def solve_cgo(mu, k: complex, grid: GridSpec, tol: float = 1e-10,
              maxit: int = 200, oversample: int = 2) -> CgoSolution:
    """Solve d/dzbar W = mu conj(d/dz W), W = e^{ikz}(1 + O(1/z)).

    mu is a real coefficient (array or region-aware ScalarField) with
    sup|mu| < 1.  The fixed point for g = d/dzbar M,

        g = nu conj(S g + ik (1 + C g)),   nu = mu exp(-i(kz + conj(kz))),

    is contractive only for moderate |k|; on stagnation the same
    real-linear system is solved by LGMRES and accepted on its measured
    residual.
    """
    if isinstance(mu, np.ndarray):
        oversample = 1
    wgrid, muw = _mu_on_working_grid(mu, grid, oversample)
    factor = wgrid.n // grid.n
    muw = muw.real
    kappa = float(np.abs(muw).max())
    if kappa >= 1.0:
        raise ValueError(f"sup|mu| = {kappa:.6f} >= 1")
    plan = CauchyBeurling(wgrid)
    Z = wgrid.points()
    k = complex(k)
    nu = muw * np.exp(-1j * (k * Z + np.conj(k * Z)))
    rhs = nu * np.conj(1j * k)

    def step(g):
        C, S = plan.cauchy_and_beurling(g)
        return nu * np.conj(S + 1j * k * C) + rhs

    nrm = max(float(np.linalg.norm(rhs)), 1e-300)
    g = np.zeros_like(nu, dtype=complex)
    method = "fixed-point"
    iterations = 0
    if kappa > 0 and k != 0:
        prev = None
        diverging = False
        for iterations in range(1, maxit + 1):
            gn = step(g)
            delta = float(np.linalg.norm(gn - g))
            g = gn
            if delta <= tol * nrm:
                break
            if prev is not None and delta > prev and iterations > 4:
                diverging = True
                break
            prev = delta
        else:
            diverging = True
        if diverging:
            method = "gmres"
            g = _solve_cgo_gmres(step, rhs, g, tol)
    resid = float(np.linalg.norm(step(g) - g) / nrm)
    if resid > 100 * tol and method == "gmres":
        raise RuntimeError(
            f"CGO solve did not converge at k={k}: residual {resid:.3e}; "
            f"reduce |k| or the coefficient bound (kappa={kappa:.3f})")
    Mc = 1.0 + plan.cauchy_at_subgrid(g, factor)
    supp = np.abs(Z[np.abs(muw) > 0])
    srad = float(supp.max()) if supp.size else 0.0
    return CgoSolution(k=k, grid=grid, M=Mc, residual=resid,
                       iterations=iterations, method=method,
                       density_l1=float(np.abs(g).sum() * wgrid.h ** 2),
                       support_radius=srad)


def _solve_cgo_gmres(step, rhs, g0, tol):
    """Solve (I - A) g = rhs where step(g) = A g + rhs, as a real system."""
    shape = rhs.shape
    size = rhs.size

    def matvec(v):
        g = (v[:size] + 1j * v[size:]).reshape(shape)
        out = g - (step(g) - rhs)
        return np.concatenate([out.real.ravel(), out.imag.ravel()])

    op = spla.LinearOperator((2 * size, 2 * size), matvec=matvec, dtype=float)
    b = np.concatenate([rhs.real.ravel(), rhs.imag.ravel()])
    x0 = np.concatenate([g0.real.ravel(), g0.imag.ravel()])
    x, info = spla.lgmres(op, b, x0=x0, rtol=tol, atol=0.0, maxiter=400)
    return (x[:size] + 1j * x[size:]).reshape(shape)


# ---------------------------------------------------------------------------
# exterior solution from boundary data
# ---------------------------------------------------------------------------


def _laurent(z, coeffs):
    p = np.zeros_like(z)
    zin = 1.0 / z
    for a in coeffs[::-1]:
        p = (p + a) * zin
    return p


@dataclass
class ExteriorSolution:
    """Growing solution outside the unit disc,

        G(z, k) = exp(ik phase(z)) (1 + sum_j a_j z^{-j}),

    where phase(z) = z + sum_j d_j z^{-j} is a reference phase (plain
    e^{ikz} when the d_j are absent).  Referencing the phase recovered at
    a previous frequency keeps the unknown tail small along a frequency
    schedule, which is what makes large |k| solvable from noisy boundary
    data.
    """

    k: complex
    coeffs: np.ndarray                    # a_1 .. a_J
    defect: float                         # boundary-coupling residual
    condition: float                      # condition estimate
    phase_coeffs: np.ndarray | None = None   # d_1 .. d_m, optional

    def phase(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.phase_coeffs is None or len(self.phase_coeffs) == 0:
            return z
        return z + _laurent(z, self.phase_coeffs)

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.k * self.phase(z)) * self.tail(z)

    def tail(self, z) -> np.ndarray:
        """The 1 + O(1/z) factor without the exponential."""
        z = np.asarray(z, dtype=complex)
        return 1.0 + _laurent(z, self.coeffs)


def solve_G_from_boundary_data(hilbert_mat: np.ndarray, N: int, k: complex,
                               terms: int = 0, tol: float = 1e-8,
                               quad: int = 0,
                               phase_coeffs: np.ndarray | None = None
                               ) -> ExteriorSolution:
    """Exterior growing solution from the boundary Hilbert transform.

    hilbert_mat: matrix of H on the orthonormal trig basis (mod
    constants).  The coupling Im G - H(Re G) = const on |z| = 1 is
    imposed on all trig modes 1..N as a real least-squares system in the
    Laurent coefficients.  phase_coeffs optionally reference the phase
    recovered at a smaller frequency (see ExteriorSolution).
    """
    k = complex(k)
    J = terms or N
    nq = quad or max(512, 16 * N)
    th = 2.0 * np.pi * np.arange(nq) / nq
    bz = np.exp(1j * th)
    B = trace_basis_matrix(th, N)
    w = 2.0 * np.pi / nq

    def coupling_coeffs(bvals):
        """Trig coefficients (modes 1..N) of Im(bvals) - H Re(bvals)."""
        re_c = B @ bvals.real * w
        im_c = B @ bvals.imag * w
        out = im_c - hilbert_mat @ re_c
        return out[1:]                      # drop the free constant mode

    if phase_coeffs is not None and len(phase_coeffs):
        e0 = np.exp(1j * k * (bz + _laurent(bz, phase_coeffs)))
    else:
        e0 = np.exp(1j * k * bz)
    cols = []
    base = coupling_coeffs(e0)
    for j in range(1, J + 1):
        gj = e0 * bz ** (-j)
        # real-linear: separate columns for Re a_j and Im a_j
        cols.append(coupling_coeffs(gj))
        cols.append(coupling_coeffs(1j * gj))
    Aw = np.column_stack(cols)
    bw = base
    # decay prior: the true Laurent coefficients of the tail decay, so a
    # gently growing ridge pins the weakly-constrained high-order terms
    ridge = 1e-9 * np.linalg.norm(bw) * (1.5 ** np.arange(1, J + 1))
    R = np.zeros((2 * J, 2 * J))
    R[np.arange(0, 2 * J, 2), np.arange(0, 2 * J, 2)] = ridge
    R[np.arange(1, 2 * J, 2), np.arange(1, 2 * J, 2)] = ridge
    Afull = np.vstack([Aw, R])
    bfull = np.concatenate([-bw, np.zeros(2 * J)])
    sol, *_ = np.linalg.lstsq(Afull, bfull, rcond=None)
    coeffs = sol[0::2] + 1j * sol[1::2]
    resid = float(np.linalg.norm(Aw @ sol + bw) / max(np.linalg.norm(bw), 1e-300))
    svals = np.linalg.svd(Aw, compute_uv=False)
    cond = float(svals[0] / max(svals[-1], 1e-300))
    return ExteriorSolution(k=k, coeffs=coeffs, defect=resid, condition=cond,
                            phase_coeffs=phase_coeffs)


def glue_interior_extension(G: ExteriorSolution, nu1, nu2, grid: GridSpec,
                            tol: float = 1e-10):
    """Whole-plane field equal to G outside the disc and to the interior
    solution of the nu-equation with matching trace inside.

    Returns (H values on the grid, trace jump sup, interior solution).
    """
    from .beltrami import solve_linear_beltrami

    lb = solve_linear_beltrami(nu1, nu2, lambda th: G.evaluate(np.exp(1j * th)),
                               grid, radius=1.0, tol=tol)
    Z = grid.points()
    outside = np.abs(Z) > 1.0
    H = np.where(outside, G.evaluate(np.where(outside, Z, 2.0)), lb.values)
    # two-sided trace comparison on the circle
    th = 2.0 * np.pi * np.arange(720) / 720
    bz = np.exp(1j * th)
    inner = grid.interp(lb.values, (1.0 - 2.5 * grid.h) * bz)
    outer = G.evaluate((1.0 + 2.5 * grid.h) * bz)
    jump = float(np.abs(inner - outer).max())
    return H, jump, lb


# ---------------------------------------------------------------------------
# phase extraction and deformation recovery
# ---------------------------------------------------------------------------


@dataclass
class PhaseFunction:
    """phi with W = exp(ik phi), branch continuous over the grid."""

    k: complex
    grid: GridSpec
    phi: np.ndarray

    def reconstruction_error(self, W: np.ndarray) -> float:
        return float(np.abs(np.exp(1j * self.k * self.phi) - W).max())


def extract_phase(sol: CgoSolution) -> PhaseFunction:
    """phi = log(W)/(ik) = z + log(M)/(ik) with a continuous branch.

    The branch of log M is fixed by 2-D phase unwrapping anchored at the
    grid corner ring, where M is close to 1.
    """
    from skimage.restoration import unwrap_phase

    sol.check_nonvanishing()
    M = sol.M
    arg = unwrap_phase(np.angle(M))
    ring = sol.grid.boundary_ring_mask(2)
    # anchor: on the far ring the principal argument is the truth
    shift = np.median(np.round((arg[ring] - np.angle(M)[ring]) / (2 * np.pi)))
    arg = arg - 2 * np.pi * shift
    logM = np.log(np.abs(M)) + 1j * arg
    phi = sol.grid.points() + logM / (1j * sol.k)
    return PhaseFunction(k=sol.k, grid=sol.grid, phi=phi)


def _log_G_tracked(G: ExteriorSolution, targets: np.ndarray,
                   r_far: float = 0.0, max_steps: int = 4000) -> np.ndarray:
    """log G at exterior points, branch continued radially from far field.

    The exponential part contributes ikz exactly; only the branch of the
    Laurent tail 1 + O(1/z) is continued, which keeps the tracking free
    of overflow at large |k| |z|.
    """
    targets = np.asarray(targets, dtype=complex)
    flat = targets.ravel()
    k = G.k
    r = r_far or 8.0
    while abs(G.tail(r) - 1.0) > 0.25 and r < 1e6:
        r *= 2.0
    if abs(G.tail(r) - 1.0) > 0.25:
        raise ValueError("far-field anchor not in the principal branch")
    out = np.empty(flat.shape, dtype=complex)
    for idx, z1 in enumerate(flat):
        z = r * z1 / abs(z1)
        logtail = np.log(G.tail(z))
        steps = 0
        while z != z1 and steps < max_steps:
            zn = z1 if abs(z - z1) < 0.2 * abs(z) else z + 0.2 * (z1 - z)
            for _ in range(40):
                ratio = G.tail(zn) / G.tail(z)
                if np.isfinite(ratio) and abs(ratio) > 0 \
                        and abs(np.log(ratio).imag) <= 0.9 * np.pi:
                    break
                zn = z + 0.5 * (zn - z)    # halve toward a safe step
            else:
                raise ValueError(f"branch ambiguity near z={zn:.3f} "
                                 "(possible zero of the solution)")
            logtail = logtail + np.log(ratio)
            z = zn
            steps += 1
        if steps >= max_steps:
            raise ValueError("branch tracking did not reach the target")
        out[idx] = 1j * k * G.phase(z1) + logtail
    return out.reshape(targets.shape)


def solve_G_schedule(hilbert_mat: np.ndarray, N: int, ks, terms: int = 0,
                     quad: int = 0, bootstrap: bool = True,
                     check_radius: float = 1.4) -> dict:
    """Exterior solutions along a frequency schedule.

    With bootstrap=True each solve is attempted both with the plain
    exponential reference and with the phase recovered at the previous
    frequency; the variant whose deformation stays closest to the
    previous one wins.  The referenced variant keeps the unknown Laurent
    tail O(phase gap) instead of e^{|k|}-sized, which is what makes the
    top of the schedule solvable from noisy boundary data; the
    continuation selector rejects it when the previous phase is not yet
    accurate enough to help.
    """
    out = {}
    phase_coeffs = None
    prev_fhat = None
    ring = check_radius * np.exp(2j * np.pi * np.arange(32) / 32)
    for k in sorted(ks, key=abs):
        candidates = [solve_G_from_boundary_data(hilbert_mat, N, k,
                                                 terms=terms, quad=quad)]
        if bootstrap and phase_coeffs is not None:
            candidates.append(solve_G_from_boundary_data(
                hilbert_mat, N, k, terms=terms, quad=quad,
                phase_coeffs=phase_coeffs))
        best, best_dev = None, np.inf
        for Gc in candidates:
            try:
                fhat = _log_G_tracked(Gc, ring) / (1j * complex(k))
            except ValueError:
                continue
            dev = 0.0 if prev_fhat is None \
                else float(np.abs(fhat - prev_fhat).max())
            if dev < best_dev:
                best, best_dev, best_fhat = Gc, dev, fhat
        if best is None:
            raise ValueError(f"no branch-trackable exterior solution at k={k}")
        out[k] = best
        prev_fhat = best_fhat
        phase_coeffs = _phase_expansion(best)
    return out


def _phase_expansion(G: ExteriorSolution, order: int = 12) -> np.ndarray:
    """Laurent coefficients of F_hat(z) - z for the recovered deformation.

    Formal composition log(1 + sum a_j w^j)/(ik) in w = 1/z, truncated at
    `order`, added to the solution's own reference phase.  Purely
    algebraic, so no sampling noise enters the bootstrap chain.
    """
    p = np.zeros(order + 1, dtype=complex)      # coefficients in w
    m = min(order, len(G.coeffs))
    p[1:m + 1] = G.coeffs[:m]
    # log(1+p) = p - p^2/2 + p^3/3 - ...
    out = np.zeros_like(p)
    term = np.array([1.0 + 0.0j])               # p^0
    for j in range(1, order + 1):
        term = np.convolve(term, p)[:order + 1]
        out[:len(term)] += ((-1) ** (j + 1) / j) * term
    d = out / (1j * G.k)
    if G.phase_coeffs is not None and len(G.phase_coeffs):
        mprev = min(len(G.phase_coeffs), order)
        d[1:mprev + 1] += G.phase_coeffs[:mprev]
    return d[1:]


def recover_F_exterior(G_by_k: dict, targets: np.ndarray) -> dict:
    """Deformation samples F_hat(z) = log G(z, k)/(ik) per frequency.

    G_by_k: {k: ExteriorSolution}; the schedule should increase along one
    ray so the branch can be carried from one frequency to the next (each
    frequency is anchored independently in the far field, which the
    normalization G ~ e^{ik phase} makes consistent).
    """
    out = {}
    for k in sorted(G_by_k, key=lambda kk: abs(kk)):
        G = G_by_k[k]
        out[k] = _log_G_tracked(G, targets) / (1j * complex(k))
    return out


def boundary_deformation(G: ExteriorSolution, samples: int = 1024) -> np.ndarray:
    """F_hat on the unit circle from one exterior solution."""
    th = 2.0 * np.pi * np.arange(samples) / samples
    return _log_G_tracked(G, np.exp(1j * th)) / (1j * G.k)


def recover_dtn_isotropic(lam: DtnMatrix, boundary_values: np.ndarray) -> DtnMatrix:
    """Reparametrize the measured DtN form by the recovered boundary map.

    boundary_values: samples of the recovered deformation on equispaced
    angles of the original boundary circle.  The new form lives on the
    image boundary parametrized by its polar angle; it matches the
    directly assembled DtN form of the flattened conductivity on the
    image domain.
    """
    ns = len(boundary_values)
    th = 2.0 * np.pi * np.arange(ns) / ns
    beta = np.unwrap(np.angle(boundary_values))
    if np.any(np.diff(beta) <= 0):
        raise ValueError("recovered boundary map is not monotone")
    beta0 = np.append(beta - beta[0], 2.0 * np.pi)
    th_ext = np.append(th, 2.0 * np.pi)

    def h_angle(t):
        # invert beta: for each image angle t find theta with beta(theta) = t
        tt = np.mod(np.asarray(t) - beta[0], 2.0 * np.pi)
        return np.interp(tt, beta0, th_ext)

    return transform_dtn(lam, h_angle)
