"""Application pipelines: half-plane, exterior domain, partial data.

All three reduce their geometry to the unit disc through closed-form
conformal charts (a Mobius transform for the half-plane, the inversion
z -> 1/z for the exterior with its removable puncture, reflection across
the real axis for the half-disc), where the finite-element forward
machinery applies.  The equivalence-class representative of a flattened
conductivity is rebuilt from the recovered boundary deformation through
an explicit quasiconformal extension of Beurling-Ahlfors type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtn import (BoundaryTrace, DiscreteOperator, DtnMatrix, basis_size,
                  dtn_matrix, trace_basis_matrix)
from .fields import ConductivityTensor, DiffeoMap, _df_matrix
from .grids import GridSpec
from .mesh import TriangularMesh, disc_mesh, half_disc_mesh


# ---------------------------------------------------------------------------
# closed-form conformal charts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalChart:
    """Closed-form conformal map with inverse and derivative."""

    name: str
    fwd: object
    inv: object
    dfwd: object     # complex derivative of fwd

    def roundtrip_defect(self, pts) -> float:
        pts = np.asarray(pts, dtype=complex)
        return float(np.abs(self.inv(self.fwd(pts)) - pts).max())


def mobius_halfplane_to_disc() -> ConformalChart:
    """w = (z + i)/(z - i): lower half-plane onto the unit disc.

    Sends -i to the center, 0 to -1, and infinity to the boundary point 1.
    """
    return ConformalChart(
        name="mobius-halfplane-disc",
        fwd=lambda z: (np.asarray(z, dtype=complex) + 1j) / (np.asarray(z, dtype=complex) - 1j),
        inv=lambda w: 1j * (np.asarray(w, dtype=complex) + 1.0) / (np.asarray(w, dtype=complex) - 1.0),
        dfwd=lambda z: -2j / (np.asarray(z, dtype=complex) - 1j) ** 2)


def inversion_exterior_to_disc() -> ConformalChart:
    """w = 1/z: exterior of the closed unit disc onto the punctured disc."""
    return ConformalChart(
        name="inversion-exterior-disc",
        fwd=lambda z: 1.0 / np.asarray(z, dtype=complex),
        inv=lambda w: 1.0 / np.asarray(w, dtype=complex),
        dfwd=lambda z: -1.0 / np.asarray(z, dtype=complex) ** 2)


def identity_chart() -> ConformalChart:
    return ConformalChart(
        name="identity",
        fwd=lambda z: np.asarray(z, dtype=complex),
        inv=lambda w: np.asarray(w, dtype=complex),
        dfwd=lambda z: np.ones_like(np.asarray(z, dtype=complex)))


def conformal_push(sigma_fn, chart: ConformalChart):
    """Push a tensor-valued coefficient through a conformal chart.

    For conformal maps the push-forward is a pointwise rotation of the
    tensor (the scalar factors cancel), so the ellipticity constant is
    preserved and isotropic coefficients stay isotropic.
    """
    def pushed(x, y):
        w = np.asarray(x) + 1j * np.asarray(y)
        z = chart.inv(w)
        d = chart.dfwd(z)
        # DF of a holomorphic map: rotation by arg(d) times |d|
        fz = d
        fzb = np.zeros_like(d)
        a11, a12, a21, a22 = _df_matrix(fz, fzb)
        J = a11 * a22 - a12 * a21
        s11, s12, s22 = sigma_fn(z.real, z.imag)
        t11 = (a11 * (s11 * a11 + s12 * a12) + a12 * (s12 * a11 + s22 * a12)) / J
        t12 = (a11 * (s11 * a21 + s12 * a22) + a12 * (s12 * a21 + s22 * a22)) / J
        t22 = (a21 * (s11 * a21 + s12 * a22) + a22 * (s12 * a21 + s22 * a22)) / J
        return t11, t12, t22
    return pushed


# ---------------------------------------------------------------------------
# half-plane pipeline
# ---------------------------------------------------------------------------


def halfplane_to_disc_dtn(pairing, N: int, mesh_h: float = 0.02,
                          line_cut: float = 200.0, line_n: int = 200001) -> DtnMatrix:
    """Disc DtN form from a half-plane boundary pairing oracle.

    pairing(f_vals, g_vals, x) -> float gives the energy pairing
    integral of g . Lambda f over the boundary line for sampled data;
    the basis used is the disc trace basis pulled back through the
    Mobius chart, with the value at the chart's boundary image of
    infinity subtracted so the data decay along the line.  The constant
    mode is completed by Lambda(1) = 0.
    """
    chart = mobius_halfplane_to_disc()
    x = np.linspace(-line_cut, line_cut, line_n)
    w = chart.fwd(x)                      # on the unit circle
    th_line = np.angle(w)
    B = trace_basis_matrix(np.mod(th_line, 2 * np.pi), N)
    # value of each basis function at the image of infinity (w = 1)
    B_inf = trace_basis_matrix(np.zeros(1), N)[:, 0]
    k = basis_size(N)
    M = np.zeros((k, k))
    pulled = [B[a] - B_inf[a] for a in range(k)]
    for a in range(1, k):
        for b in range(a, k):
            M[a, b] = M[b, a] = pairing(pulled[b], pulled[a], x)
    return DtnMatrix(M, N, mesh_h, "halfplane-transported")


def halfplane_identity_pairing(f_vals, g_vals, x):
    """Energy pairing of the half-plane DtN for sigma = 1: the operator is
    |D| on the boundary line, evaluated spectrally on the sample grid."""
    n = len(x)
    dx = x[1] - x[0]
    xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
    fhat = np.fft.rfft(f_vals)
    ghat = np.fft.rfft(g_vals)
    spec = np.abs(xi) * fhat * np.conj(ghat)
    # rfft Parseval with the one-sided spectrum
    wgt = np.full_like(xi, 2.0)
    wgt[0] = 1.0
    if n % 2 == 0:
        wgt[-1] = 1.0
    return float(np.real(np.sum(wgt * spec)) * dx / n)


def halfplane_pipeline_dtn(sigma_fn_halfplane, N: int, mesh_h: float = 0.02,
                           label: str = "halfplane") -> DtnMatrix:
    """Forward route: push the half-plane coefficient to the disc through
    the Mobius chart and assemble the disc DtN form directly."""
    mesh = disc_mesh(mesh_h)
    pushed = conformal_push(sigma_fn_halfplane, mobius_halfplane_to_disc())
    return dtn_matrix(pushed, mesh, N, label=label)


# ---------------------------------------------------------------------------
# exterior pipeline
# ---------------------------------------------------------------------------


def exterior_to_disc_solve(sigma_fn_ext, trace: BoundaryTrace,
                           mesh_h: float = 0.02):
    """Solve the exterior problem by inversion to the punctured disc.

    The puncture at the origin has zero capacitance, so the solve on the
    full disc (the puncture is an ordinary mesh vertex) restricts to the
    bounded exterior solution.  Returns (values at mesh vertices of the
    disc, evaluator u(z) for exterior points, mesh).
    """
    chart = inversion_exterior_to_disc()
    mesh = disc_mesh(mesh_h)
    pushed = conformal_push(sigma_fn_ext, chart)
    # sigma must be the identity near infinity; the pushed coefficient then
    # extends smoothly by 1 across the puncture
    op = DiscreteOperator(mesh, pushed)
    th = mesh.boundary_angles()
    # the chart maps the exterior boundary angle t to disc angle -t
    vals = trace.values(np.mod(-th, 2.0 * np.pi))
    u = op.dirichlet(vals)

    def evaluator(z):
        w = chart.fwd(np.asarray(z, dtype=complex))
        return _p1_interp(mesh, u, w)

    return u, evaluator, mesh, op


def exterior_dtn(sigma_fn_ext, N: int, mesh_h: float = 0.02) -> DtnMatrix:
    """Exterior DtN form, via the disc solve and angle reflection."""
    mesh = disc_mesh(mesh_h)
    pushed = conformal_push(sigma_fn_ext, inversion_exterior_to_disc())
    lam = dtn_matrix(pushed, mesh, N, label="exterior-pushed")
    # the inversion maps boundary angle t to -t (orientation reversing on
    # the circle); in the trig basis that is the parity conjugation
    # cos -> cos, sin -> -sin, which preserves the energy pairing
    par = np.ones(basis_size(N))
    par[2::2] = -1.0
    M = lam.mat * np.outer(par, par)
    return DtnMatrix(M, N, lam.h, "exterior")


def _p1_interp(mesh: TriangularMesh, u: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate a P1 field at complex points by barycentric interpolation."""
    from scipy.spatial import cKDTree

    pts = np.asarray(pts, dtype=complex)
    flat = np.column_stack([pts.real.ravel(), pts.imag.ravel()])
    centers = mesh.pts[mesh.tris].mean(axis=1)
    tree = cKDTree(centers)
    _, cand = tree.query(flat, k=6)
    out = np.zeros(len(flat), dtype=u.dtype)
    done = np.zeros(len(flat), dtype=bool)
    p = mesh.pts
    for col in range(cand.shape[1]):
        t = cand[:, col]
        tri = mesh.tris[t]
        a, b, c = p[tri[:, 0]], p[tri[:, 1]], p[tri[:, 2]]
        det = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
               - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
        l2 = ((flat[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
              - (c[:, 0] - a[:, 0]) * (flat[:, 1] - a[:, 1])) / det
        l3 = ((b[:, 0] - a[:, 0]) * (flat[:, 1] - a[:, 1])
              - (flat[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])) / det
        l1 = 1.0 - l2 - l3
        ok = (~done) & (l1 >= -1e-9) & (l2 >= -1e-9) & (l3 >= -1e-9)
        out[ok] = (l1[ok] * u[tri[ok, 0]] + l2[ok] * u[tri[ok, 1]]
                   + l3[ok] * u[tri[ok, 2]])
        done |= ok
    if not done.all():
        # fall back to nearest vertex for points marginally outside
        vt = cKDTree(mesh.pts)
        _, near = vt.query(flat[~done])
        out[~done] = u[near]
    return out.reshape(pts.shape)


# ---------------------------------------------------------------------------
# reflection and partial data
# ---------------------------------------------------------------------------


@dataclass
class ReflectedConductivity:
    """Tensor on the full disc built from data on the upper half-disc.

    The lower half carries the push-forward by the reflection
    eta(x1, x2) = (x1, -x2): diagonal entries are preserved and the
    off-diagonal entry flips sign.
    """

    sigma_fn: object            # coefficients on the upper half-disc

    def fem_coefficients(self):
        base = self.sigma_fn

        def fn(x, y):
            yy = np.abs(y)
            s11, s12, s22 = base(x, yy)
            sign = np.where(y >= 0, 1.0, -1.0)
            return s11, s12 * sign, s22
        return fn

    def __call__(self, x, y):
        return self.fem_coefficients()(x, y)


def reflect_conductivity(sigma_fn_upper) -> ReflectedConductivity:
    return ReflectedConductivity(sigma_fn_upper)


def _arc_dirichlet_basis(NG: int):
    """H^{1/2}_0 basis on the upper arc: sin(m theta), vanishing at the
    arc endpoints theta = 0, pi."""
    return [(lambda th, m=m: np.sin(m * th)) for m in range(1, NG + 1)]


def _arc_flux_basis(NG: int):
    """Zero-mean flux basis on the arc: cos(m theta)."""
    return [(lambda th, m=m: np.cos(m * th)) for m in range(1, NG + 1)]


def partial_data_operators(sigma_fn_upper, mesh_h: float = 0.02, NG: int = 8):
    """Dirichlet-to-Neumann and Neumann-to-Dirichlet maps on the curved
    arc of the upper half-disc, as sampled-column callables.

    Returns (lam_gamma, sig_gamma, mesh) where lam_gamma[m] is the arc
    flux response to arc Dirichlet data sin((m+1) theta) with zero
    Dirichlet data on the flat segment, and sig_gamma[m] is the arc trace
    response to arc flux cos((m+1) theta) with zero flux on the flat
    segment, normalized to zero boundary mean.
    """
    mesh = half_disc_mesh(mesh_h)
    op = DiscreteOperator(mesh, sigma_fn_upper)
    nb_arc = 3 * int(round(1.0 / mesh.h)) + 1
    arc = mesh.boundary[:nb_arc]
    arc_theta = np.arctan2(mesh.pts[arc, 1], mesh.pts[arc, 0])

    lam_cols = []
    for fn in _arc_dirichlet_basis(NG):
        bvals = np.zeros(len(mesh.boundary))
        bvals[:nb_arc] = fn(arc_theta)
        u = op.dirichlet(bvals)
        # weak flux on the whole boundary: residual of the energy form
        flux = op.A @ u
        lam_cols.append((u, flux))

    sig_cols = []
    pts_arc = mesh.pts[arc]
    seg = np.linalg.norm(np.diff(pts_arc, axis=0), axis=1)
    w_arc = np.zeros(nb_arc)
    w_arc[:-1] += 0.5 * seg
    w_arc[1:] += 0.5 * seg
    for fn in _arc_flux_basis(NG):
        load = np.zeros(len(mesh.pts))
        load[arc] = fn(arc_theta) * w_arc
        v = op.neumann(load)
        sig_cols.append(v)
    return lam_cols, sig_cols, mesh, arc, arc_theta


def cauchy_data_from_partial(sigma_fn_upper, N: int, mesh_h: float = 0.02,
                             NG: int = 0):
    """Cauchy pairs of the reflected conductivity on the full disc,
    reconstructed from arc-only measurements on the half-disc.

    Odd pairs (traces odd under the reflection) come from the
    Dirichlet-to-Neumann columns with zero Dirichlet data on the flat
    segment; even pairs come from the Neumann-to-Dirichlet columns with
    zero flux there.  Traces and fluxes are reflected to the whole circle.
    """
    from .dtn import CauchyDataSet

    NG = NG or N
    lam_cols, sig_cols, mesh, arc, arc_theta = partial_data_operators(
        sigma_fn_upper, mesh_h, NG)
    nb_arc = len(arc)
    k = basis_size(N)

    nq = 2048
    th_full = 2.0 * np.pi * np.arange(nq) / nq
    B_full = trace_basis_matrix(th_full, N)
    wq = 2.0 * np.pi / nq
    upper = th_full <= np.pi

    pts_arc = mesh.pts[arc]
    seg = np.linalg.norm(np.diff(pts_arc, axis=0), axis=1)
    w_arc = np.zeros(nb_arc)
    w_arc[:-1] += 0.5 * seg
    w_arc[1:] += 0.5 * seg

    traces, fluxes = [], []
    # odd branch: trace sin(m theta) extends oddly; the measured flux on
    # the arc extends oddly as well (eta-antisymmetric solutions)
    for m, (u, flux) in enumerate(lam_cols, start=1):
        tr = np.zeros(k)
        tr[2 * m] = np.sqrt(np.pi) if m <= N else 0.0
        # flux density on the arc from the weak residual: divide by weights
        dens = flux[arc] / np.maximum(w_arc, 1e-300)
        # project the odd extension onto the trig basis
        vals = np.zeros(nq)
        vals[upper] = np.interp(th_full[upper], arc_theta, dens)
        vals[~upper] = -np.interp(2.0 * np.pi - th_full[~upper], arc_theta, dens)
        fl = B_full @ vals * wq
        traces.append(tr)
        fluxes.append(fl)
    # even branch: flux cos(m theta) extends evenly; the measured trace
    # extends evenly (eta-symmetric solutions)
    for m, v in enumerate(sig_cols, start=1):
        fl = np.zeros(k)
        fl[2 * m - 1] = np.sqrt(np.pi) if m <= N else 0.0
        tr_arc = v[arc]
        vals = np.zeros(nq)
        vals[upper] = np.interp(th_full[upper], arc_theta, tr_arc)
        vals[~upper] = np.interp(2.0 * np.pi - th_full[~upper], arc_theta, tr_arc)
        tr = B_full @ vals * wq
        traces.append(tr)
        fluxes.append(fl)
    # the constant pair
    tr0 = np.zeros(k)
    tr0[0] = np.sqrt(2.0 * np.pi)
    traces.append(tr0)
    fluxes.append(np.zeros(k))
    return CauchyDataSet(np.array(traces), np.array(fluxes), N)


# ---------------------------------------------------------------------------
# Beurling-Ahlfors extension and the class representative
# ---------------------------------------------------------------------------


@dataclass
class CircleHomeomorphism:
    """Sampled monotone angle map of the circle with winding one."""

    theta: np.ndarray        # sample angles in [0, 2 pi)
    values: np.ndarray       # g(theta), monotone lift

    def __post_init__(self):
        lift = np.unwrap(self.values)
        if np.any(np.diff(lift) <= 0):
            raise ValueError("circle map is not strictly increasing")
        total = lift[-1] - lift[0] + (lift[1] - lift[0])
        if abs(total - 2.0 * np.pi) > np.pi / 2:
            raise ValueError("circle map does not have winding number 1")
        self.values = lift

    def displacement(self):
        """Periodic part g(theta) - theta."""
        return self.values - self.theta

    def lift_at(self, x):
        """Evaluate the lift at arbitrary real arguments."""
        d = np.interp(np.mod(x, 2.0 * np.pi), self.theta,
                      self.displacement(), period=2.0 * np.pi)
        return np.asarray(x) + d

    def quasisymmetry_modulus(self, levels: int = 6) -> float:
        """max over dyadic triples of |g(x+t)-g(x)| / |g(x)-g(x-t)|."""
        worst = 1.0
        for lev in range(1, levels + 1):
            t = np.pi / 2 ** lev
            x = self.theta
            a = self.lift_at(x + t) - self.lift_at(x)
            b = self.lift_at(x) - self.lift_at(x - t)
            r = np.maximum(a / b, b / a)
            worst = max(worst, float(r.max()))
        return worst

    @classmethod
    def identity(cls, samples: int = 2048):
        th = 2.0 * np.pi * np.arange(samples) / samples
        return cls(th, th.copy())

    @classmethod
    def from_function(cls, fn, samples: int = 2048):
        th = 2.0 * np.pi * np.arange(samples) / samples
        return cls(th, np.asarray(fn(th)))


QS_WARN_THRESHOLD = 50.0


def beurling_ahlfors_extension(g: CircleHomeomorphism, grid_n: int = 256,
                               ngauss: int = 64,
                               symmetrize: bool = False) -> DiffeoMap:
    """Quasiconformal extension of a circle homeomorphism to the disc.

    The lift psi of g is extended to the upper half-plane by the
    averaging formula

        u(x, y) = 1/2 integral_0^1 [psi(x + t y') + psi(x - t y')] dt,
        v(x, y) = 1/2 integral_0^1 [psi(x + t y') - psi(x - t y')] dt,

    with y' = 2 y so that the identity maps to the identity, and carried
    to the punctured disc through z = e^{i(x + i y)}; the origin is a
    removable point.  With symmetrize=True the extension is averaged with
    its conjugate under the reflection eta, which preserves boundary
    values of reflection-symmetric maps.
    """
    import warnings

    qs = g.quasisymmetry_modulus()
    if qs > QS_WARN_THRESHOLD:
        warnings.warn(f"circle map has large quasisymmetry modulus {qs:.1f}; "
                      "the extension's distortion may blow up", stacklevel=2)
    grid = GridSpec(1.0, grid_n)
    Z = grid.points()
    F = _ba_values(g, Z)
    if symmetrize:
        # conjugate map theta -> -g(-theta); same boundary values after
        # reflecting back, so the average keeps the trace exact
        m_vals = np.mod(-g.lift_at(-g.theta), 2.0 * np.pi)
        g_conj = CircleHomeomorphism(g.theta, m_vals)
        Fc = np.conj(_ba_values(g_conj, np.conj(Z)))
        F = 0.5 * (F + Fc)
    # Wirtinger derivatives by centered differences inside the disc
    h = grid.h
    fz = np.zeros_like(F)
    fzb = np.zeros_like(F)
    Fx = (np.roll(F, -1, 0) - np.roll(F, 1, 0)) / (2 * h)
    Fy = (np.roll(F, -1, 1) - np.roll(F, 1, 1)) / (2 * h)
    fz[:] = 0.5 * (Fx - 1j * Fy)
    fzb[:] = 0.5 * (Fx + 1j * Fy)
    edge = grid.boundary_ring_mask(1) | (np.abs(Z) > 1.0 - 2 * h)
    fz[edge] = 1.0
    fzb[edge] = 0.0
    dmap = DiffeoMap(grid, F, fz, fzb)
    inside = np.abs(Z) < 1.0 - 3 * h
    J = dmap.jacobian()
    if np.any(J[inside] <= 0):
        raise ValueError("Beurling-Ahlfors extension is not orientation "
                         "preserving on the sampled grid")
    return dmap


def _ba_values(g: CircleHomeomorphism, Z: np.ndarray) -> np.ndarray:
    from numpy.polynomial.legendre import leggauss

    Z = np.asarray(Z, dtype=complex)
    out = Z.astype(complex).copy()
    inside = np.abs(Z) <= 1.0
    z = Z[inside]
    r = np.clip(np.abs(z), 1e-14, 1.0)
    x = np.angle(z)
    y2 = -2.0 * np.log(r)
    tg, wg = leggauss(64)
    tg = 0.5 * (tg + 1.0)
    wg = 0.5 * wg
    u = np.zeros_like(x)
    v = np.zeros_like(x)
    for t, w in zip(tg, wg):
        pp = g.lift_at(x + t * y2)
        pm = g.lift_at(x - t * y2)
        u += w * 0.5 * (pp + pm)
        v += w * 0.5 * (pp - pm)
    out[inside] = np.exp(1j * u - v)
    return out


def build_representative(sigma_tilde_eval, boundary_values: np.ndarray,
                         grid_n: int = 256):
    """Member of the equivalence class from the flattened conductivity and
    the recovered boundary deformation.

    boundary_values: samples of the deformation on equispaced angles of
    the unit circle (the image is a star-shaped Jordan curve).  The
    deformation is split into its angular part, extended by
    Beurling-Ahlfors, and its radial part, extended as the exponential of
    the harmonic extension of log|F|; the product E maps the disc onto
    the image domain with the prescribed boundary values.  The
    representative is the pull-back of the flattened conductivity
    through E, accepted only when the sampled Jacobian stays positive.
    """
    ns = len(boundary_values)
    th = 2.0 * np.pi * np.arange(ns) / ns
    beta = np.unwrap(np.angle(boundary_values))
    rho = np.abs(boundary_values)
    g = CircleHomeomorphism(th, beta)
    ext = beurling_ahlfors_extension(g, grid_n=grid_n)
    grid = ext.grid
    Z = grid.points()

    # harmonic extension of log rho by the Poisson integral (Fourier form)
    coef = np.fft.fft(np.log(rho)) / ns
    r = np.clip(np.abs(Z), 0.0, 1.0)
    ang = np.angle(Z)
    nmax = min(ns // 2 - 1, 128)
    logp = np.full(Z.shape, coef[0].real)
    for n in range(1, nmax + 1):
        rn = r ** n
        logp += 2.0 * rn * (coef[n].real * np.cos(n * ang)
                            - coef[n].imag * np.sin(n * ang))
    P = np.exp(logp)
    E = ext.F * P

    h = grid.h
    Ex = (np.roll(E, -1, 0) - np.roll(E, 1, 0)) / (2 * h)
    Ey = (np.roll(E, -1, 1) - np.roll(E, 1, 1)) / (2 * h)
    inside = np.abs(Z) < 1.0 - 3 * h
    a11, a12 = Ex.real, Ey.real
    a21, a22 = Ex.imag, Ey.imag
    J = a11 * a22 - a12 * a21
    if np.any(J[inside] <= 0):
        raise ValueError("extension of the recovered deformation is not a "
                         "homeomorphism (Jacobian changes sign)")

    st = np.ones_like(J)
    st[inside] = np.asarray(sigma_tilde_eval(E[inside]))
    # pull-back: sigma_rep = DE^{-1} sigma~ DE^{-T} * J, evaluated at x
    i11 = a22
    i12 = -a12
    i21 = -a21
    i22 = a11
    t11 = (i11 ** 2 + i12 ** 2) * st / np.where(J > 0, J, 1.0)
    t12 = (i11 * i21 + i12 * i22) * st / np.where(J > 0, J, 1.0)
    t22 = (i21 ** 2 + i22 ** 2) * st / np.where(J > 0, J, 1.0)
    t11[~inside] = 1.0
    t22[~inside] = 1.0
    t12[~inside] = 0.0

    def fem_fn(x, y):
        z = np.asarray(x) + 1j * np.asarray(y)
        return (grid.interp(t11, z), grid.interp(t12, z), grid.interp(t22, z))

    return fem_fn, E, J
