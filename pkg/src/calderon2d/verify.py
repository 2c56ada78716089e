"""The invariant suite behind the `verify` command.

Each member exercises one module-level invariant at sizes taken from the
run configuration (smaller by default than the acceptance suite, which
lives in the test tree and pins the published tolerances).  Members
return (value, bound) pairs; a member passes when value <= bound.
"""

from __future__ import annotations

import numpy as np

from . import beltrami as bl
from . import cgo as cg
from . import dtn as dt
from . import domains as dm
from . import fields as fd
from .grids import DiscRegion, GridSpec
from .mesh import disc_mesh


def random_spd_entries(rng, nsamples: int, c0_max: float = 10.0):
    lam1 = rng.uniform(1.0 / c0_max + 0.02, c0_max - 0.5, nsamples)
    lam2 = rng.uniform(1.0 / c0_max + 0.02, c0_max - 0.5, nsamples)
    ang = rng.uniform(0.0, np.pi, nsamples)
    c, s = np.cos(ang), np.sin(ang)
    s11 = c * c * lam1 + s * s * lam2
    s22 = s * s * lam1 + c * c * lam2
    s12 = c * s * (lam1 - lam2)
    return s11, s12, s22


def tensor_from_entries(grid, s11, s12, s22):
    n = grid.n
    reps = int(np.ceil(n * n / len(s11)))
    a = np.resize(np.repeat(s11, reps)[:n * n], (n, n))
    b = np.resize(np.repeat(s12, reps)[:n * n], (n, n))
    c = np.resize(np.repeat(s22, reps)[:n * n], (n, n))
    return fd.ConductivityTensor.from_fields(grid, a, b, c)


# --- individual invariants, each returning (value, bound) -----------------


def inv_coefficient_chain(cfg, rng):
    s11, s12, s22 = random_spd_entries(rng, 4096)
    grid = GridSpec(2.0, 64)
    sig = tensor_from_entries(grid, s11, s12, s22)
    n1a, n2a = fd.sigma_to_nu(sig)
    n1b, n2b = fd.nu_from_mu(fd.mu1_from_sigma(sig), fd.mu2_from_sigma(sig))
    return float(np.max(np.abs(n1a - n1b) + np.abs(n2a - n2b))), 1e-12


def inv_roundtrips(cfg, rng):
    s11, s12, s22 = random_spd_entries(rng, 4096)
    grid = GridSpec(2.0, 64)
    sig = tensor_from_entries(grid, s11, s12, s22)
    n1, n2 = fd.sigma_to_nu(sig)
    back = fd.nu_to_sigma(n1, n2, grid)
    err_sigma = max(np.abs(back.s11 - sig.s11).max(),
                    np.abs(back.s12 - sig.s12).max(),
                    np.abs(back.s22 - sig.s22).max())
    mu1 = fd.mu1_from_sigma(sig)
    mu2 = fd.mu2_from_sigma(sig)
    m1, m2 = fd.mu_from_nu(*fd.nu_from_mu(mu1, mu2))
    err_mu = np.abs(m1 - mu1).max() + np.abs(m2 - mu2).max()
    return float(max(err_sigma, err_mu)), 1e-10


def inv_modulus_identity(cfg, rng):
    s11, s12, s22 = random_spd_entries(rng, 4096)
    grid = GridSpec(2.0, 64)
    sig = tensor_from_entries(grid, s11, s12, s22)
    mu1 = fd.mu1_from_sigma(sig)
    mu2 = fd.mu2_from_sigma(sig)
    nu1, nu2 = fd.nu_from_mu(mu1, mu2)
    lhs = np.abs(nu1) + np.abs(nu2)
    rhs = (np.abs(mu1) + np.abs(mu2)) / (1.0 + np.abs(mu1) * np.abs(mu2))
    return float(np.abs(lhs - rhs).max()), 1e-12


def inv_mu1_bound(cfg, rng):
    s11, s12, s22 = random_spd_entries(rng, 4096)
    grid = GridSpec(2.0, 64)
    sig = tensor_from_entries(grid, s11, s12, s22)
    c0 = fd.ellipticity_constant(sig)
    slack = np.abs(fd.mu1_from_sigma(sig)).max() - (c0 - 1.0) / (c0 + 1.0)
    return float(slack), 1e-12


def inv_pushforward_det(cfg, rng):
    grid = GridSpec(2.0, cfg.get_int("grid.n"))
    sig = fd.ConductivityTensor.constant(grid, 3.0, 0.5, 1.5, DiscRegion(0, 1.0))
    F = fd.AnalyticDiffeo.radial_shear(0.4).sample(grid)
    pushed = fd.pushforward(sig, F)
    X = F.invert(grid.points())
    a, b, c = sig.entries_at(X)
    det_src = a * c - b * b
    det_push = pushed.det()
    return float(np.abs(det_push - det_src).max()), 1e-10


def inv_beurling_derivative(cfg, rng):
    grid = GridSpec(2.0, cfg.get_int("grid.n"))
    Z = grid.points()
    phi = np.exp(-4.0 * np.abs(Z) ** 2)
    dbar = -4.0 * Z * phi
    dz = -4.0 * np.conj(Z) * phi
    got = bl.beurling_apply(dbar, grid)
    return float(np.abs(got - dz).max() / np.abs(dz).max()), 5e-4


def inv_beurling_isometry(cfg, rng):
    grid = GridSpec(2.0, cfg.get_int("grid.n"))
    n = grid.n
    kmax = n // 8
    spec = np.zeros((n, n), dtype=complex)
    block = rng.standard_normal((2 * kmax, 2 * kmax)) \
        + 1j * rng.standard_normal((2 * kmax, 2 * kmax))
    spec[:kmax, :kmax] = block[:kmax, :kmax]
    spec[-kmax:, :kmax] = block[kmax:, :kmax]
    spec[:kmax, -kmax:] = block[:kmax, kmax:]
    spec[-kmax:, -kmax:] = block[kmax:, kmax:]
    h = np.fft.ifft2(spec)
    # window to a decaying field so the free-space quadrature applies
    Z = grid.points()
    h = h * np.exp(-2.0 * np.abs(Z) ** 2)
    Sh = bl.beurling_apply(h, grid)
    ratio = np.linalg.norm(Sh) / np.linalg.norm(h)
    return float(abs(ratio - 1.0)), 5e-3


def inv_cauchy_dbar(cfg, rng):
    grid = GridSpec(2.0, cfg.get_int("grid.n"))
    Z = grid.points()
    h = np.exp(-4.0 * np.abs(Z) ** 2) * (1.0 + 0.3j * Z)
    Ch = bl.cauchy_apply(h, grid, warn_margin=False)
    # spectral d/dzbar on the periodic box (field decays at the edge)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    zeta = KX + 1j * KY
    dbar = np.fft.ifft2(np.fft.fft2(Ch) * (0.5j * zeta))
    return float(np.abs(dbar - h).max() / np.abs(h).max()), 2e-3


def inv_constant_mu(cfg, rng):
    grid = GridSpec(2.0, cfg.get_int("grid.n"))
    c = 0.3
    sol = bl.solve_principal(_disc_mu(grid, c), grid)
    Z = grid.points()
    exact = np.where(np.abs(Z) <= 1.0, Z + c * np.conj(Z), Z + c / Z)
    return float(np.abs(sol.map.F - exact).max()), 40.0 * c * grid.h ** 0.9


def _disc_mu(grid, c):
    from .grids import ScalarField, deposit_indicator

    region = DiscRegion(0.0, 1.0)
    vals = c * deposit_indicator(grid, region, order=2)

    def ev(z):
        return c * region.inside(np.asarray(z)).astype(float)

    return ScalarField(grid, vals, region=region, evaluator=ev)


def inv_contraction(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    c = 0.5
    sol = bl.solve_principal(_disc_mu(grid, c), grid, oversample=1)
    return float(sol.contraction_estimate), c + 0.05


def inv_distortion(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    c = 0.5
    sol = bl.solve_principal(_disc_mu(grid, c), grid, oversample=1)
    sol.map.check_orientation()
    K = fd.distortion(sol.map)
    return float(K.max()), (1 + c) / (1 - c) + 0.05


def inv_normalization_decay(cfg, rng):
    c = 0.4
    vals = []
    for L in (2.0, 4.0):
        grid = GridSpec(L, cfg.get_int("grid.n"))
        sol = bl.solve_principal(_disc_mu(grid, c), grid, oversample=1)
        ring = grid.boundary_ring_mask(2)
        vals.append(float(np.abs(sol.map.F - grid.points())[ring].mean()))
    return vals[1] / vals[0], 0.75


def inv_dtn_spectrum(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    worst = 0.0
    for c in (1.0, 2.5):
        lam = dt.dtn_matrix(c, mesh, 8)
        diag = lam.mode_eigenvalues()
        for n in range(1, 9):
            for idx in (2 * n - 1, 2 * n):
                worst = max(worst, abs(diag[idx] - c * n) / (c * n))
    return float(worst), 0.01


def inv_dtn_symmetry(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    grid = GridSpec(2.0, 64)
    sig = fd.ConductivityTensor.constant(grid, 2.0, 0.7, 1.2, DiscRegion(0, 1.0))
    lam = dt.dtn_matrix(sig, mesh, 8)
    return lam.symmetry_defect(), 1e-8


def inv_energy_consistency(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    op = dt.DiscreteOperator(mesh, 1.7)
    lam = dt.dtn_matrix(1.7, mesh, 6, op=op)
    phi = dt.BoundaryTrace.cos(3, 6)
    u = op.dirichlet(phi.values(mesh.boundary_angles()))
    q1 = dt.quadratic_form(lam, phi)
    q2 = op.energy(u, u)
    return abs(q1 - q2) / abs(q2), 1e-10


def inv_hilbert_identity_case(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    lam = dt.dtn_matrix(1.0, mesh, 8)
    worst = 0.0
    for n in range(1, 9):
        out = dt.hilbert_transform(lam, dt.BoundaryTrace.cos(n, 8))
        tgt = dt.BoundaryTrace.sin(n, 8)
        worst = max(worst, float(np.abs(out.coeffs - tgt.coeffs).max()
                                 / np.sqrt(np.pi)))
    return worst, 5e-3


def inv_hilbert_involution(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    grid = GridSpec(2.0, 64)
    sig = fd.ConductivityTensor.constant(grid, 4.0, 0.0, 1.0, DiscRegion(0, 1.0))
    lam = dt.dtn_matrix(sig, mesh, 6)
    lam_hat = dt.dtn_matrix(fd.hat_sigma(sig), mesh, 6)
    H = dt.hilbert_matrix(lam)
    Hh = dt.hilbert_matrix(lam_hat)
    comp = Hh @ H
    k = dt.basis_size(6)
    tgt = -np.eye(k)
    tgt[0, 0] = 0.0
    defect = np.abs(comp - tgt)[1:, 1:].max()
    return float(defect), 0.02


def inv_diffeo_invariance(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    grid = GridSpec(2.0, 64)
    sig = fd.ConductivityTensor.constant(grid, 4.0, 0.0, 1.0, DiscRegion(0, 1.0))
    lam = dt.dtn_matrix(sig.fem_coefficients(), mesh, 8)
    F = fd.AnalyticDiffeo.radial_shear(0.5)
    pushed = _pushed_fn(sig.fem_coefficients(), F)
    lam2 = dt.dtn_matrix(pushed, mesh, 8)
    return lam2.relative_defect(lam), 0.02


def _pushed_fn(sigma_fn, amap):
    def fn(x, y):
        w = np.asarray(x) + 1j * np.asarray(y)
        z = amap.inverse(w)
        fz, fzb = amap.fz(z), amap.fzb(z)
        a11, a12, a21, a22 = fd._df_matrix(fz, fzb)
        J = a11 * a22 - a12 * a21
        s11, s12, s22 = sigma_fn(z.real, z.imag)
        t11 = (a11 * (s11 * a11 + s12 * a12) + a12 * (s12 * a11 + s22 * a12)) / J
        t12 = (a11 * (s11 * a21 + s12 * a22) + a12 * (s12 * a21 + s22 * a22)) / J
        t22 = (a21 * (s11 * a21 + s12 * a22) + a22 * (s12 * a21 + s22 * a22)) / J
        return t11, t12, t22
    return fn


def inv_cgo_exponential(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    sol = cg.solve_cgo(np.zeros((grid.n, grid.n)), 1.5 + 0.5j, grid)
    return float(np.abs(sol.W() - np.exp(1j * (1.5 + 0.5j) * grid.points())).max()), 1e-12


def inv_cgo_k_zero(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    sol = cg.solve_cgo(_disc_mu(grid, 0.2).values.real, 0.0, grid)
    return float(np.abs(sol.W() - 1.0).max()), 1e-12


def inv_cgo_residual(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    sol = cg.solve_cgo(_disc_mu(grid, 0.2), 1.0, grid)
    return sol.residual, 1e-8


def inv_g_identity(cfg, rng):
    mesh = disc_mesh(max(0.05, cfg.get_float("mesh.h")))
    lam = dt.dtn_matrix(1.0, mesh, 12)
    H = dt.hilbert_matrix(lam)
    G = cg.solve_G_from_boundary_data(H, 12, 1.0)
    return float(np.abs(G.coeffs).max()), 1e-3


def inv_phase_consistency(cfg, rng):
    grid = GridSpec(2.0, max(128, cfg.get_int("grid.n") // 2))
    sol = cg.solve_cgo(_disc_mu(grid, 0.2), 1.0, grid)
    phi = cg.extract_phase(sol)
    return phi.reconstruction_error(sol.W()), 1e-12


def inv_chart_roundtrips(cfg, rng):
    pts_h = rng.uniform(-3, 3, 64) - 1j * rng.uniform(0.1, 3, 64)
    mob = dm.mobius_halfplane_to_disc()
    d1 = mob.roundtrip_defect(pts_h)
    pts_e = rng.uniform(1.1, 4.0, 64) * np.exp(2j * np.pi * rng.uniform(0, 1, 64))
    inv = dm.inversion_exterior_to_disc()
    d2 = inv.roundtrip_defect(pts_e)
    x = rng.uniform(-50, 50, 64)
    d3 = float(np.abs(np.abs(mob.fwd(x)) - 1.0).max())
    return max(d1, d2, d3), 1e-13


def inv_reflection_symmetry(cfg, rng):
    mesh = disc_mesh(cfg.get_float("mesh.h"))
    sig_up = lambda x, y: (np.full_like(x, 2.0), np.full_like(x, 0.4),
                           np.full_like(x, 1.3))
    refl = dm.reflect_conductivity(sig_up)
    op = dt.DiscreteOperator(mesh, refl)
    th = mesh.boundary_angles()
    for parity, tracefn in (("even", np.cos), ("odd", np.sin)):
        u = op.dirichlet(tracefn(2 * th))
        mirrored = dm._p1_interp(mesh, u, (mesh.pts[:, 0] - 1j * mesh.pts[:, 1]))
        expect = u if parity == "even" else -u
        defect = np.abs(mirrored - expect).max() / max(np.abs(u).max(), 1e-30)
        if parity == "even":
            worst = defect
        else:
            worst = max(worst, defect)
    return float(worst), 0.02


def inv_evenodd_completeness(cfg, rng):
    th = 2.0 * np.pi * np.arange(256) / 256
    worst = 0.0
    for n in range(0, 9):
        f = np.cos(n * th) + (np.sin(n * th) if n else 0.0)
        # reflection theta -> -theta on the sample grid
        fr = np.concatenate([f[:1], f[1:][::-1]])
        even = 0.5 * (f + fr)
        odd = 0.5 * (f - fr)
        cos_part = np.cos(n * th)
        sin_part = np.sin(n * th) if n else np.zeros_like(th)
        worst = max(worst, float(np.abs(even - cos_part).max()),
                    float(np.abs(odd - sin_part).max()))
    return worst, 1e-12


def inv_exterior_oracle(cfg, rng):
    lam = dm.exterior_dtn(lambda x, y: (np.ones_like(x), np.zeros_like(x),
                                        np.ones_like(x)),
                          8, cfg.get_float("mesh.h"))
    diag = lam.mode_eigenvalues()
    worst = 0.0
    for n in range(1, 9):
        for idx in (2 * n - 1, 2 * n):
            worst = max(worst, abs(diag[idx] - n) / n)
    return float(worst), 0.01


def inv_ba_extension(cfg, rng):
    g = dm.CircleHomeomorphism.from_function(lambda t: t + 0.1 * np.sin(t))
    ext = dm.beurling_ahlfors_extension(g, grid_n=128)
    Z = ext.grid.points()
    inside = np.abs(Z) < 1.0 - 3 * ext.grid.h
    Jmin = float(ext.jacobian()[inside].min())
    th = 2.0 * np.pi * np.arange(512) / 512
    bvals = dm._ba_values(g, (1.0 - 1e-9) * np.exp(1j * th))
    sup = float(np.abs(bvals - np.exp(1j * g.lift_at(th))).max())
    value = max(sup, 0.0 if Jmin > 0 else 1.0)
    return value, 1e-3


def inv_ba_equivariance(cfg, rng):
    gid = dm.CircleHomeomorphism.identity(1024)
    ext = dm.beurling_ahlfors_extension(gid, grid_n=128)
    Z = ext.grid.points()
    inside = np.abs(Z) <= 1.0
    d1 = float(np.abs(ext.F - Z)[inside].max())
    rot = dm.CircleHomeomorphism.from_function(lambda t: t + 0.9)
    ext2 = dm.beurling_ahlfors_extension(rot, grid_n=128)
    d2 = float(np.abs(ext2.F - np.exp(0.9j) * Z)[inside].max())
    return max(d1, d2), 1e-10


SUITE = [
    ("fields.coefficient-chain", inv_coefficient_chain),
    ("fields.roundtrips", inv_roundtrips),
    ("fields.modulus-identity", inv_modulus_identity),
    ("fields.mu1-bound", inv_mu1_bound),
    ("fields.pushforward-det-invariance", inv_pushforward_det),
    ("beltrami.beurling-derivative", inv_beurling_derivative),
    ("beltrami.beurling-isometry", inv_beurling_isometry),
    ("beltrami.cauchy-dbar", inv_cauchy_dbar),
    ("beltrami.constant-mu-closed-form", inv_constant_mu),
    ("beltrami.contraction-rate", inv_contraction),
    ("beltrami.distortion-bound", inv_distortion),
    ("beltrami.normalization-decay", inv_normalization_decay),
    ("dtn.spectrum", inv_dtn_spectrum),
    ("dtn.symmetry", inv_dtn_symmetry),
    ("dtn.energy-consistency", inv_energy_consistency),
    ("dtn.hilbert-identity-case", inv_hilbert_identity_case),
    ("dtn.hilbert-involution", inv_hilbert_involution),
    ("dtn.diffeo-invariance", inv_diffeo_invariance),
    ("cgo.exponential-exact", inv_cgo_exponential),
    ("cgo.k-zero-constant", inv_cgo_k_zero),
    ("cgo.equation-residual", inv_cgo_residual),
    ("cgo.exterior-identity", inv_g_identity),
    ("cgo.phase-consistency", inv_phase_consistency),
    ("domains.chart-roundtrips", inv_chart_roundtrips),
    ("domains.reflection-symmetry", inv_reflection_symmetry),
    ("domains.evenodd-completeness", inv_evenodd_completeness),
    ("domains.exterior-oracle", inv_exterior_oracle),
    ("domains.ba-extension", inv_ba_extension),
    ("domains.ba-equivariance", inv_ba_equivariance),
]


def run_suite(cfg, names=None):
    """Run the invariant suite; returns a list of result records."""
    rng = np.random.default_rng(cfg.get_int("seed"))
    results = []
    for name, fn in SUITE:
        if names and name not in names:
            continue
        import time

        t0 = time.perf_counter()
        try:
            value, bound = fn(cfg, rng)
            passed = value <= bound
            error = ""
        except Exception as exc:  # the suite reports, it does not crash
            value, bound, passed, error = float("nan"), float("nan"), False, str(exc)
        results.append({
            "name": name, "value": value, "bound": bound,
            "passed": passed, "seconds": time.perf_counter() - t0,
            "error": error,
        })
    return results
