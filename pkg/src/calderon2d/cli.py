"""Batch front door: configuration, pipelines, artifacts, figures.

Subcommands
-----------
forward-dtn   assemble and export the DtN matrix of a conductivity
isotropize    flatten a conductivity, export the map and the scalar field
cgo-recover   exterior probes, deformation recovery, full-loop check
partial-data  reconstruct Cauchy data from arc-only measurements
halfplane     half-plane pipeline through the Mobius chart
exterior      exterior-domain pipeline through the inversion chart
verify        run the invariant suite; exit status 0 iff all pass

Every command writes delimited artifacts plus a rendered summary figure
into the output directory.  Identical configurations produce
byte-identical delimited artifacts (wall times live only in report
comments).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import beltrami as bl
from . import cgo as cg
from . import domains as dm
from . import dtn as dt
from . import fields as fd
from . import plots
from .config import ConfigError, RunConfig
from .fieldio import sigma_from_spec, write_field
from .grids import GridSpec
from .mesh import disc_mesh
from .reports import RunReport, write_matrix_csv, write_rows_csv

OUT_ENV = "CALDERON2D_OUT"


def _out_dir(cfg: RunConfig, args) -> str:
    out = args.out or cfg.get("out") or os.environ.get(OUT_ENV, ".") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config \
        else RunConfig.from_text("", source="<defaults>")
    if args.tol is not None:
        cfg.entries["tol"] = repr(args.tol)
    if args.modes is not None:
        cfg.entries["modes"] = str(args.modes)
    if args.kschedule is not None:
        cfg.entries["kschedule"] = args.kschedule
    if args.seed is not None:
        cfg.entries["seed"] = str(args.seed)
    problems = cfg.validate()
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        raise SystemExit(2)
    return cfg


def _sigma(cfg: RunConfig):
    grid = GridSpec(cfg.get_float("grid.L"), cfg.get_int("grid.n"))
    return sigma_from_spec(cfg.sigma_spec(), grid), grid


def _finish(report: RunReport, out: str, name: str = "report.txt") -> int:
    path = os.path.join(out, name)
    with open(path, "w") as f:
        f.write(report.to_text())
    print(report.to_text(), end="")
    return 0 if report.verdict else 1


# ---------------------------------------------------------------------------


def cmd_forward_dtn(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    sigma, grid = _sigma(cfg)
    N = cfg.get_int("modes")
    h = cfg.get_float("mesh.h")
    report = RunReport("forward-dtn")
    st = report.stage("assemble")
    t0 = time.perf_counter()
    mesh = disc_mesh(h)
    lam = dt.dtn_matrix(sigma, mesh, N, label=cfg.get("sigma.preset", "custom"))
    st.wall_time = time.perf_counter() - t0
    st.residuals["symmetry"] = lam.symmetry_defect()
    st.check("dtn.symmetry", lam.symmetry_defect(), 1e-8)
    st.check("dtn.constant-kernel", float(np.abs(lam.mat[0]).max()), 1e-14)
    write_matrix_csv(os.path.join(out, "dtn.csv"), lam.mat,
                     {"sigma": cfg.get("sigma.preset", "custom"),
                      "N": N, "h": h, "basis": "orthonormal-trig"})
    ref = np.array([c * dt.mode_of_index(a)
                    for a, c in zip(range(dt.basis_size(N)),
                                    [1.0] * dt.basis_size(N))])
    plots.dtn_spectrum_figure(lam.mat, out, reference=ref)
    return _finish(report, out)


def cmd_isotropize(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    sigma, grid = _sigma(cfg)
    tol = cfg.get_float("tol")
    report = RunReport("isotropize")

    st = report.stage("coefficients")
    data = fd.BeltramiData.from_sigma(sigma)
    st.residuals["kappa"] = data.kappa
    st.check("kappa-bound", data.kappa, 1.0 - 1e-9)

    st = report.stage("principal-solution")
    t0 = time.perf_counter()
    sol, sigma_tilde = bl.isotropize(sigma, tol=tol)
    st.wall_time = time.perf_counter() - t0
    st.residuals["equation"] = sol.residual
    st.residuals["iterations"] = float(sol.iterations)
    st.check("equation-residual", sol.residual, max(tol * 100, 1e-8))
    sol.map.check_orientation()
    st.check("jacobian-positive", 0.0, 0.5)

    st = report.stage("pushforward")
    t0 = time.perf_counter()
    pushed = fd.pushforward(sigma, sol.map)
    st.wall_time = time.perf_counter() - t0
    defect = bl.isotropy_defect(pushed, sol.map, sigma.region) - 1.0
    st.residuals["anisotropy-defect"] = defect
    st.check("isotropy", defect, max(1e-3, 100 * tol))
    X = sol.map.invert(grid.points())
    a, b, c = sigma.entries_at(X)
    det_err = float(np.abs(pushed.det() - (a * c - b * b)).max())
    st.residuals["det-invariance"] = det_err
    st.check("det-invariance", det_err, 1e-8)

    write_field(os.path.join(out, "deformation.f64"), grid,
                {"F": sol.map.F, "fz": sol.map.fz, "fzb": sol.map.fzb})
    write_field(os.path.join(out, "sigma_tilde.f64"), grid,
                {"value": sigma_tilde.values})
    plots.deformation_figure(sol.map.F, grid, out)
    plots.field_figure(sigma_tilde.values, grid, out, "sigma_tilde.png",
                       "flattened conductivity")
    return _finish(report, out)


def cmd_cgo_recover(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    sigma, grid = _sigma(cfg)
    N = cfg.get_int("modes")
    h = cfg.get_float("mesh.h")
    ks = cfg.k_schedule()
    report = RunReport("cgo-recover")

    st = report.stage("boundary-data")
    t0 = time.perf_counter()
    mesh = disc_mesh(h)
    lam = dt.dtn_matrix(sigma, mesh, N)
    H = dt.hilbert_matrix(lam)
    st.wall_time = time.perf_counter() - t0
    st.check("dtn.symmetry", lam.symmetry_defect(), 1e-8)

    st = report.stage("exterior-probes")
    t0 = time.perf_counter()
    G_by_k = {}
    for k in ks:
        G = cg.solve_G_from_boundary_data(H, N, k)
        G_by_k[k] = G
        st.residuals[f"coupling-defect-k{k:g}"] = G.defect
    st.wall_time = time.perf_counter() - t0

    st = report.stage("recovery")
    t0 = time.perf_counter()
    ring = 1.5 * np.exp(2j * np.pi * np.arange(64) / 64)
    rec = cg.recover_F_exterior(G_by_k, ring)
    truth = None
    if sigma.region is not None and not sigma.is_isotropic(1e-12):
        sol, sigma_tilde = bl.isotropize(sigma, tol=cfg.get_float("tol"))
        truth = grid.interp(sol.map.F, ring)
    elif sigma.is_isotropic(1e-12):
        truth = ring.copy()
        sol, sigma_tilde = None, None
    rows = []
    errs = []
    for k in ks:
        err = float("nan")
        if truth is not None:
            err = float(np.abs(rec[k] - truth).max())
            errs.append(err)
        st.residuals[f"recovery-error-k{k:g}"] = err
        for z, fhat in zip(ring, rec[k]):
            rows.append([z, k, fhat, err])
    if len(errs) >= 2:
        st.check("error-decreasing", errs[-1], errs[0] * 0.5 + 1e-15)
    st.wall_time = time.perf_counter() - t0
    write_rows_csv(os.path.join(out, "recovery.csv"),
                   ["z", "k", "F_hat", "ring_error"], rows)
    if errs:
        plots.recovery_figure([abs(k) for k in ks], errs, out)

    st = report.stage("full-loop")
    if truth is not None and sol is not None:
        t0 = time.perf_counter()
        kmax = max(ks, key=abs)
        bvals = cg.boundary_deformation(G_by_k[kmax], samples=1024)
        rep_fn, E, J = dm.build_representative(
            lambda z: sigma_tilde.at(z), bvals, grid_n=min(grid.n, 256))
        lam_rep = dt.dtn_matrix(rep_fn, mesh, N)
        defect = lam_rep.relative_defect(lam, N=min(6, N))
        st.wall_time = time.perf_counter() - t0
        st.residuals["loop-defect"] = defect
        st.check("loop-dtn-match", defect, 0.05)
    else:
        st.check("loop-dtn-match", 0.0, 0.05)
    return _finish(report, out)


def cmd_partial_data(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    sigma, grid = _sigma(cfg)
    N = min(cfg.get_int("modes"), 6)
    h = cfg.get_float("mesh.h")
    report = RunReport("partial-data")
    st = report.stage("reconstruct")
    t0 = time.perf_counter()
    fn = sigma.fem_coefficients()
    recon = dm.cauchy_data_from_partial(fn, N, mesh_h=h)
    mesh = disc_mesh(h)
    refl = dm.reflect_conductivity(fn)
    lam = dt.dtn_matrix(refl, mesh, N)
    direct = dt.cauchy_data(lam)
    dist = recon.subspace_distance(direct)
    st.wall_time = time.perf_counter() - t0
    st.residuals["subspace-distance"] = dist
    st.check("cauchy-data-match", dist, 0.05)
    write_rows_csv(os.path.join(out, "cauchy_pairs.csv"),
                   ["kind"] + [f"c{i}" for i in range(dt.basis_size(N))],
                   [["trace"] + list(t) for t in recon.traces]
                   + [["flux"] + list(f) for f in recon.fluxes])
    plots.dtn_spectrum_figure(lam.mat, out, name="reflected_dtn.png")
    return _finish(report, out)


def cmd_halfplane(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    N = cfg.get_int("modes")
    h = cfg.get_float("mesh.h")
    report = RunReport("halfplane")
    st = report.stage("transport")
    t0 = time.perf_counter()
    preset = cfg.get("sigma.preset", "identity")
    if preset == "identity":
        lam = dm.halfplane_to_disc_dtn(dm.halfplane_identity_pairing, N, h)
        diag = lam.mode_eigenvalues()
        worst = max(abs(diag[2 * n - 1] - n) / n for n in range(1, min(N, 8) + 1))
        st.residuals["spectrum-defect"] = worst
        st.check("identity-spectrum", worst, 0.02)
    else:
        sigma, grid = _sigma(cfg)
        lam = dm.halfplane_pipeline_dtn(sigma.fem_coefficients(), N, h)
        st.check("dtn.symmetry", lam.symmetry_defect(), 1e-8)
    st.wall_time = time.perf_counter() - t0
    write_matrix_csv(os.path.join(out, "halfplane_dtn.csv"), lam.mat,
                     {"geometry": "halfplane", "N": N, "h": h})
    plots.dtn_spectrum_figure(lam.mat, out, name="halfplane_dtn.png")
    return _finish(report, out)


def cmd_exterior(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    N = cfg.get_int("modes")
    h = cfg.get_float("mesh.h")
    report = RunReport("exterior")
    st = report.stage("solve")
    t0 = time.perf_counter()
    preset = cfg.get("sigma.preset", "identity")
    if preset == "identity":
        fn = lambda x, y: (np.ones_like(x), np.zeros_like(x), np.ones_like(x))
    else:
        sigma, grid = _sigma(cfg)
        fn = sigma.fem_coefficients()
    lam = dm.exterior_dtn(fn, N, h)
    st.wall_time = time.perf_counter() - t0
    if preset == "identity":
        diag = lam.mode_eigenvalues()
        worst = max(abs(diag[2 * n - 1] - n) / n for n in range(1, min(N, 8) + 1))
        st.residuals["spectrum-defect"] = worst
        st.check("exterior-oracle", worst, 0.01)
    st.check("dtn.symmetry", lam.symmetry_defect(), 1e-8)
    write_matrix_csv(os.path.join(out, "exterior_dtn.csv"), lam.mat,
                     {"geometry": "exterior", "N": N, "h": h})
    plots.dtn_spectrum_figure(lam.mat, out, name="exterior_dtn.png")
    return _finish(report, out)


def cmd_verify(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args)
    from .verify import run_suite

    results = run_suite(cfg)
    report = RunReport("verify")
    st = report.stage("invariant-suite")
    rows = []
    for r in results:
        st.check(r["name"], r["value"] if np.isfinite(r["value"]) else 1e30,
                 r["bound"] if np.isfinite(r["bound"]) else 0.0)
        rows.append([r["name"], r["value"], r["bound"],
                     "PASS" if r["passed"] else "FAIL", r["error"]])
    st.wall_time = sum(r["seconds"] for r in results)
    write_rows_csv(os.path.join(out, "verify.csv"),
                   ["invariant", "value", "bound", "status", "error"], rows)
    plots.verify_figure([r["name"] for r in results],
                        [r["passed"] for r in results], out)
    return _finish(report, out, name="verify_report.txt")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="calderon2d",
        description="Forward solvers, isotropization, and deformation "
                    "recovery for planar anisotropic conductivities.")
    sub = p.add_subparsers(dest="command", required=True)
    commands = {
        "forward-dtn": cmd_forward_dtn,
        "isotropize": cmd_isotropize,
        "cgo-recover": cmd_cgo_recover,
        "partial-data": cmd_partial_data,
        "halfplane": cmd_halfplane,
        "exterior": cmd_exterior,
        "verify": cmd_verify,
    }
    for name, fn in commands.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None,
                        help="key=value configuration file")
        sp.add_argument("--out", type=str, default=None,
                        help=f"output directory (default: ${OUT_ENV} or .)")
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--modes", type=int, default=None)
        sp.add_argument("--kschedule", type=str, default=None,
                        help="comma-separated frequency schedule")
        sp.add_argument("--seed", type=int, default=None)
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
