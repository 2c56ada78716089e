"""Conductivity tensors, complex dilatations, and quasiconformal maps.

A planar conductivity is a symmetric positive definite 2x2 matrix field
sigma = [[s11, s12], [s12, s22]], stored as three scalar fields on a
common grid and extended by the identity outside its support region.

The pointwise algebra implemented here connects sigma with two pairs of
Beltrami-type coefficients:

    mu1 = (-s11 + s22 - 2i s12) / (s11 + s22 + 2 sqrt(det sigma))
    mu2 = (1 - sqrt(det sigma)) / (1 + sqrt(det sigma))

    nu1 = mu1 (1 - mu2^2) / (1 - |mu1|^2 mu2^2)
    nu2 = mu2 (1 - |mu1|^2) / (1 - |mu1|^2 mu2^2)

and equivalently, directly from the tensor,

    nu1 = (s22 - s11 - 2i s12) / (1 + tr sigma + det sigma)
    nu2 = (1 - det sigma) / (1 + tr sigma + det sigma).

All maps are invertible on their stated bounds and every inversion here
is validated by round trip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec, Region, deposit_indicator

# Admissibility window for eigenvalues of sigma; outside it the
# anisotropy is treated as degenerate and the field is rejected.
EIG_FLOOR = 1e-8
EIG_CEIL = 1e8


class DegenerateConductivityError(ValueError):
    pass


def _eigen_range(s11, s12, s22):
    mean = 0.5 * (s11 + s22)
    disc = np.sqrt(np.maximum(0.25 * (s11 - s22) ** 2 + s12 ** 2, 0.0))
    return mean - disc, mean + disc


@dataclass
class ConductivityTensor:
    """Grid-sampled SPD tensor field, identity outside the support mask."""

    grid: GridSpec
    s11: np.ndarray
    s12: np.ndarray
    s22: np.ndarray
    mask: np.ndarray            # True on the support of sigma - I
    region: Region | None = None
    evaluator: object = None    # optional callable z -> (s11, s12, s22)

    def __post_init__(self):
        for name in ("s11", "s12", "s22"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n, self.grid.n):
                raise ValueError(f"{name} shape does not match grid")
            setattr(self, name, arr)
        lo, hi = _eigen_range(self.s11, self.s12, self.s22)
        bad = (lo < EIG_FLOOR) | (hi > EIG_CEIL)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise DegenerateConductivityError(
                f"conductivity eigenvalues out of range at cell ({i}, {j}): "
                f"[{lo[i, j]:.3e}, {hi[i, j]:.3e}]")
        if self.region is not None:
            margin = self.grid.L / 4.0
            if self.region.bounding_radius() > self.grid.L - margin:
                raise ValueError(
                    "support region does not leave the required L/4 margin "
                    f"(bounding radius {self.region.bounding_radius():.3g}, "
                    f"grid half-width {self.grid.L:.3g})")

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, grid: GridSpec) -> "ConductivityTensor":
        one = np.ones((grid.n, grid.n))
        zero = np.zeros_like(one)

        def ev(z):
            z = np.asarray(z)
            return (np.ones(z.shape), np.zeros(z.shape), np.ones(z.shape))

        return cls(grid, one, zero, one, np.zeros_like(one, dtype=bool),
                   evaluator=ev)

    @classmethod
    def constant(cls, grid: GridSpec, s11: float, s12: float, s22: float,
                 region: Region) -> "ConductivityTensor":
        """Constant tensor on `region`, identity outside."""
        w = deposit_indicator(grid, region, order=2)
        # moment-matched weights can slightly overshoot [0, 1]; the tensor
        # entries must stay admissible, so blend in the clipped weight
        wc = np.clip(w, 0.0, 1.0)

        def blend(a, b, t):
            return a + (b - a) * t

        def ev(z):
            ins = region.inside(np.asarray(z)).astype(float)
            return (blend(np.ones_like(ins), s11, ins),
                    blend(np.zeros_like(ins), s12, ins),
                    blend(np.ones_like(ins), s22, ins))

        return cls(grid,
                   blend(1.0, s11, wc), blend(0.0, s12, wc), blend(1.0, s22, wc),
                   region.inside(grid.points()), region=region, evaluator=ev)

    @classmethod
    def radial(cls, grid: GridSpec, amplitude: float = 1.0,
               radius: float = 1.0) -> "ConductivityTensor":
        """Smooth isotropic radial bump: sigma = 1 + amplitude * b(|z|/radius)."""
        from .grids import DiscRegion

        def profile(r):
            t = np.clip(r / radius, 0.0, 1.0)
            b = np.where(t < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - t ** 2, 1e-300)), 0.0)
            return 1.0 + amplitude * b

        def ev(z):
            s = profile(np.abs(np.asarray(z)))
            return (s, np.zeros_like(s), s)

        s = profile(np.abs(grid.points()))
        zero = np.zeros_like(s)
        return cls(grid, s, zero, s, np.abs(grid.points()) <= radius,
                   region=DiscRegion(0.0, radius), evaluator=ev)

    @classmethod
    def from_fields(cls, grid: GridSpec, s11, s12, s22, mask=None,
                    region=None, evaluator=None) -> "ConductivityTensor":
        if mask is None:
            mask = (np.abs(s11 - 1) + np.abs(s12) + np.abs(s22 - 1)) > 1e-14
        return cls(grid, s11, s12, s22, mask, region=region, evaluator=evaluator)

    # -- pointwise access ---------------------------------------------

    def entries_at(self, pts):
        if self.evaluator is not None:
            return self.evaluator(pts)
        return (self.grid.interp(self.s11, pts),
                self.grid.interp(self.s12, pts),
                self.grid.interp(self.s22, pts))

    def det(self) -> np.ndarray:
        return self.s11 * self.s22 - self.s12 ** 2

    def trace(self) -> np.ndarray:
        return self.s11 + self.s22

    def is_isotropic(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.s11 - self.s22) <= tol)
                    and np.all(np.abs(self.s12) <= tol))

    def anisotropy_ratio(self) -> np.ndarray:
        lo, hi = _eigen_range(self.s11, self.s12, self.s22)
        return hi / lo

    def fem_coefficients(self):
        """Callable (x, y) -> (s11, s12, s22) for finite-element assembly."""
        def fn(x, y):
            return self.entries_at(np.asarray(x) + 1j * np.asarray(y))
        return fn


def ellipticity_constant(sigma: ConductivityTensor) -> float:
    """Smallest C0 with C0^-1 I <= sigma <= C0 I over all cells."""
    lo, hi = _eigen_range(sigma.s11, sigma.s12, sigma.s22)
    if np.any(lo <= 0):
        i, j = np.argwhere(lo <= 0)[0]
        raise DegenerateConductivityError(
            f"non-positive-definite cell ({i}, {j}): eigenvalues "
            f"({lo[i, j]:.3e}, {hi[i, j]:.3e})")
    return float(max(hi.max(), (1.0 / lo).max()))


def _checked_det(sigma: ConductivityTensor) -> np.ndarray:
    d = sigma.det()
    if np.any(d <= 0):
        i, j = np.argwhere(d <= 0)[0]
        raise DegenerateConductivityError(
            f"det sigma <= 0 at cell ({i}, {j}): {d[i, j]:.3e}")
    return d


def mu1_from_sigma(sigma: ConductivityTensor) -> np.ndarray:
    d = _checked_det(sigma)
    return ((-sigma.s11 + sigma.s22 - 2j * sigma.s12)
            / (sigma.s11 + sigma.s22 + 2.0 * np.sqrt(d)))


def mu2_from_sigma(sigma: ConductivityTensor) -> np.ndarray:
    rd = np.sqrt(_checked_det(sigma))
    return (1.0 - rd) / (1.0 + rd)


def _check_unit_bound(name, mag):
    m = np.max(mag)
    if m >= 1.0:
        raise ValueError(f"sup|{name}| = {m:.6f} >= 1")


def nu_from_mu(mu1: np.ndarray, mu2: np.ndarray):
    mu1 = np.asarray(mu1, dtype=complex)
    mu2 = np.asarray(mu2, dtype=float)
    _check_unit_bound("mu1", np.abs(mu1))
    _check_unit_bound("mu2", np.abs(mu2))
    a2 = np.abs(mu1) ** 2
    den = 1.0 - a2 * mu2 ** 2
    nu1 = mu1 * (1.0 - mu2 ** 2) / den
    nu2 = mu2 * (1.0 - a2) / den
    return nu1, nu2


def mu_from_nu(nu1: np.ndarray, nu2: np.ndarray, tol: float = 1e-10):
    """Invert the (mu1, mu2) -> (nu1, nu2) relation.

    In the moduli the relation collapses to hyperbolic addition:
    with p = |nu1|, q = nu2, a = |mu1|, b = mu2,

        p + q = (a + b) / (1 + a b),    p - q = (a - b) / (1 - a b),

    so artanh(p +/- q) = artanh(a) +/- artanh(b) and the inversion is
    closed-form.  The phase of nu1 carries over to mu1 unchanged.
    """
    nu1 = np.asarray(nu1, dtype=complex)
    nu2 = np.asarray(nu2, dtype=float)
    p = np.abs(nu1)
    _check_unit_bound("nu1| + |nu2", p + np.abs(nu2))
    sp = np.arctanh(np.clip(p + nu2, -1 + 1e-16, 1 - 1e-16))
    sm = np.arctanh(np.clip(p - nu2, -1 + 1e-16, 1 - 1e-16))
    a = np.tanh(0.5 * (sp + sm))
    b = np.tanh(0.5 * (sp - sm))
    phase = np.where(p > 0, nu1 / np.where(p > 0, p, 1.0), 0.0)
    mu1 = a * phase
    mu2 = b
    r1, r2 = nu_from_mu(mu1, mu2)
    resid = float(np.max(np.abs(r1 - nu1) + np.abs(r2 - nu2)))
    if resid > tol:
        raise ValueError(f"mu_from_nu round-trip residual {resid:.3e} > {tol:.1e}")
    return mu1, mu2


def sigma_to_nu(sigma: ConductivityTensor):
    d = _checked_det(sigma)
    den = 1.0 + sigma.trace() + d
    nu1 = (sigma.s22 - sigma.s11 - 2j * sigma.s12) / den
    nu2 = (1.0 - d) / den
    return nu1, nu2


def nu_to_sigma(nu1: np.ndarray, nu2: np.ndarray, grid: GridSpec,
                tol: float = 1e-10) -> ConductivityTensor:
    """Unique SPD tensor with the given coefficient pair."""
    mu1, mu2 = mu_from_nu(nu1, nu2, tol=tol)
    rd = (1.0 - mu2) / (1.0 + mu2)          # sqrt(det sigma)
    d = rd ** 2
    a2 = np.abs(mu1) ** 2
    tr = 2.0 * rd * (1.0 + a2) / (1.0 - a2)
    den = 1.0 + tr + d
    diff = np.real(nu1) * den               # s22 - s11
    s12 = -np.imag(nu1) * den / 2.0
    s11 = 0.5 * (tr - diff)
    s22 = 0.5 * (tr + diff)
    out = ConductivityTensor.from_fields(grid, s11, s12, s22)
    c1, c2 = sigma_to_nu(out)
    resid = float(np.max(np.abs(c1 - nu1) + np.abs(c2 - nu2)))
    if resid > tol:
        raise ValueError(f"nu_to_sigma round-trip residual {resid:.3e} > {tol:.1e}")
    return out


def hat_sigma(sigma: ConductivityTensor) -> ConductivityTensor:
    """sigma / det sigma; an involution that swaps sigma with its conjugate tensor."""
    d = _checked_det(sigma)
    ev = None
    if sigma.evaluator is not None:
        base = sigma.evaluator

        def ev(z):
            a, b, c = base(z)
            dd = a * c - b ** 2
            return (a / dd, b / dd, c / dd)

    return ConductivityTensor.from_fields(
        sigma.grid, sigma.s11 / d, sigma.s12 / d, sigma.s22 / d,
        mask=sigma.mask, region=sigma.region, evaluator=ev)


@dataclass
class BeltramiData:
    """The coefficient quadruple of a conductivity, with its sup bounds."""

    grid: GridSpec
    mu1: np.ndarray
    mu2: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    kappa: float

    @classmethod
    def from_sigma(cls, sigma: ConductivityTensor) -> "BeltramiData":
        mu1 = mu1_from_sigma(sigma)
        mu2 = mu2_from_sigma(sigma)
        nu1, nu2 = sigma_to_nu(sigma)
        kappa = float(max(np.abs(mu1).max(), np.abs(mu2).max()))
        data = cls(sigma.grid, mu1, mu2, nu1, nu2, kappa)
        data.validate()
        return data

    def validate(self):
        if self.kappa >= 1.0:
            raise ValueError(f"kappa = {self.kappa:.6f} >= 1")
        s = np.abs(self.nu1) + np.abs(self.nu2)
        bound = 2.0 * self.kappa / (1.0 + self.kappa ** 2)
        if s.max() > bound + 1e-12:
            raise ValueError(
                f"sup(|nu1|+|nu2|) = {s.max():.6f} exceeds 2k/(1+k^2) = {bound:.6f}")

    @property
    def kappa_prime(self) -> float:
        return float((np.abs(self.nu1) + np.abs(self.nu2)).max())


# ---------------------------------------------------------------------------
# Quasiconformal maps
# ---------------------------------------------------------------------------


def _df_matrix(fz, fzb):
    """Real 2x2 Jacobian entries from Wirtinger derivatives."""
    Fx = fz + fzb            # du/dx + i dv/dx
    Fy = 1j * (fz - fzb)     # du/dy + i dv/dy
    return Fx.real, Fy.real, Fx.imag, Fy.imag  # a11, a12, a21, a22


@dataclass
class DiffeoMap:
    """Grid-sampled orientation-preserving map with Wirtinger derivatives."""

    grid: GridSpec
    F: np.ndarray
    fz: np.ndarray
    fzb: np.ndarray
    analytic: object = None          # optional AnalyticDiffeo backing this map

    def jacobian(self) -> np.ndarray:
        return np.abs(self.fz) ** 2 - np.abs(self.fzb) ** 2

    def check_orientation(self):
        J = self.jacobian()
        if np.any(J <= 0):
            i, j = np.argwhere(J <= 0)[0]
            raise ValueError(f"Jacobian <= 0 at cell ({i}, {j}): {J[i, j]:.3e}")

    def F_at(self, pts):
        """Evaluate the map; off the grid the displacement F - z (which
        decays for normalized maps) is extended by its edge values."""
        if self.analytic is not None:
            return self.analytic.F(pts)
        pts = np.asarray(pts, dtype=complex)
        disp = self.grid.interp(self.F - self.grid.points(), pts)
        return pts + disp

    def derivs_at(self, pts):
        if self.analytic is not None:
            return self.analytic.fz(pts), self.analytic.fzb(pts)
        return self.grid.interp(self.fz, pts), self.grid.interp(self.fzb, pts)

    def invert(self, y, tol_factor: float = 2.0, maxit: int = 60):
        """Preimages under the map by damped Newton on the interpolant.

        Accepts any array of targets; tolerance is tol_factor * cell size.
        """
        if self.analytic is not None and self.analytic.inverse is not None:
            return self.analytic.inverse(y)
        y = np.asarray(y, dtype=complex)
        x = y.copy()                       # seed: map is a bounded deformation of z
        tol = tol_factor * self.grid.h
        wild = 2.0 * self.grid.L
        for _ in range(maxit):
            r = self.F_at(x) - y
            if np.abs(r).max() <= 0.25 * tol:
                break
            fz, fzb = self.derivs_at(x)
            J = np.abs(fz) ** 2 - np.abs(fzb) ** 2
            J = np.where(np.abs(J) < 1e-30, 1e-30, J)
            # solve DF * dx = -r in Wirtinger form
            dx = (-(np.conj(fz) * r) + fzb * np.conj(r)) / J
            cap = max(8 * self.grid.h, 0.1 * self.grid.L)
            step = np.where(np.abs(dx) > cap, cap * dx / np.abs(dx), dx)
            x = x + step
            if np.abs(x).max() > wild:
                raise ValueError("inverse-map Newton diverged; target outside "
                                 "the range of the map")
        err = np.abs(self.F_at(x) - y).max()
        if err > tol:
            raise ValueError(f"inverse-map Newton stalled: residual {err:.3e} > {tol:.3e}")
        return x

    @classmethod
    def identity(cls, grid: GridSpec) -> "DiffeoMap":
        Z = grid.points()
        return cls(grid, Z.copy(), np.ones_like(Z), np.zeros_like(Z),
                   analytic=AnalyticDiffeo.identity())


@dataclass
class AnalyticDiffeo:
    """Closed-form map used for oracle transforms in tests and pipelines."""

    F: object
    fz: object
    fzb: object
    inverse: object = None

    def sample(self, grid: GridSpec) -> DiffeoMap:
        Z = grid.points()
        return DiffeoMap(grid, self.F(Z), self.fz(Z) * np.ones_like(Z),
                         self.fzb(Z) * np.ones_like(Z), analytic=self)

    @classmethod
    def identity(cls):
        return cls(F=lambda z: np.asarray(z, dtype=complex),
                   fz=lambda z: np.ones_like(np.asarray(z, dtype=complex)),
                   fzb=lambda z: np.zeros_like(np.asarray(z, dtype=complex)),
                   inverse=lambda y: np.asarray(y, dtype=complex))

    @classmethod
    def rotation(cls, alpha: float):
        ph = np.exp(1j * alpha)
        return cls(F=lambda z: ph * np.asarray(z),
                   fz=lambda z: ph * np.ones_like(np.asarray(z, dtype=complex)),
                   fzb=lambda z: np.zeros_like(np.asarray(z, dtype=complex)),
                   inverse=lambda y: np.conj(ph) * np.asarray(y))

    @classmethod
    def scaling(cls, c: float):
        return cls(F=lambda z: c * np.asarray(z),
                   fz=lambda z: c * np.ones_like(np.asarray(z, dtype=complex)),
                   fzb=lambda z: np.zeros_like(np.asarray(z, dtype=complex)),
                   inverse=lambda y: np.asarray(y) / c)

    @classmethod
    def linear_stretch(cls, c: complex):
        """z + c conj(z), |c| < 1."""
        c = complex(c)
        den = 1.0 - abs(c) ** 2

        def inv(y):
            y = np.asarray(y, dtype=complex)
            return (y - c * np.conj(y)) / den

        return cls(F=lambda z: np.asarray(z) + c * np.conj(np.asarray(z)),
                   fz=lambda z: np.ones_like(np.asarray(z, dtype=complex)),
                   fzb=lambda z: c * np.ones_like(np.asarray(z, dtype=complex)),
                   inverse=inv)

    @classmethod
    def radial_shear(cls, beta: float):
        """Boundary-fixing twist of the unit disc: r e^{i t} -> r e^{i(t + beta(1-r))}.

        Extended by the identity outside the closed disc; area preserving.
        """
        def phase(z, sign=1.0):
            r = np.abs(z)
            return np.where(r < 1.0, np.exp(sign * 1j * beta * (1.0 - r)), 1.0)

        def F(z):
            z = np.asarray(z, dtype=complex)
            return z * phase(z)

        def fz(z):
            z = np.asarray(z, dtype=complex)
            r = np.maximum(np.abs(z), 1e-300)
            return np.where(np.abs(z) < 1.0, phase(z) * (1.0 - 0.5j * beta * r), 1.0)

        def fzb(z):
            z = np.asarray(z, dtype=complex)
            r = np.maximum(np.abs(z), 1e-300)
            return np.where(np.abs(z) < 1.0, -0.5j * beta * (z ** 2 / r) * phase(z), 0.0)

        def inv(y):
            y = np.asarray(y, dtype=complex)
            return y * phase(y, sign=-1.0)

        return cls(F=F, fz=fz, fzb=fzb, inverse=inv)


def distortion(F: DiffeoMap) -> np.ndarray:
    """Pointwise distortion |DF|_op^2 / J_F; equals 1 exactly for conformal maps."""
    J = F.jacobian()
    if np.any(J <= 0):
        i, j = np.argwhere(J <= 0)[0]
        raise ValueError(f"Jacobian <= 0 at cell ({i}, {j})")
    op = (np.abs(F.fz) + np.abs(F.fzb)) ** 2   # largest singular value squared
    return op / J


def pushforward(sigma: ConductivityTensor, F: DiffeoMap,
                target_grid: GridSpec | None = None) -> ConductivityTensor:
    """Transform sigma by the map F: (DF sigma DF^t / J_F) at F^{-1}(y).

    Determinant invariance det(F_* sigma)(F(x)) = det sigma(x) holds
    exactly because J is computed from the same interpolated derivatives.
    """
    grid = target_grid or sigma.grid
    Y = grid.points()
    X = F.invert(Y)
    fz, fzb = F.derivs_at(X)
    a11, a12, a21, a22 = _df_matrix(fz, fzb)
    J = a11 * a22 - a12 * a21
    if np.any(J <= 0):
        i, j = np.argwhere(J <= 0)[0]
        raise ValueError(f"push-forward Jacobian <= 0 at target cell ({i}, {j})")
    s11, s12, s22 = sigma.entries_at(X)
    t11 = (a11 * (s11 * a11 + s12 * a12) + a12 * (s12 * a11 + s22 * a12)) / J
    t12 = (a11 * (s11 * a21 + s12 * a22) + a12 * (s12 * a21 + s22 * a22)) / J
    t22 = (a21 * (s11 * a21 + s12 * a22) + a22 * (s12 * a21 + s22 * a22)) / J

    ev = None
    if sigma.evaluator is not None and F.analytic is not None and F.analytic.inverse:
        base, amap = sigma.evaluator, F.analytic

        def ev(z):
            x = amap.inverse(np.asarray(z, dtype=complex))
            gz, gzb = amap.fz(x), amap.fzb(x)
            b11, b12, b21, b22 = _df_matrix(gz, gzb)
            Jx = b11 * b22 - b12 * b21
            u11, u12, u22 = base(x)
            return ((b11 * (u11 * b11 + u12 * b12) + b12 * (u12 * b11 + u22 * b12)) / Jx,
                    (b11 * (u11 * b21 + u12 * b22) + b12 * (u12 * b21 + u22 * b22)) / Jx,
                    (b21 * (u11 * b21 + u12 * b22) + b22 * (u12 * b21 + u22 * b22)) / Jx)

    return ConductivityTensor.from_fields(grid, t11, t12, t22, evaluator=ev)
