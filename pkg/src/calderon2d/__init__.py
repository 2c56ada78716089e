"""Numerical workbench for the planar anisotropic Calderon problem.

Forward finite-element solvers and Dirichlet-to-Neumann maps on the
disc, quasiconformal flattening of anisotropic conductivities through
the Beltrami equation, complex-geometrical-optics probes, recovery of
the coordinate deformation from boundary data, and the half-plane /
exterior / partial-boundary application pipelines.
"""

from .grids import (AnnulusRegion, DiscRegion, GridSpec, HalfDiscRegion,
                    PolygonRegion, ScalarField, deposit_indicator)
from .fields import (AnalyticDiffeo, BeltramiData, ConductivityTensor,
                     DegenerateConductivityError, DiffeoMap, distortion,
                     ellipticity_constant, hat_sigma, mu1_from_sigma,
                     mu2_from_sigma, mu_from_nu, nu_from_mu, nu_to_sigma,
                     pushforward, sigma_to_nu)
from .beltrami import (CauchyBeurling, PrincipalSolution, beurling_apply,
                       cauchy_apply, invert_map, isotropize, isotropy_defect,
                       solve_linear_beltrami, solve_principal)
from .mesh import TriangularMesh, disc_mesh, half_disc_mesh
from .dtn import (BoundaryTrace, CauchyDataSet, DtnMatrix, DiscreteOperator,
                  cauchy_data, conjugate_solution, dtn_matrix,
                  hilbert_matrix, hilbert_transform, ntd_matrix,
                  quadratic_form, solve_dirichlet, transform_dtn)
from .cgo import (CgoSolution, ExteriorSolution, PhaseFunction,
                  boundary_deformation, extract_phase,
                  glue_interior_extension, recover_F_exterior,
                  recover_dtn_isotropic, solve_G_from_boundary_data,
                  solve_cgo)
from .domains import (CircleHomeomorphism, ConformalChart,
                      ReflectedConductivity, beurling_ahlfors_extension,
                      build_representative, cauchy_data_from_partial,
                      exterior_dtn, exterior_to_disc_solve,
                      halfplane_pipeline_dtn, halfplane_to_disc_dtn,
                      inversion_exterior_to_disc, mobius_halfplane_to_disc,
                      reflect_conductivity)
from .fieldio import load_sigma_spec, read_field, sigma_from_spec, write_field
from .config import RunConfig

__version__ = "0.1.0"
