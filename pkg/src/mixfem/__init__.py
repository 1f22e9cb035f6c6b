"""Finite elements on meshes of mixed dimension.

Submeshes carry entity maps to their parent; forms over a tuple of function
spaces split into blocks that are assembled one by one, including couplings
between a mesh and the mesh of its facets.
"""

from .assembly import (QuadraturePlan, Star, apply_bcs, assemble_block, assemble_block_codim1,
                       assemble_block_same_dim, assemble_exterior_facet, assemble_local_tensor,
                       assemble_matrix, assemble_scalar, assemble_system, assemble_vector,
                       build_stars, dump_blocks, stars)
from .element import (QuadratureRule, ReferenceElement, facet_embedding, quadrature_rule)
from .errors import *  # noqa: F401,F403
from .forms import (AnalyticCoefficient, Argument, Coefficient, Constant, Form, Measure,
                    SpatialCoordinate, TestFunction, TestFunctions, TrialFunction,
                    TrialFunctions, check, div, dot, estimate_degree, extract_blocks,
                    format_form, grad, inner, mixed_arguments, validate)
from .linalg import (BlockNestMatrix, BlockVector, CsrMatrix, convert_to_monolithic,
                     read_matrix_market, solve_direct, solve_krylov, write_matrix_market)
from .mesh import (Mesh, MeshFunction, mark_entities, unit_cube_mesh, unit_interval_mesh,
                   unit_square_mesh)
from .meshview import ABSENT, MeshViewMapping, build_mapping, create_submesh
from .space import (DirichletBC, DofMap, Function, FunctionSpace, MixedFunctionSpace,
                    build_function_space, collect_bc_dofs, interpolate, transfer_cell_dofs)

__version__ = "0.1.0"
