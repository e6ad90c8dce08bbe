"""Quantized pairings, localization diagnostics and Fredholm indices on Delone patches."""

__version__ = "0.1.0"

from .exceptions import *  # noqa: F401,F403
from .pattern import (Geometry, PointPattern, DisorderField, HONEYCOMB_SPACING, build_honeycomb,
                      build_honeycomb_disk, build_chain, build_square, build_amorphous,
                      sample_disorder, minimal_displacement, covering_radius, min_pair_distance)
from .models import (SiteBasis, HamiltonianMatrix, CoefficientSpec, build_haldane, build_chiral_wire,
                     chirality_operator, build_amorphous_magnetic, check_spec, build_from_spec)
from .spectral import (EigenDecomposition, FermiProjection, ChiralUnitary, diagonalize,
                       fermi_projection, chiral_flatten)
from .invariants import (DerivationKernel, PairingResult, derive, trace_per_volume, chern_pairing,
                         winding_pairing, window_mask)
from .localization import (LyapunovResult, SpectralStatistics, lyapunov_analytic, lyapunov_birkhoff,
                           level_statistics, unfold_spectrum, sample_gue_spectrum, sample_poisson_levels)
from .index_theorem import (CliffordRep, DiracOperator, FredholmResult, IdentityEstimate, build_clifford,
                            build_dirac, fredholm_index, connes_chern, geometric_trace,
                            geometric_identity_continuum, geometric_identity_delone, identity_rhs)
from .manybody import (FockBasis, ManyBodyOperator, build_fock_basis, represent, number_operator,
                       position_operator, mb_derive, current_operator, mb_trace_per_volume,
                       mb_chern_pairing, wedge_projection, sector_projection)
