from liouvillelab.blowup import BlowupReport, analyze_blowup, blowup_scales, critical_radius, rescale
from liouvillelab.checks import huber_check, supinf_eval, supxinf_eval, suzuki_check
from liouvillelab.closed_form import BubbleParams, centered_bubble, family_u, limit_bubble, supinf_combination
from liouvillelab.core import ConicalWeight, Disk, GridField, RadialProfile, weighted_area, weighted_length
from liouvillelab.potential import ConstantPotential, RadialPotential, SampledPotential, family_potential
from liouvillelab.rearrangement import distribution_function, rearrange, superlevel_contours
from liouvillelab.solvers import Dirichlet2D, RadialIVP, solve_dirichlet, solve_radial
