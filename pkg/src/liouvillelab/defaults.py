"""
Definition of global tolerances and defaults used throughout liouvillelab.
"""
import math

#: Case (I) threshold on |x*| / delta.
case_threshold = 10.0
#: Subcase threshold epsilon_0.
epsilon0 = 0.1

#: Relative slack allowed on Huber ratios at default resolution.
huber_tol = 0.02
#: Slack on the K-hat bounds a <= K-hat <= b.
khat_tol = 0.05
#: Fraction of radii trimmed at each end of a K-hat audit.
khat_trim = 0.02
#: Differential inequality tolerance, as a fraction of max F.
diff_tol = 1e-2

#: Minimum ratio r_max / r_min of a tail fit.
min_tail_ratio = 10.0
#: Minimum ratio r_max / r_min of a decay fit.
min_decay_ratio = 4.0

newton_tol = 1e-8
newton_max_iter = 50
newton_max_halvings = 30

#: Angular samples on circles.
n_angles = 720
#: Gauss points per fan triangle (angle, radius).
n_fan_angle = 6
n_fan_radius = 12

log_max_float = math.log(1.7976931348623157e308)
