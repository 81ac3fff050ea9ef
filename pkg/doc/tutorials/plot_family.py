"""
The explicit family and its rearrangement
=========================================
This tutorial follows the explicit family of piecewise bubbles: we check that
``sup + inf`` approaches its limiting bound, then rearrange one member and
look at the mass profile ``F(s)``.
"""
##################################################################
# Start by importing the required modules
import matplotlib.pyplot as plt
import numpy as np

from liouvillelab import BubbleParams, ConicalWeight, family_u, rearrange, supinf_combination
from liouvillelab.closed_form import supinf_bound
from liouvillelab.potential import family_potential
from liouvillelab.sample_data import family_field

##################################################################
# Member ``n`` of the family solves the equation on the unit disk with the
# potential equal to ``b`` near the cone point and ``a`` elsewhere. As ``n``
# grows the member concentrates at the origin.
alpha, a, b = -0.5, 1.0, 4.0
r = np.linspace(0, 1, 1001)

fig, ax = plt.subplots()
for n in [1, 3, 10, 30]:
    ax.plot(r, family_u(BubbleParams(alpha, a, b, n), r), label=f"n = {n}")
ax.set_xlabel("r")
ax.set_ylabel("u")
ax.legend()

##################################################################
# The combination ``sqrt(a/b) sup u + inf u`` increases with ``n`` towards
# ``(sqrt(a/b) + 1) log(8 (1 + alpha)^2 / b)``.
ns = np.geomspace(1, 1e6, 61)
comb = [supinf_combination(BubbleParams(alpha, a, b, n)) for n in ns]

fig, ax = plt.subplots()
ax.semilogx(ns, comb, label="sup + inf combination")
ax.axhline(supinf_bound(alpha, a, b), color="k", linestyle="--", label="limit")
ax.set_xlabel("n")
ax.legend()

##################################################################
# Now sample member ``n = 5`` on a grid and rearrange it with respect to
# the conical measure. The mass profile ``F(s)`` climbs to the total mass of
# the member.
p = BubbleParams(alpha, a, b, 5)
field = family_field(p, n=257)
profile = rearrange(field, ConicalWeight(alpha), K=family_potential(a, b, p.n))

fig, axs = plt.subplots(nrows=2, sharex=True)
axs[0].plot(profile.s, profile.v_star)
axs[0].set_ylabel("v*")
axs[1].plot(profile.s, profile.F)
axs[1].set_ylabel("F")
axs[1].set_xlabel("s")

plt.show()
