"""
Obstructions to lifting a complex
=================================

A complex over Z/4 always lifts entrywise to Z/8, but the lifted differentials
need not square to zero.  The failure is a class in Ext^2(E, E (x) K), computed
here in two independent ways, and it vanishes exactly when some lift works.
"""

import numpy as np

from perfdef.corpus import three_term_z2, z8_obstructed
from perfdef.deform import gabber_obstruction, lift_exists, obstruction_cocycle, search_space

# [Z/4 -2-> Z/4 -2-> Z/4] over Z/8 -> Z/4: every lift has d'd' = 4
inst = z8_obstructed()
omega = obstruction_cocycle(inst.ext, inst.E)
print("obstruction class of", inst.id, "=", omega.classify())

# the same class through an acyclic free resolution G -> E
o = gabber_obstruction(inst.ext, inst.E)
print("resolution route gives", o.classify(), "same class:", omega.same_class(o))

# the class does not depend on the entrywise lift
for seed in range(3):
    print("  lift seed", seed, obstruction_cocycle(inst.ext, inst.E, rng=np.random.default_rng(seed)).classify())

# an exhaustive search over every lift confirms that none is a complex
print("search space", search_space(inst.ext, inst.E), "->", lift_exists(inst.ext, inst.E, method="exhaustive").status)

# the exact three-term Z/2 complex lifts to Z/4
inst = three_term_z2()
res = lift_exists(inst.ext, inst.E, method="exhaustive")
print(inst.id, "class", obstruction_cocycle(inst.ext, inst.E).classify(), "lift", res.status)
for n in range(inst.E.lo, inst.E.hi):
    print("  d'^%d =" % n, res.rep.d(0, n)[..., 0].tolist())
