"""
Determinants of deformations and the trace
==========================================

The determinant sends deformations of E to deformations of the line det(E).
Changing a deformation by a class alpha changes its determinant by the trace
of alpha, and the same holds for automorphisms and for obstructions.
"""

import numpy as np

from perfdef.corpus import make_ext, pseudo_circle_showcase
from perfdef.deform import (check_part_i, det_of_deformation, difference_class, lift_exists, line_alpha,
                            line_obstruction, random_combination, strict_cocycles, strict_iso_matrices,
                            torsor_act)
from perfdef.detline import alternating_det
from perfdef.site import POSETS, LineBundle, direct_sum_complexes, random_line_bundle
from perfdef.trace import ext_trace, nerve_class

rng = np.random.default_rng(0)

# rank-2 trivial bundle on the four-point circle, deformed from Z/3 to Z/9
inst = pseudo_circle_showcase()
ext, E = inst.ext, inst.E
rep = lift_exists(ext, E).rep
det0 = det_of_deformation(rep)
T = ext.total(E)
gens = strict_cocycles(T, 1, (0, 1))

for _ in range(4):
    alpha = random_combination(T, 1, gens, rng)
    beta = ext_trace(T, ext.K, alpha, 1)
    lhs = det_of_deformation(torsor_act(alpha, rep))
    rhs = torsor_act(line_alpha(ext, det0.base, beta), det0)
    print("trace in H^1:", nerve_class(ext.small, ext.K, 1, beta).classify(),
          " determinants agree:", difference_class(lhs, rhs).is_zero())

# automorphisms: det(1 + 3 diag(1, 0)) = 4 = 1 + 3 over Z/9
ext9 = make_ext(POSETS["point"](), "Zp2", 3)
E2 = direct_sum_complexes([LineBundle.trivial(ext9.small).as_complex(0)] * 2)
rep2 = lift_exists(ext9, E2).rep
T2 = ext9.total(E2)
three = ext9.to_K(0, np.array([3]))[0]
h = T2.assemble(0, {((0,), 0): np.array([[three, 0], [0, 0]])})
R = ext9.big.ring(0)
print("det(1 + h) =", R.key(alternating_det(R, strict_iso_matrices(rep2, h)[0], 0)),
      " 1 + tr(h) =", 1 + int(ext9.from_K(0, ext_trace(T2, ext9.K, h, 0))[0]))

# obstructions: the trace of the obstruction of E is the obstruction of det E
out = check_part_i(ext, E, rng)
print("obstruction traces agree:", out["ok"])

# obstructions of line bundles add under tensor product
ext2 = make_ext(POSETS["sphere6"](), "Zp2", 2)
L, M = random_line_bundle(ext2.small, rng), random_line_bundle(ext2.small, rng)
lhs = line_obstruction(ext2, L.tensor(M))
print("line obstructions add:", lhs.same_class(line_obstruction(ext2, L) + line_obstruction(ext2, M)))
