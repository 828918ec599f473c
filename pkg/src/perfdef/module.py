"""Finitely presented modules over finite rings.

A module is stored as a diagonal abelian group together with the matrices
by which the additive generators of the ring act on it.  Presentations by
generators and relations are converted to this form on construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import FiniteRing, RingHom
from .zn import AbGroup, LinearMap, Quotient, as_cols, subgroup


@dataclass(frozen=True, eq=False)
class FpModule:
    ring: FiniteRing
    group: AbGroup
    action: np.ndarray  # (ring.k, g, g), action[a] = matrix of e_a
    free_rank: int | None = None

    def __post_init__(self):
        g = self.group.rank
        A = np.asarray(self.action, dtype=np.int64).reshape(self.ring.k, g, g)
        A = self.group.reduce(A.transpose(1, 0, 2)).transpose(1, 0, 2) if g else A
        A.flags.writeable = False
        object.__setattr__(self, "action", A)

    def __eq__(self, other):
        return (isinstance(other, FpModule) and self.ring == other.ring
                and self.group == other.group and np.array_equal(self.action, other.action))

    def __hash__(self):
        return hash((self.ring, self.group, self.action.tobytes()))

    def __repr__(self):
        if self.free_rank is not None:
            return f"FpModule({self.ring.name}^{self.free_rank})"
        return f"FpModule({self.ring.name}, {self.group.orders})"

    @property
    def rank(self) -> int:
        """Number of cyclic coordinates of the underlying group."""
        return self.group.rank

    @property
    def size(self) -> int:
        return self.group.size

    @property
    def is_free(self) -> bool:
        return self.free_rank is not None

    def reduce(self, x) -> np.ndarray:
        return self.group.reduce(x)

    def act(self, x) -> np.ndarray:
        """Group matrix of multiplication by the ring element ``x``."""
        x = np.asarray(x, dtype=np.int64)
        return self.group.reduce(np.einsum("a,aij->ij", x, self.action))

    def act_many(self, X) -> np.ndarray:
        """``act`` over leading axes of ``X`` (coordinates last); returns ``(..., g, g)``."""
        X = np.asarray(X, dtype=np.int64)
        out = np.einsum("...a,aij->...ij", X, self.action)
        return out % self.group.order_array[:, None] if self.rank else out

    def scale(self, x, v) -> np.ndarray:
        return self.group.reduce(self.act(x) @ np.asarray(v, dtype=np.int64))

    def check(self) -> tuple[bool, str | None]:
        R, G = self.ring, self.group
        for a in range(R.k):
            if not G.is_hom(self.action[a], G):
                return False, f"generator {a} does not act additively"
        if not np.array_equal(self.act(R.one_vec), G.reduce(np.eye(G.rank, dtype=np.int64))):
            return False, "1 does not act as the identity"
        for a in range(R.k):
            for b in range(R.k):
                lhs = G.reduce(self.action[a] @ self.action[b])
                if not np.array_equal(lhs, self.act(R.table[a, b])):
                    return False, f"action not multiplicative on generators {(a, b)}"
        return True, None

    def is_linear(self, M, dst: "FpModule") -> bool:
        """``M`` is an additive map ``self -> dst`` commuting with the action."""
        M = np.asarray(M, dtype=np.int64).reshape(dst.rank, self.rank)
        if not self.group.is_hom(M, dst.group):
            return False
        return all(np.array_equal(dst.reduce(M @ self.action[a]), dst.reduce(dst.action[a] @ M))
                   for a in range(self.ring.k))

    def elements(self, bound=None):
        return self.group.elements() if bound is None else self.group.elements(bound)

    # -- constructions ------------------------------------------------------

    def restrict_scalars(self, phi: RingHom) -> "FpModule":
        """View as a module over ``phi.source`` through ``phi``."""
        if phi.target != self.ring:
            raise ValueError("ring mismatch")
        A = np.einsum("ca,cij->aij", phi.images, self.action)
        return FpModule(phi.source, self.group, A)

    def descend(self, phi: RingHom) -> "FpModule":
        """Module over ``phi.target`` when ``ker(phi)`` acts by zero.

        ``phi`` must be surjective; each generator of the target acts through
        any preimage, which is independent of the choice when the kernel acts
        trivially (checked).
        """
        if phi.source != self.ring:
            raise ValueError("ring mismatch")
        T = phi.target
        _, Kgens = phi.kernel_gens
        for col in Kgens.T:
            if self.group.reduce(self.act(col)).any():
                raise ValueError("kernel does not act trivially")
        lifts = phi.lift(np.eye(T.k, dtype=np.int64))
        A = np.stack([self.act(lifts[a]) for a in range(T.k)]) if T.k else np.zeros((0, self.rank, self.rank))
        return FpModule(T, self.group, A)

    def submodule(self, X) -> tuple["FpModule", np.ndarray]:
        """Submodule generated by the columns of ``X``; returns ``(S, inclusion)``."""
        X = as_cols(X, self.rank)
        gens = np.concatenate([self.group.reduce(self.action[a] @ X) for a in range(self.ring.k)], axis=1) \
            if X.shape[1] else X
        S, G = subgroup(gens, self.group)
        incl = LinearMap(G, S, self.group)
        A = []
        for a in range(self.ring.k):
            Y, ok = incl.solve(self.action[a] @ G)
            assert ok.all()
            A.append(Y)
        A = np.stack(A) if A else np.zeros((0, S.rank, S.rank), dtype=np.int64)
        return FpModule(self.ring, S, A), G

    def quotient(self, X) -> tuple["FpModule", Quotient]:
        """Quotient by the submodule generated by the columns of ``X``."""
        X = as_cols(X, self.rank)
        gens = np.concatenate([self.group.reduce(self.action[a] @ X) for a in range(self.ring.k)], axis=1) \
            if X.shape[1] else X
        Q = Quotient(self.group, gens)
        A = np.stack([Q.group.reduce(Q.P @ self.action[a] @ Q.S) for a in range(self.ring.k)]) \
            if self.ring.k else np.zeros((0, Q.group.rank, Q.group.rank), dtype=np.int64)
        return FpModule(self.ring, Q.group, A), Q

    def direct_sum(self, other: "FpModule") -> "FpModule":
        return direct_sum([self, other])

    def power(self, r: int) -> "FpModule":
        return direct_sum([self] * r, ring=self.ring)


def zero_module(R: FiniteRing) -> FpModule:
    return FpModule(R, AbGroup(()), np.zeros((R.k, 0, 0), dtype=np.int64), free_rank=0)


def free(R: FiniteRing, r: int) -> FpModule:
    """``R^r``; coordinate ``j * k + b`` is generator ``e_b`` of copy ``j``."""
    k = R.k
    A = np.zeros((k, r * k, r * k), dtype=np.int64)
    for j in range(r):
        A[:, j * k:(j + 1) * k, j * k:(j + 1) * k] = R.gen_action
    return FpModule(R, AbGroup(R.orders * r), A, free_rank=r)


def direct_sum(mods, ring: FiniteRing | None = None) -> FpModule:
    mods = list(mods)
    R = ring if ring is not None else mods[0].ring
    if not mods:
        return zero_module(R)
    g = sum(M.rank for M in mods)
    A = np.zeros((R.k, g, g), dtype=np.int64)
    off = 0
    for M in mods:
        if M.ring != R:
            raise ValueError("ring mismatch")
        A[:, off:off + M.rank, off:off + M.rank] = M.action
        off += M.rank
    fr = sum(M.free_rank for M in mods) if all(M.is_free for M in mods) else None
    return FpModule(R, AbGroup.sum(M.group for M in mods), A, free_rank=fr)


def presented(R: FiniteRing, g: int, relations) -> FpModule:
    """``R^g`` modulo the columns of the ring matrix ``relations`` (``g x m x k``)."""
    rel = R.reduce(np.asarray(relations, dtype=np.int64).reshape(g, -1, R.k))
    F = free(R, g)
    X = rel.transpose(0, 2, 1).reshape(g * R.k, -1)
    M, _ = F.quotient(X)
    return M


def ideal(R: FiniteRing, gens) -> tuple[FpModule, np.ndarray]:
    """The ideal generated by ``gens`` as a submodule of ``R``."""
    X = np.asarray(gens, dtype=np.int64).reshape(-1, R.k).T
    return free(R, 1).submodule(X)


def ring_matrix_to_group(R: FiniteRing, A) -> np.ndarray:
    """Group matrix ``R^n -> R^m`` of a ring matrix ``A`` (``m x n x k``)."""
    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape[:2]
    k = R.k
    # block (i, j)[c, b] = (A[i, j] * e_b)_c
    blocks = np.einsum("ija,acb->icjb", A, R.gen_action)
    return (blocks.reshape(m * k, n * k) % np.tile(R._ord, m)[:, None]) if m and n \
        else np.zeros((m * k, n * k), dtype=np.int64)


def act_matrix(M: FpModule, A) -> np.ndarray:
    """Group matrix ``M^n -> M^m`` of a ring matrix ``A`` acting on ``M``-valued vectors."""
    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape[:2]
    g = M.rank
    if not (m and n and g):
        return np.zeros((m * g, n * g), dtype=np.int64)
    blocks = M.act_many(A)  # (m, n, g, g)
    out = blocks.transpose(0, 2, 1, 3).reshape(m * g, n * g)
    return out % np.tile(M.group.order_array, m)[:, None]


def linear_kernel(f, src: FpModule, dst: FpModule) -> tuple[FpModule, np.ndarray]:
    K, X = LinearMap(f, src.group, dst.group).kernel
    return src.submodule(X) if X.shape[1] else (zero_module(src.ring), X)


def linear_cokernel(f, src: FpModule, dst: FpModule) -> tuple[FpModule, Quotient]:
    return dst.quotient(np.asarray(f, dtype=np.int64).reshape(dst.rank, src.rank))


def linear_image(f, src: FpModule, dst: FpModule) -> tuple[FpModule, np.ndarray]:
    return dst.submodule(np.asarray(f, dtype=np.int64).reshape(dst.rank, src.rank))
