"""Named checks over corpus instances, and the verify / search / report drivers.

Every check returns a :class:`CheckResult` with status ``pass``, ``fail`` or
``skipped`` and a short witness string (no spaces).  Randomness inside a check
is derived from the instance seed and the check name, so a report body is a
pure function of ``(instance, seed, checks)``.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .corpus import (Instance, SITE_KINDS, RING_KINDS, gauge_complex, generate, random_gauge,
                     random_invertible)
from .deform import (BudgetExceeded, check_part_i, check_part_ii, check_part_iii, def_isomorphic,
                     difference_class, gabber_obstruction, lift_exists, line_obstruction,
                     obstruction_cocycle, random_combination, search_space, strict_cocycles, torsor_act)
from .detline import (SplitSES, alternating_det, det_complex, det_iso, det_of_ses, pic_mul, pic_symmetry)
from .ring import FiniteRing, NotLocal, cyclic, elementary_reduce, k1_class, rmatmul, rzeros
from .site import (FreeSheafComplex, LineBundle, PosetSite, direct_sum_complexes, sheaf_cohomology,
                   structure_sheaf)
from .trace import ext_trace, filtered_trace_check, nerve_class, random_filtered_map
from .zn import TooLarge

STATUSES = ("pass", "fail", "skipped")


@dataclass(frozen=True)
class CheckResult:
    status: str
    witness: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if any(c.isspace() for c in self.witness):
            raise ValueError("witness must not contain whitespace")


def passed(witness: str = "") -> CheckResult:
    return CheckResult("pass", witness)


def failed(witness: str = "") -> CheckResult:
    return CheckResult("fail", witness)


def _token(text: str) -> str:
    return "-".join(text.replace(",", " ").split())


def skipped(reason: str) -> CheckResult:
    return CheckResult("skipped", "reason=" + _token(reason))


def _cls(c) -> str:
    """Compact rendering of a class as its coordinates in the invariant-factor decomposition."""
    return "(" + ",".join(str(int(v)) for v in c.classify()) + ")"


@dataclass
class Config:
    seed: int = 0
    budget: int = 2 ** 16
    samples: int = 10
    k1_matrices: int = 100
    pic_range: int = 3
    max_elements: int = 512


def check_rng(inst: Instance, name: str, cfg: Config | None = None) -> np.random.Generator:
    seed = cfg.seed if cfg is not None else 0
    return np.random.default_rng([seed, inst.seed, zlib.crc32(inst.id.encode()), zlib.crc32(name.encode())])


# -- deformation checks --------------------------------------------------------------------------

def _lift(inst: Instance, cfg: Config):
    """A closed deformation, or ``None``; cached on the instance."""
    cache = inst.__dict__.setdefault("_lift_cache", {})
    if "rep" not in cache:
        res = lift_exists(inst.ext, inst.E, budget=cfg.budget, method="structured")
        cache["rep"] = res.rep
    return cache["rep"]


def check_main_i(inst: Instance, cfg: Config) -> CheckResult:
    out = check_part_i(inst.ext, inst.E, check_rng(inst, "MAIN-i", cfg))
    wit = "" if out["lhs_zero"] else "lhs=" + _cls(out["lhs"])
    if not out["ok"]:
        return failed(f"lhs={_cls(out['lhs'])},rhs={_cls(out['rhs'])}")
    return passed(wit)


def check_main_ii(inst: Instance, cfg: Config) -> CheckResult:
    rep = _lift(inst, cfg)
    if rep is None:
        return skipped("no deformation exists")
    out = check_part_ii(rep, cfg.samples, check_rng(inst, "MAIN-ii", cfg))
    wit = f"nonzero_traces={out['nonzero_traces']}/{out['samples']}"
    return passed(wit) if out["ok"] else failed(wit)


def check_main_iii(inst: Instance, cfg: Config) -> CheckResult:
    rep = _lift(inst, cfg)
    if rep is None:
        return skipped("no deformation exists")
    out = check_part_iii(rep, cfg.samples, check_rng(inst, "MAIN-iii", cfg))
    if out["ok"] is None:
        return skipped(out["reason"])
    wit = f"nonzero_traces={out['nonzero_traces']}/{out['samples']}"
    return passed(wit) if out["ok"] else failed(wit)


def check_oracle_eq(inst: Instance, cfg: Config) -> CheckResult:
    rng = check_rng(inst, "ORACLE-EQ", cfg)
    omega = obstruction_cocycle(inst.ext, inst.E, rng=rng)
    o = gabber_obstruction(inst.ext, inst.E, rng=rng)
    if not omega.same_class(o):
        return failed(f"omega={_cls(omega)},gabber={_cls(o)}")
    return passed("" if omega.is_zero() else "class=" + _cls(omega))


def check_vanish(inst: Instance, cfg: Config) -> CheckResult:
    """Obstruction class zero iff an exhaustive search over all lifts finds a complex."""
    size = search_space(inst.ext, inst.E)
    limit = cfg.budget if inst.site.n == 1 else min(cfg.budget, 2 ** 12)
    if size > limit:
        return skipped(f"search space {size} exceeds {limit}")
    try:
        res = lift_exists(inst.ext, inst.E, budget=limit, method="exhaustive")
    except BudgetExceeded as exc:
        return skipped(str(exc))
    zero = obstruction_cocycle(inst.ext, inst.E, rng=check_rng(inst, "VANISH", cfg)).is_zero()
    wit = f"space={size},lift={'yes' if res.exists else 'no'}"
    return passed(wit) if zero == bool(res.exists) else failed(wit)


def check_torsor(inst: Instance, cfg: Config) -> CheckResult:
    rep = _lift(inst, cfg)
    if rep is None:
        return skipped("no deformation exists")
    ext, E = inst.ext, inst.E
    T = ext.total(E)
    rng = check_rng(inst, "TORSOR", cfg)
    gens = strict_cocycles(T, 1, (0, 1))
    for _ in range(3):
        a = random_combination(T, 1, gens, rng)
        b = random_combination(T, 1, gens, rng)
        ra = torsor_act(a, rep)
        if not ra.is_closed():
            return failed("action-not-closed")
        diff = difference_class(rep, ra)
        if not np.array_equal(T.group(1).reduce(diff.cochain), T.group(1).reduce(a)):
            return failed("difference-not-exact")
        if def_isomorphic(torsor_act(T.group(1).reduce(a + b), rep), torsor_act(a, torsor_act(b, rep))) is None:
            return failed("action-not-additive")
    return passed()


def check_filter_add(inst: Instance, cfg: Config) -> CheckResult:
    F = inst.filtration
    if F is None:
        return skipped("no filtration")
    ext = inst.ext
    fm = random_filtered_map(F, ext.K, check_rng(inst, "FILTER-ADD", cfg))
    lhs, rhs, equal = filtered_trace_check(fm)
    if not equal:
        return failed(f"endo:lhs={_cls(lhs)},rhs={_cls(rhs)}")
    # the same additivity for obstruction classes of the graded pieces
    rng = check_rng(inst, "FILTER-ADD/omega", cfg)
    total = ext_trace(ext.total(inst.E), ext.K, obstruction_cocycle(ext, inst.E, rng=rng).cochain, 2)
    parts = 0
    for i in F.steps():
        G, _ = F.graded(i)
        parts = parts + ext_trace(ext.total(G), ext.K, obstruction_cocycle(ext, G, rng=rng).cochain, 2)
    a = nerve_class(inst.site, ext.K, 2, total)
    b = nerve_class(inst.site, ext.K, 2, parts)
    if not a.same_class(b):
        return failed(f"omega:lhs={_cls(a)},rhs={_cls(b)}")
    return passed(f"steps={len(F.steps())}")


def _lines(inst: Instance) -> list[LineBundle]:
    return list(inst.lines) + [det_complex(inst.E).line]


def check_line_add(inst: Instance, cfg: Config) -> CheckResult:
    ext = inst.ext
    rng = check_rng(inst, "LINE-ADD", cfg)
    Ls = _lines(inst)
    obs = [line_obstruction(ext, L, rng) for L in Ls]
    for i in range(len(Ls)):
        for j in range(i, len(Ls)):
            both = line_obstruction(ext, Ls[i].tensor(Ls[j]), rng)
            if not both.same_class(obs[i] + obs[j]):
                return failed(f"pair=({i},{j})")
    return passed(f"pairs={len(Ls) * (len(Ls) + 1) // 2}")


# -- Picard groupoid and determinant functor ---------------------------------------------------------

def lines_complex(site: PosetSite, parts, lo: int = 0, hi: int = 0) -> FreeSheafComplex:
    """Zero-differential complex with one basis vector per ``(line, degree)`` in ``parts``."""
    lo = min([lo] + [n for _, n in parts])
    hi = max([hi] + [n for _, n in parts])
    degs = range(lo, hi + 1)
    by_deg = {n: [L for L, m in parts if m == n] for n in degs}
    ranks = tuple(tuple(len(by_deg[n]) for n in degs) for _ in range(site.n))
    d = {p: [rzeros(site.ring(p), len(by_deg[n + 1]), len(by_deg[n])) for n in range(lo, hi)]
         for p in range(site.n)}
    rho = {}
    for p, q in site.poset.pairs:
        R = site.ring(q)
        mats = []
        for n in degs:
            M = rzeros(R, len(by_deg[n]), len(by_deg[n]))
            for j, L in enumerate(by_deg[n]):
                M[j, j] = L.u(p, q)
            mats.append(M)
        rho[(p, q)] = mats
    return FreeSheafComplex(site, lo, ranks, d, rho)


def complex_with_det(site: PosetSite, L: LineBundle, r: int, lo: int = 0, hi: int = 0) -> FreeSheafComplex:
    """A complex whose determinant is ``(r, L)``: ``L`` and trivial lines in degree 0 for
    ``r > 0``, their duals in degree 1 for ``r < 0``, and ``L (+) O[-1]`` for ``r = 0``."""
    O = LineBundle.trivial(site)
    if r > 0:
        parts = [(L, 0)] + [(O, 0)] * (r - 1)
    elif r < 0:
        parts = [(L.dual(), 1)] + [(O, 1)] * (-r - 1)
    else:
        parts = [(L, 0), (O, 1)]
    return lines_complex(site, parts, lo, hi)


def _same_line(site: PosetSite, units: dict, L: LineBundle) -> bool:
    return all(site.ring(q).eq(units[(p, q)], L.u(p, q)) for p, q in site.poset.pairs)


def _pic_pairs(inst: Instance, cfg: Config) -> CheckResult | None:
    S = inst.site
    Ls = _lines(inst)[:2]
    L, M = Ls[0], Ls[-1]
    rng_ = range(-cfg.pic_range, cfg.pic_range + 1)
    for r in rng_:
        Er = complex_with_det(S, L, r)
        a = det_complex(Er)
        for s in rng_:
            Es = complex_with_det(S, M, s)
            b = det_complex(Es)
            sym = pic_symmetry(a, b)
            ok, why = sym.check()
            if not ok:
                return failed(f"symmetry:r={r},s={s}")
            swap = list(range(abs(s), abs(s) + abs(r))) + list(range(abs(s)))
            want = oracle.permutation_sign(swap)
            for p in range(S.n):
                if not S.ring(p).eq(sym.scalars[p], S.ring(p).scalar(want)):
                    return failed(f"sign:r={r},s={s}")
            if not sym.compose(pic_symmetry(b, a)).is_identity_scalar():
                return failed(f"involution:r={r},s={s}")
            prod = pic_mul(a, b)
            lo, ranks, rho = oracle.tensor_restrictions(S, Er, Es)
            units = {pq: alternating_det(S.ring(pq[1]), rho[pq], lo) for pq in S.poset.pairs}
            chi = {sum((-1) ** (lo + i) * rk for i, rk in enumerate(ranks[p])) for p in range(S.n)}
            if chi != set(prod.rank) or not _same_line(S, units, prod.line):
                return failed(f"mul:r={r},s={s}")
    return None


def _ses_checks(inst: Instance, cfg: Config) -> CheckResult | None:
    """Split sequences ``A -> A+B+C`` filtered two ways, before and after a change of bases."""
    S = inst.site
    rng = check_rng(inst, "PIC-RING/ses", cfg)
    Ls = _lines(inst)
    A = complex_with_det(S, Ls[0], 1, 0, 1)
    B = complex_with_det(S, Ls[-1], 0, 0, 1)
    C = complex_with_det(S, Ls[0].tensor(Ls[-1]), 2, 0, 1)
    AB, BC = direct_sum_complexes([A, B]), direct_sum_complexes([B, C])
    ABC = direct_sum_complexes([A, B, C])

    def incl(big, offset, small):
        return {p: [_block_incl(S.ring(p), big.rank(p, n), offset(p, n), small.rank(p, n)) for n in big.degrees()]
                for p in range(S.n)}

    g = random_gauge(ABC, rng)
    gABC = gauge_complex(ABC, g)

    def twist(m):
        return {p: [rmatmul(S.ring(p), g[p][i], m[p][i]) for i in range(len(m[p]))] for p in range(S.n)}

    def ses(sub, quot, big, i, s):
        out = SplitSES(sub, big, quot, i, s)
        iso = det_of_ses(out)
        ok, why = iso.check()
        if not ok:
            raise ValueError(why)
        return iso

    try:
        zero = lambda p, n: 0  # noqa: E731
        # A -> ABC -> BC and B -> BC -> C
        s1 = ses(A, BC, gABC, twist(incl(ABC, zero, A)), twist(incl(ABC, lambda p, n: A.rank(p, n), BC)))
        s2 = ses(B, C, BC, incl(BC, zero, B), incl(BC, lambda p, n: B.rank(p, n), C))
        # AB -> ABC -> C and A -> AB -> B
        s3 = ses(AB, C, gABC, twist(incl(ABC, zero, AB)), twist(incl(ABC, lambda p, n: AB.rank(p, n), C)))
        s4 = ses(A, B, AB, incl(AB, zero, A), incl(AB, lambda p, n: A.rank(p, n), B))
    except ValueError as exc:
        return failed("ses:" + _token(str(exc)))
    # both composites det A + det B + det C -> det(gABC) agree pointwise
    for p in range(S.n):
        R = S.ring(p)
        one = R.mul(s1.scalars[p], s2.scalars[p])
        two = R.mul(s3.scalars[p], s4.scalars[p])
        if not R.eq(one, two):
            return failed(f"associativity:p={p}")
    # compatibility with the change of bases
    plain = ses(AB, C, ABC, incl(ABC, zero, AB), incl(ABC, lambda p, n: AB.rank(p, n), C))
    via = det_iso(ABC, gABC, g).compose(plain)
    if not all(S.ring(p).eq(via.scalars[p], s3.scalars[p]) for p in range(S.n)):
        return failed("gauge-compatibility")
    return None


def _block_incl(R: FiniteRing, big: int, offset: int, small: int) -> np.ndarray:
    M = rzeros(R, big, small)
    for j in range(small):
        M[offset + j, j] = R.one_vec
    return M


def check_pic_ring(inst: Instance, cfg: Config) -> CheckResult:
    res = _pic_pairs(inst, cfg) or _ses_checks(inst, cfg)
    return res or passed(f"range={cfg.pic_range}")


# -- ring and site checks ---------------------------------------------------------------------------

_K1_CACHE: dict = {}
_COHOM_CACHE: dict = {}


def _k1_ring(R: FiniteRing, cfg: Config) -> CheckResult:
    key = (R.orders, R.table.tobytes(), cfg.k1_matrices)
    if key in _K1_CACHE:
        return _K1_CACHE[key]
    local, _ = R.is_local()
    if not local:
        res = skipped("ring is not local")
    elif R.size > cfg.max_elements:
        res = skipped(f"ring has {R.size} elements")
    else:
        rng = np.random.default_rng([zlib.crc32(repr(R.orders).encode()), zlib.crc32(R.table.tobytes())])
        res = passed(f"matrices={cfg.k1_matrices}")
        for t in range(cfg.k1_matrices):
            m = random_invertible(R, 1 + t % 4, rng)
            fac = elementary_reduce(R, m)
            if not np.array_equal(fac.product(), R.reduce(m)):
                res = failed(f"factorization:matrix={t}")
                break
            if not R.eq(k1_class(R, m), oracle.leibniz_det(R, m)):
                res = failed(f"determinant:matrix={t}")
                break
    _K1_CACHE[key] = res
    return res


def check_k1_local(inst: Instance, cfg: Config) -> CheckResult:
    rings = {}
    for site in (inst.ext.big, inst.ext.small):
        for p in range(site.n):
            R = site.ring(p)
            rings[(R.orders, R.table.tobytes())] = R
    results = [_k1_ring(R, cfg) for R in rings.values()]
    for r in results:
        if r.status == "fail":
            return r
    if all(r.status == "skipped" for r in results):
        return results[0]
    return passed(f"rings={sum(r.status == 'pass' for r in results)}")


def cohomology_matches(poset, m: int) -> tuple[bool, list, list]:
    S = PosetSite.constant(poset, cyclic(m))
    O = structure_sheaf(S)
    want = oracle.simplicial_cohomology(poset.leq, m)
    got = [sheaf_cohomology(S, O, i).group.invariants() for i in range(len(want))]
    extra = sheaf_cohomology(S, O, len(want)).group.size == 1
    return got == want and extra, got, want


def check_cohom_simplicial(inst: Instance, cfg: Config) -> CheckResult:
    P = inst.site.poset
    key = P.leq.tobytes() + bytes([P.n])
    if key not in _COHOM_CACHE:
        res = passed("m=2,3,4")
        for m in (2, 3, 4):
            ok, got, want = cohomology_matches(P, m)
            if not ok:
                res = failed(f"m={m}")
                break
        _COHOM_CACHE[key] = res
    return _COHOM_CACHE[key]


CHECKS = {
    "MAIN-i": check_main_i,
    "MAIN-ii": check_main_ii,
    "MAIN-iii": check_main_iii,
    "ORACLE-EQ": check_oracle_eq,
    "VANISH": check_vanish,
    "TORSOR": check_torsor,
    "FILTER-ADD": check_filter_add,
    "PIC-RING": check_pic_ring,
    "K1-LOCAL": check_k1_local,
    "COHOM-SIMPLICIAL": check_cohom_simplicial,
    "LINE-ADD": check_line_add,
}


# -- reports --------------------------------------------------------------------------------------

@dataclass
class Report:
    """``results[(check, instance id)] = CheckResult``; timings are kept apart from the body."""

    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add(self, name: str, iid: str, res: CheckResult, seconds: float = 0.0):
        self.results[(name, iid)] = res
        self.timings[name] = self.timings.get(name, 0.0) + seconds

    def merge(self, other: "Report") -> "Report":
        self.results.update(other.results)
        for k, v in other.timings.items():
            self.timings[k] = self.timings.get(k, 0.0) + v
        self.notes.extend(other.notes)
        return self

    def lines(self) -> list[str]:
        out = []
        for (name, iid), r in sorted(self.results.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            out.append(" ".join(x for x in ("CHECK", name, iid, r.status, r.witness) if x))
        return out

    def body(self) -> str:
        return "\n".join(self.lines() + sorted(self.notes)) + "\n"

    def text(self) -> str:
        times = [f"TIME {k} {v:.3f}" for k, v in sorted(self.timings.items())]
        return self.body() + "\n".join(times) + ("\n" if times else "")

    def count(self, status: str, name: str | None = None) -> int:
        return sum(r.status == status and (name is None or k[0] == name) for k, r in self.results.items())

    def failures(self) -> list:
        return [k for k, r in self.results.items() if r.status == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failures()


def parse_report(text: str) -> Report:
    rep = Report()
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "CHECK":
            rep.results[(parts[1], parts[2])] = CheckResult(parts[3], parts[4] if len(parts) > 4 else "")
        elif parts[0] == "TIME":
            rep.timings[parts[1]] = float(parts[2])
        else:
            rep.notes.append(line)
    return rep


def verify(inst: Instance, checks=None, cfg: Config | None = None) -> Report:
    cfg = cfg or Config()
    names = list(CHECKS) if checks is None else list(checks)
    rep = Report()
    ok, why = inst.check()
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}")
        t0 = time.perf_counter()
        if not ok:
            res = failed("invalid-instance:" + _token(str(why)))
        else:
            try:
                res = CHECKS[name](inst, cfg)
            except TooLarge as exc:
                res = skipped(str(exc))
            except NotLocal as exc:
                res = skipped(str(exc))
        rep.add(name, inst.id, res, time.perf_counter() - t0)
    return rep


def verify_all(instances, checks=None, cfg: Config | None = None) -> Report:
    rep = Report()
    for inst in instances:
        rep.merge(verify(inst, checks, cfg))
    return rep


# -- witness search -----------------------------------------------------------------------------------

@dataclass
class SearchResult:
    instance: Instance | None
    seed: int
    tried: int
    lhs_nonzero: bool = False

    @property
    def found(self) -> bool:
        return self.instance is not None


def search(target: str = "nonzero-obstruction", budget: int = 200, seed: int = 0,
           site_kinds=None, ring_kinds=None) -> SearchResult:
    """Randomized search over generated instances.

    ``nonzero-obstruction`` looks for a nonzero obstruction class; ``nonzero-trace``
    additionally asks its trace to be nonzero.  At most ``budget`` instances are
    generated, in an order fixed by ``seed``.
    """
    if target not in ("nonzero-obstruction", "nonzero-trace"):
        raise ValueError(f"unknown search target {target!r}")
    site_kinds = list(site_kinds or SITE_KINDS)
    ring_kinds = list(ring_kinds or RING_KINDS)
    rng = np.random.default_rng(seed)
    for t in range(budget):
        sk = site_kinds[int(rng.integers(len(site_kinds)))]
        rk = ring_kinds[int(rng.integers(len(ring_kinds)))]
        inst = generate(sk, rk, int(rng.integers(2 ** 31)))
        inst.id = f"witness-{inst.id}"
        out = check_part_i(inst.ext, inst.E, check_rng(inst, "search", Config(seed=seed)))
        if out["omega_zero"]:
            continue
        if target == "nonzero-trace" and out["lhs_zero"]:
            continue
        inst.expected = {"omega_zero": False, "lhs_zero": bool(out["lhs_zero"])}
        return SearchResult(inst, seed, t + 1, not out["lhs_zero"])
    return SearchResult(None, seed, budget)


def witness_check(res: SearchResult, cfg: Config | None = None) -> Report:
    """The WITNESS-SEARCH record: MAIN-i on the witness, or an explicit skip."""
    rep = Report()
    iid = f"search-seed-{res.seed}"
    if not res.found:
        rep.add("WITNESS-SEARCH", iid, skipped(f"none found in {res.tried} instances"))
        return rep
    main = check_main_i(res.instance, cfg or Config())
    status = main.status
    if status == "pass" and res.lhs_nonzero and not main.witness.startswith("lhs="):
        status = "fail"
    rep.add("WITNESS-SEARCH", iid, CheckResult(status, f"witness={res.instance.id}"))
    return rep


# -- corpus directories ---------------------------------------------------------------------------------

def corpus_dirs(root) -> dict:
    root = Path(root)
    out = {k: root / k for k in ("instances", "witnesses", "reports")}
    for p in out.values():
        p.mkdir(parents=True, exist_ok=True)
    return out


def save_instance(inst: Instance, directory) -> Path:
    from .serialize import dumps
    path = Path(directory) / f"{inst.id}.pd"
    path.write_text(dumps(inst), encoding="utf-8")
    return path


def load_instances(directory) -> list[Instance]:
    from .serialize import load_one
    return [load_one(p.read_text(encoding="utf-8"), Instance) for p in sorted(Path(directory).glob("*.pd"))]
