"""Line-oriented text format for corpus files.

A file starts with ``perfdef v1`` and holds named records::

    RING R0
    name Z/9
    orders 9
    one 1
    table 1
    END

Records refer to earlier records by name; integers are decimal and arrays
are written row-major after their shape.
"""

from __future__ import annotations

import ast

import numpy as np

from .corpus import Instance
from .deform import SquareZeroExt
from .ring import FiniteRing, RingHom
from .site import FreeSheafComplex, LineBundle, Poset, PosetSite
from .trace import FilteredComplex

HEADER = "perfdef v1"


class FormatError(ValueError):
    pass


def _ints(a) -> str:
    return " ".join(str(int(x)) for x in np.asarray(a).reshape(-1))


def _arr(a) -> str:
    a = np.asarray(a, dtype=np.int64)
    return f"{a.ndim} {_ints(a.shape)} {_ints(a)}".rstrip()


def _parse_arr(tokens: list[str]) -> np.ndarray:
    nd = int(tokens[0])
    shape = tuple(int(t) for t in tokens[1:1 + nd])
    vals = [int(t) for t in tokens[1 + nd:]]
    return np.array(vals, dtype=np.int64).reshape(shape)


class Writer:
    def __init__(self):
        self.lines = [HEADER]
        self.names: dict[int, str] = {}
        self.keep: list = []
        self.counts: dict[str, int] = {}
        self.ring_names: dict = {}

    def _name(self, prefix: str, obj) -> tuple[str, bool]:
        key = id(obj)
        if key in self.names:
            return self.names[key], False
        i = self.counts.get(prefix, 0)
        self.counts[prefix] = i + 1
        name = f"{prefix}{i}"
        self.names[key] = name
        self.keep.append(obj)
        return name, True

    def record(self, kind: str, name: str, fields: list[tuple[str, str]]):
        self.lines.append(f"{kind} {name}")
        for k, v in fields:
            self.lines.append(f"{k} {v}".rstrip())
        self.lines.append("END")

    def ring(self, R: FiniteRing) -> str:
        # equal rings built separately share one record
        k = key(R)
        if k in self.ring_names:
            return self.ring_names[k]
        name, _ = self._name("R", R)
        self.ring_names[k] = name
        self.record("RING", name, [("name", R.name), ("orders", _ints(R.orders)), ("one", _ints(R.one)),
                                   ("table", _arr(R.table))])
        return name

    def hom(self, h: RingHom) -> str:
        name, new = self._name("H", h)
        if new:
            s, t = self.ring(h.source), self.ring(h.target)
            self.record("RINGHOM", name, [("source", s), ("target", t), ("images", _arr(h.images))])
        return name

    def poset(self, P: Poset) -> str:
        name, new = self._name("P", P)
        if new:
            self.record("POSET", name, [("names", " ".join(P.names)), ("leq", _arr(P.leq.astype(np.int64)))])
        return name

    def site(self, S: PosetSite) -> str:
        name, new = self._name("S", S)
        if new:
            P = self.poset(S.poset)
            rings = [self.ring(R) for R in S.rings]
            homs = [(f"{p} {q}", self.hom(S.hom(p, q))) for p, q in S.poset.pairs]
            self.record("SITE", name, [("name", S.name), ("poset", P), ("rings", " ".join(rings))]
                        + [("hom", f"{pq} {h}") for pq, h in homs])
        return name

    def ext(self, X: SquareZeroExt) -> str:
        name, new = self._name("X", X)
        if new:
            b, s = self.site(X.big), self.site(X.small)
            fields = [("name", X.name), ("big", b), ("small", s), ("pi", " ".join(self.hom(h) for h in X.pi))]
            if X.section is not None:
                fields.append(("section", " ".join(self.hom(h) for h in X.section)))
            self.record("EXT", name, fields)
        return name

    def complex(self, E: FreeSheafComplex) -> str:
        name, new = self._name("E", E)
        if new:
            S = self.site(E.site)
            fields = [("site", S), ("lo", str(E.lo))]
            fields += [("ranks", f"{p} {_ints(E.ranks[p])}") for p in range(E.site.n)]
            for p in range(E.site.n):
                for i, m in enumerate(E.d[p]):
                    fields.append(("d", f"{p} {i} {_arr(m)}"))
            for (p, q), ms in E.rho.items():
                for i, m in enumerate(ms):
                    fields.append(("rho", f"{p} {q} {i} {_arr(m)}"))
            self.record("COMPLEX", name, fields)
        return name

    def line(self, L: LineBundle) -> str:
        name, new = self._name("L", L)
        if new:
            S = self.site(L.site)
            fields = [("site", S)] + [("u", f"{p} {q} {_ints(L.u(p, q))}") for p, q in L.site.poset.pairs]
            self.record("LINE", name, fields)
        return name

    def filtration(self, F: FilteredComplex) -> str:
        name, new = self._name("F", F)
        if new:
            E = self.complex(F.E)
            fields = [("complex", E)] + [("levels", f"{i} {_ints(lv)}".rstrip()) for i, lv in enumerate(F.levels)]
            self.record("FILTRATION", name, fields)
        return name

    def instance(self, inst: Instance) -> str:
        name, new = self._name("I", inst)
        if new:
            fields = [("id", inst.id), ("ext", self.ext(inst.ext)), ("complex", self.complex(inst.E)),
                      ("seed", str(inst.seed)), ("site_kind", inst.site_kind), ("ring_kind", inst.ring_kind)]
            if inst.filtration is not None:
                fields.append(("filtration", self.filtration(inst.filtration)))
            if inst.lines:
                fields.append(("lines", " ".join(self.line(L) for L in inst.lines)))
            for k, v in sorted(inst.expected.items()):
                fields.append(("expect", f"{k} {v}"))
            self.record("INSTANCE", name, fields)
        return name

    def add(self, obj) -> str:
        for cls, meth in ((Instance, self.instance), (SquareZeroExt, self.ext), (FreeSheafComplex, self.complex),
                          (LineBundle, self.line), (FilteredComplex, self.filtration), (PosetSite, self.site),
                          (Poset, self.poset), (RingHom, self.hom), (FiniteRing, self.ring)):
            if isinstance(obj, cls):
                return meth(obj)
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def dumps(*objs) -> str:
    w = Writer()
    for o in objs:
        w.add(o)
    return w.text()


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _records(text: str):
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    if not lines or lines[0].strip() != HEADER:
        raise FormatError(f"missing header {HEADER!r}")
    i = 1
    while i < len(lines):
        ln = lines[i].strip()
        i += 1
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split(None, 1)
        if len(parts) != 2:
            raise FormatError(f"bad record line {ln!r}")
        kind, name = parts
        fields: list[tuple[str, str]] = []
        while True:
            if i >= len(lines):
                raise FormatError(f"record {name} not terminated")
            f = lines[i]
            i += 1
            if f.strip() == "END":
                break
            key, _, val = f.partition(" ")
            fields.append((key, val))
        yield kind, name, fields


def loads(text: str) -> dict:
    """Parse a file; returns ``{name: object}`` in file order."""
    objs: dict = {}

    def get(fields, key, default=None):
        for k, v in fields:
            if k == key:
                return v
        if default is not None:
            return default
        raise FormatError(f"missing field {key!r}")

    def all_of(fields, key):
        return [v for k, v in fields if k == key]

    for kind, name, fields in _records(text):
        if kind == "RING":
            orders = tuple(int(t) for t in get(fields, "orders").split())
            one = tuple(int(t) for t in get(fields, "one").split())
            table = _parse_arr(get(fields, "table").split())
            objs[name] = FiniteRing(orders, table, one, name=get(fields, "name", ""))
        elif kind == "RINGHOM":
            objs[name] = RingHom(objs[get(fields, "source")], objs[get(fields, "target")],
                                 _parse_arr(get(fields, "images").split()))
        elif kind == "POSET":
            names = tuple(get(fields, "names").split())
            objs[name] = Poset(names, _parse_arr(get(fields, "leq").split()).astype(bool))
        elif kind == "SITE":
            P = objs[get(fields, "poset")]
            rings = tuple(objs[r] for r in get(fields, "rings").split())
            homs = {}
            for v in all_of(fields, "hom"):
                p, q, h = v.split()
                homs[(int(p), int(q))] = objs[h]
            objs[name] = PosetSite(P, rings, homs, name=get(fields, "name", ""))
        elif kind == "EXT":
            pi = tuple(objs[h] for h in get(fields, "pi").split())
            sec = all_of(fields, "section")
            section = tuple(objs[h] for h in sec[0].split()) if sec else None
            objs[name] = SquareZeroExt(objs[get(fields, "big")], objs[get(fields, "small")], pi, section,
                                       name=get(fields, "name", ""))
        elif kind == "COMPLEX":
            S = objs[get(fields, "site")]
            lo = int(get(fields, "lo"))
            ranks = [None] * S.n
            for v in all_of(fields, "ranks"):
                t = [int(x) for x in v.split()]
                ranks[t[0]] = tuple(t[1:])
            d: dict = {p: [] for p in range(S.n)}
            for v in all_of(fields, "d"):
                t = v.split()
                d[int(t[0])].append((int(t[1]), _parse_arr(t[2:])))
            d = {p: [m for _, m in sorted(ms, key=lambda x: x[0])] for p, ms in d.items()}
            rho: dict = {}
            for v in all_of(fields, "rho"):
                t = v.split()
                rho.setdefault((int(t[0]), int(t[1])), []).append((int(t[2]), _parse_arr(t[3:])))
            rho = {pq: [m for _, m in sorted(ms, key=lambda x: x[0])] for pq, ms in rho.items()}
            objs[name] = FreeSheafComplex(S, lo, tuple(ranks), d, rho)
        elif kind == "LINE":
            S = objs[get(fields, "site")]
            units = {}
            for v in all_of(fields, "u"):
                t = [int(x) for x in v.split()]
                units[(t[0], t[1])] = tuple(t[2:])
            objs[name] = LineBundle(S, units)
        elif kind == "FILTRATION":
            levels = []
            for v in all_of(fields, "levels"):
                t = [int(x) for x in v.split()]
                levels.append(tuple(t[1:]))
            objs[name] = FilteredComplex(objs[get(fields, "complex")], tuple(levels))
        elif kind == "INSTANCE":
            filt = all_of(fields, "filtration")
            lines = all_of(fields, "lines")
            expected = {}
            for v in all_of(fields, "expect"):
                k, _, val = v.partition(" ")
                expected[k] = _literal(val)
            objs[name] = Instance(get(fields, "id"), objs[get(fields, "ext")], objs[get(fields, "complex")],
                                  int(get(fields, "seed")), get(fields, "site_kind", ""),
                                  get(fields, "ring_kind", ""),
                                  objs[filt[0]] if filt else None,
                                  tuple(objs[n] for n in lines[0].split()) if lines else (), expected)
        else:
            raise FormatError(f"unknown record kind {kind!r}")
    return objs


def load_one(text: str, cls=None):
    """The last object in the file (optionally the last of a given type)."""
    objs = list(loads(text).values())
    if cls is not None:
        objs = [o for o in objs if isinstance(o, cls)]
    if not objs:
        raise FormatError("no object of the requested type")
    return objs[-1]


# -- structural keys for round-trip comparisons -----------------------------------------------

def key(obj):
    """A hashable description determining the object up to equality."""
    if isinstance(obj, FiniteRing):
        return ("ring", obj.orders, obj.one, obj.table.tobytes())
    if isinstance(obj, RingHom):
        return ("hom", key(obj.source), key(obj.target), obj.images.tobytes())
    if isinstance(obj, Poset):
        return ("poset", obj.names, obj.leq.tobytes())
    if isinstance(obj, PosetSite):
        return ("site", key(obj.poset), tuple(key(R) for R in obj.rings),
                tuple(sorted((pq, key(h)) for pq, h in obj.homs.items())))
    if isinstance(obj, SquareZeroExt):
        return ("ext", key(obj.big), key(obj.small), tuple(key(h) for h in obj.pi),
                None if obj.section is None else tuple(key(h) for h in obj.section))
    if isinstance(obj, FreeSheafComplex):
        return ("complex", key(obj.site), obj.lo, obj.ranks,
                tuple((p, tuple(np.asarray(m).tobytes() for m in obj.d[p])) for p in sorted(obj.d)),
                tuple(sorted((pq, tuple(np.asarray(m).tobytes() for m in ms)) for pq, ms in obj.rho.items())))
    if isinstance(obj, LineBundle):
        return ("line", key(obj.site), obj.key())
    if isinstance(obj, FilteredComplex):
        return ("filtration", key(obj.E), tuple(tuple(lv) for lv in obj.levels))
    if isinstance(obj, Instance):
        return ("instance", obj.id, key(obj.ext), key(obj.E), obj.seed, obj.site_kind, obj.ring_kind,
                None if obj.filtration is None else key(obj.filtration), tuple(key(L) for L in obj.lines),
                tuple(sorted((k, str(v)) for k, v in obj.expected.items())))
    raise TypeError(type(obj).__name__)
