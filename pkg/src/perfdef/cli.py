"""Command line: ``perfdef {validate,generate,verify,search,report}``.

Corpus layout under ``--corpus``: ``instances/*.pd``, ``witnesses/*.pd`` and
``reports/*.txt``.  Every subcommand exits with status 0 iff nothing failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .corpus import RING_KINDS, SITE_KINDS, default_corpus, generate
from .serialize import FormatError, dumps, key, load_one
from .zn import TooLarge

log = logging.getLogger("perfdef")


def _checks(text: str | None) -> list[str] | None:
    if not text or text == "all":
        return None
    names = [c.strip() for c in text.split(",") if c.strip()]
    unknown = [c for c in names if c not in harness.CHECKS and c != "WITNESS-SEARCH"]
    if unknown:
        raise SystemExit(f"unknown checks: {', '.join(unknown)} (known: {', '.join(harness.CHECKS)})")
    return names


def _config(args) -> harness.Config:
    return harness.Config(seed=args.seed, budget=args.budget, max_elements=args.max_elements)


def cmd_validate(args) -> int:
    dirs = harness.corpus_dirs(args.corpus)
    paths = sorted(dirs["instances"].glob("*.pd")) + sorted(dirs["witnesses"].glob("*.pd"))
    bad = 0
    for path in paths:
        text = path.read_text(encoding="utf-8")
        try:
            inst = load_one(text, harness.Instance)
        except (FormatError, KeyError, ValueError) as exc:
            print(f"INVALID {path.name} parse: {exc}")
            bad += 1
            continue
        ok, why = inst.check()
        if ok and key(load_one(dumps(inst), harness.Instance)) != key(inst):
            ok, why = False, "round trip changes the instance"
        print(f"{'VALID' if ok else 'INVALID'} {path.name}" + ("" if ok else f" {why}"))
        bad += not ok
    print(f"{len(paths) - bad}/{len(paths)} valid")
    return 1 if bad else 0


def cmd_generate(args) -> int:
    dirs = harness.corpus_dirs(args.corpus)
    if args.kind == "default":
        instances = default_corpus(args.seed)
    else:
        rings = RING_KINDS if args.ring == "all" else [args.ring]
        instances = []
        for rk in rings:
            for i in range(args.count):
                try:
                    instances.append(generate(args.kind, rk, args.seed * 1000 + i, max_elements=args.max_elements))
                except TooLarge as exc:
                    log.warning("skipping %s/%s seed %d: %s", args.kind, rk, i, exc)
    for inst in instances:
        harness.save_instance(inst, dirs["instances"])
    print(f"wrote {len(instances)} instances to {dirs['instances']}")
    return 0


def cmd_verify(args) -> int:
    checks = _checks(args.checks)
    dirs = harness.corpus_dirs(args.corpus)
    instances = harness.load_instances(dirs["instances"]) + harness.load_instances(dirs["witnesses"])
    if not instances:
        print(f"no instances under {args.corpus}; run `perfdef generate` first", file=sys.stderr)
        return 1
    if checks is not None:
        checks = [c for c in checks if c != "WITNESS-SEARCH"]
    rep = harness.verify_all(instances, checks, _config(args))
    out = dirs["reports"] / f"verify-seed{args.seed}.txt"
    out.write_text(rep.text(), encoding="utf-8")
    sys.stdout.write(rep.body())
    print(f"{rep.count('pass')} pass, {rep.count('fail')} fail, {rep.count('skipped')} skipped; report {out}")
    return 0 if rep.ok else 1


def cmd_search(args) -> int:
    dirs = harness.corpus_dirs(args.corpus)
    res = harness.search(args.target, budget=args.budget, seed=args.seed)
    rep = harness.witness_check(res, _config(args))
    if res.found:
        path = harness.save_instance(res.instance, dirs["witnesses"])
        print(f"witness {res.instance.id} after {res.tried} instances: {path}")
    else:
        print(f"none found in {res.tried} instances (seed {args.seed})")
    out = dirs["reports"] / f"search-seed{args.seed}.txt"
    out.write_text(rep.text(), encoding="utf-8")
    sys.stdout.write(rep.body())
    return 0 if rep.ok else 1


def cmd_report(args) -> int:
    dirs = harness.corpus_dirs(args.corpus)
    total = harness.Report()
    files = sorted(dirs["reports"].glob("*.txt"))
    for path in files:
        total.merge(harness.parse_report(path.read_text(encoding="utf-8")))
    names = sorted({name for name, _ in total.results})
    wanted = _checks(args.checks)
    if wanted is not None:
        names = [n for n in names if n in wanted]
    print(f"{'check':<18}{'pass':>6}{'fail':>6}{'skipped':>9}")
    for n in names:
        print(f"{n:<18}{total.count('pass', n):>6}{total.count('fail', n):>6}{total.count('skipped', n):>9}")
    for name, iid in sorted(total.failures()):
        print(f"FAILED {name} {iid} {total.results[(name, iid)].witness}")
    print(f"{len(files)} report files")
    return 0 if total.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for generation and checks")
    common.add_argument("--budget", type=int, default=None,
                        help="search budget (lifts for verify, instances for search)")
    common.add_argument("--corpus", type=Path, default=Path("corpus"), help="corpus directory")
    common.add_argument("--checks", default="all", help="comma separated check names, or 'all'")
    common.add_argument("--max-elements", type=int, default=512, help="largest ring allowed")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="perfdef", description="Verify deformation, trace and determinant checks on a corpus of finite instances.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="parse and validate every corpus file")
    g = sub.add_parser("generate", parents=[common], help="write generated instances to the corpus")
    g.add_argument("--kind", default="default", choices=("default",) + SITE_KINDS)
    g.add_argument("--ring", default="all", choices=("all",) + RING_KINDS)
    g.add_argument("--count", type=int, default=1, help="instances per ring kind")
    sub.add_parser("verify", parents=[common], help="run checks on the corpus and write a report")
    s = sub.add_parser("search", parents=[common], help="look for an instance with a nonzero obstruction")
    s.add_argument("--target", default="nonzero-obstruction", choices=("nonzero-obstruction", "nonzero-trace"))
    sub.add_parser("report", parents=[common], help="summarize the reports in the corpus")
    return p


COMMANDS = {"validate": cmd_validate, "generate": cmd_generate, "verify": cmd_verify,
            "search": cmd_search, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.budget is None:
        args.budget = 200 if args.command == "search" else 2 ** 16
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
