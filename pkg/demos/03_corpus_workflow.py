"""
The command line workflow
=========================

Generate a small corpus, validate and verify it, search for an obstructed
instance and summarize the reports.  Equivalent shell commands::

    perfdef generate --kind pseudo-circle --ring Zp2 --count 2 --corpus corpus
    perfdef validate --corpus corpus
    perfdef verify --corpus corpus --checks MAIN-i,ORACLE-EQ,TORSOR
    perfdef search --seed 0 --corpus corpus
    perfdef report --corpus corpus
"""

import tempfile
from pathlib import Path

from perfdef.cli import main

root = Path(tempfile.mkdtemp()) / "corpus"
corpus = ["--corpus", str(root)]

main(["generate", "--kind", "pseudo-circle", "--ring", "Zp2", "--count", "2"] + corpus)
main(["validate"] + corpus)
main(["verify", "--checks", "MAIN-i,ORACLE-EQ,TORSOR"] + corpus)
main(["search", "--seed", "0"] + corpus)
status = main(["report"] + corpus)
print("exit status", status)
print("files:", sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()))
