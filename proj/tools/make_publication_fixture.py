#!/usr/bin/env python3
"""Writes the sample publication database (5 named papers, 5 named authors,
8 writes) padded with filler tuples so relation sizes and mean document
lengths match the target statistics: 150 papers (avdl 57.8) and 170
authors (avdl 14.6)."""

import random
import sys
from pathlib import Path

PAPERS = [
    ("p1", "Leveraging Identity-Based Cryptography for Node ID Assignment in Structured P2P Systems."),
    ("p2", "P2P or Not P2P?: In P2P 2003"),
    ("p3", "A System for Predicting Subcellular Localization."),
    ("p4", "Logical Queries over Views: Decidability."),
    ("p5", "A conservative strategy to protect P2P file sharing systems from pollution attacks."),
]
AUTHORS = [
    ("a1", "James Chen"),
    ("a2", "Saikat Guha"),
    ("a3", "James Bassingthwaighte"),
    ("a4", "Sabu T."),
    ("a5", "James S. W. Walkerdines"),
]
WRITES = [
    ("w1", "a1", "p2"), ("w2", "a2", "p1"), ("w3", "a3", "p3"), ("w4", "a1", "p4"),
    ("w5", "a5", "p5"), ("w6", "a3", "p4"), ("w7", "a2", "p2"), ("w8", "a2", "p5"),
]
WORDS = ("data query index graph stream model tree join rank view mining search "
         "network cache log table storage update schema learning system").split()


def filler(rng, length):
    words = []
    while len(" ".join(words)) < length:
        words.append(rng.choice(WORDS))
    text = " ".join(words)[:length]
    return text.rstrip() + "x" * (length - len(text.rstrip()))


def pad(rng, named, n, total, prefix):
    rest = n - len(named)
    budget = total - sum(len(t) for _, t in named)
    base, extra = divmod(budget, rest)
    rows = list(named)
    for i in range(rest):
        rows.append((f"{prefix}{i + 6}", filler(rng, base + (1 if i < extra else 0))))
    return rows


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(7)
    papers = pad(rng, PAPERS, 150, round(150 * 57.8), "p")
    authors = pad(rng, AUTHORS, 170, round(170 * 14.6), "a")
    for _, text in papers[5:] + authors[5:]:
        assert "james" not in text.lower() and "p2p" not in text.lower()
    (out / "Papers.tsv").write_text("pid\ttitle\n" + "".join(f"{k}\t{t}\n" for k, t in papers))
    (out / "Authors.tsv").write_text("aid\tname\n" + "".join(f"{k}\t{t}\n" for k, t in authors))
    (out / "Writes.tsv").write_text("wid\taid\tpid\n" + "".join(f"{w}\t{a}\t{p}\n" for w, a, p in WRITES))
    (out / "schema.txt").write_text(
        "relation Papers key=pid text=title\n"
        "relation Authors key=aid text=name\n"
        "relation Writes key=wid plain=aid,pid\n"
        "fk Writes.aid -> Authors\n"
        "fk Writes.pid -> Papers\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/publication")
