#!/usr/bin/env python3
"""Regenerate the planted 200-response fixture.

Writes crates/cli/tests/fixtures/responses_200.jsonl (one {"m", "raw"} object
per line) and responses_200.plant.json (the planted status counts). The
generator classifies every line with its own implementation of the response
taxonomy, independent of the Rust one, and asserts the plant before writing:

  wrong_format  raw violates the strict grammar (optional whitespace, then
                [int] tokens separated by `>`, nothing else) or any extracted
                integer falls outside [1, m]
  repetition    grammar ok, all in range, but an identifier repeats
  missing       grammar ok, in range, no repeats, but some of 1..m absent
  ok            a clean permutation of 1..m

Usage: python3 tools/plant_responses.py
"""

import json
import random
import re
from pathlib import Path

PLANT = {"ok": 143, "wrong_format": 24, "repetition": 19, "missing": 14}
OUT_DIR = Path(__file__).resolve().parent.parent / "crates/cli/tests/fixtures"

GRAMMAR = re.compile(r"\s*\[\d+\]\s*(?:>\s*\[\d+\]\s*)*")
EXTRACT = re.compile(r"\[(\d+)\]")


def classify(raw: str, m: int) -> str:
    extracted = [int(x) for x in EXTRACT.findall(raw)]
    if GRAMMAR.fullmatch(raw) is None or any(not (1 <= v <= m) for v in extracted):
        return "wrong_format"
    if len(set(extracted)) != len(extracted):
        return "repetition"
    if set(extracted) != set(range(1, m + 1)):
        return "missing"
    return "ok"


def fmt(ids, rng):
    sep = rng.choice([" > ", " > ", ">", " >  "])
    lead = rng.choice(["", "", " "])
    return lead + sep.join(f"[{i}]" for i in ids)


def gen_ok(rng):
    m = rng.randint(1, 20)
    ids = list(range(1, m + 1))
    rng.shuffle(ids)
    return m, fmt(ids, rng)


def gen_wrong_format(rng):
    m = rng.randint(2, 20)
    ids = list(range(1, m + 1))
    rng.shuffle(ids)
    kind = rng.randrange(6)
    if kind == 0:
        return m, "I cannot rank these passages."
    if kind == 1:
        return m, "Sure! The ranking is: " + fmt(ids, rng)
    if kind == 2:  # out-of-range identifier, grammar otherwise clean
        ids[rng.randrange(m)] = m + rng.randint(1, 9)
        return m, fmt(ids, rng)
    if kind == 3:
        return m, ", ".join(f"[{i}]" for i in ids)
    if kind == 4:
        return m, " > ".join(str(i) for i in ids)
    return m, fmt(ids, rng) + "."


def gen_repetition(rng):
    m = rng.randint(2, 20)
    ids = list(range(1, m + 1))
    rng.shuffle(ids)
    ids[-1] = ids[0]
    return m, fmt(ids, rng)


def gen_missing(rng):
    m = rng.randint(2, 20)
    ids = list(range(1, m + 1))
    rng.shuffle(ids)
    keep = rng.randint(1, m - 1)
    return m, fmt(ids[:keep], rng)


def main():
    rng = random.Random(20240117)
    gens = {
        "ok": gen_ok,
        "wrong_format": gen_wrong_format,
        "repetition": gen_repetition,
        "missing": gen_missing,
    }
    rows = []
    for status, want in PLANT.items():
        for _ in range(want):
            m, raw = gens[status](rng)
            got = classify(raw, m)
            assert got == status, f"planted {status}, classified {got}: {raw!r} (m={m})"
            rows.append({"m": m, "raw": raw})
    rng.shuffle(rows)
    assert len(rows) == 200

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "responses_200.jsonl", "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    with open(OUT_DIR / "responses_200.plant.json", "w") as f:
        json.dump(PLANT, f, indent=2)
        f.write("\n")
    print(f"wrote 200 responses; plant: {PLANT}")


if __name__ == "__main__":
    main()
