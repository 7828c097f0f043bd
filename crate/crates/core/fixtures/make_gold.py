#!/usr/bin/env python3
"""Regenerates the frozen benchmark files from the question sources.

Gold rows come from Python's sqlite3 over the desk CSVs, with the scalar
functions reimplemented here. Nothing in this script calls the Rust code.

    python3 fixtures/make_gold.py
"""

import csv
import json
import math
import re
import sqlite3
from pathlib import Path

HERE = Path(__file__).resolve().parent
DESK = HERE / "desk"
QUESTIONS = HERE / "questions"
GAZETTEER = HERE.parent / "data" / "gazetteer.tsv"

CREATE_RE = re.compile(r'CREATE TABLE\s+"?(\w+)"?\s*\((.*?)\);', re.S | re.I)
COLUMN_RE = re.compile(r'^\s*"?(\w+)"?\s+(\w+)', re.M)


def parse_schema(text):
    tables = {}
    for name, body in CREATE_RE.findall(text):
        cols = [
            (c, t.lower())
            for c, t in COLUMN_RE.findall(body)
            if c.upper() not in ("PRIMARY", "FOREIGN")
        ]
        tables[name] = cols
    return tables


def convert(cell, sql_type):
    if cell == "":
        return None
    if sql_type.startswith("int"):
        return int(cell)
    if sql_type in ("real", "float", "double", "numeric"):
        return float(cell)
    if sql_type.startswith("bool"):
        return {"t": 1, "true": 1, "1": 1, "f": 0, "false": 0, "0": 0}[cell.strip().lower()]
    return cell


def open_db(db_id):
    schema_text = (DESK / db_id / "schema.sql").read_text()
    conn = sqlite3.connect(":memory:")
    conn.executescript(schema_text)
    for table, cols in parse_schema(schema_text).items():
        path = DESK / db_id / f"{table}.csv"
        if not path.exists():
            continue
        types = {c.lower(): t for c, t in cols}
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            placeholders = ",".join("?" for _ in header)
            names = ",".join(f'"{h}"' for h in header)
            for row in reader:
                vals = [convert(v, types[h.lower()]) for h, v in zip(header, row)]
                conn.execute(f'INSERT INTO "{table}" ({names}) VALUES ({placeholders})', vals)
    register_functions(conn)
    return conn


# ---- scalar functions -------------------------------------------------------


def load_places():
    places, aliases = {}, []
    for line in GAZETTEER.read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        f = [x.strip() for x in line.split("\t")]
        if len(f) == 2:
            aliases.append(f)
        else:
            places[norm(f[0])] = (float(f[1]), float(f[2]), f[3], f[4] or None)
    for alias, canonical in aliases:
        places[norm(alias)] = places[norm(canonical)]
    return places


def norm(name):
    return " ".join(name.split()).lower()


PLACES = load_places()


def nulls_pass(fn):
    def wrapped(*args):
        if any(a is None for a in args):
            return None
        return fn(*args)

    return wrapped


def as_int(v):
    if isinstance(v, str):
        v = float(v.strip())
    return int(math.trunc(v))


def syllables(s):
    total = 0
    for word in s.split():
        w = word.lower()
        if w.startswith("y"):
            w = "#" + w[1:]
        total += len(re.findall(r"[aeiouy]+", w))
    return total


def prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def square(n):
    return n >= 0 and math.isqrt(n) ** 2 == n


def fibonacci(n):
    a, b = 0, 1
    while a < n:
        a, b = b, a + b
    return n >= 0 and a == n


def place(name):
    return PLACES.get(norm(name))


def haversine(a, b):
    pa, pb = place(a), place(b)
    if pa is None or pb is None:
        return None
    la1, lo1, la2, lo2 = map(math.radians, (pa[0], pa[1], pb[0], pb[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(h))


def geo_field(i):
    def f(name):
        p = place(name)
        return None if p is None else p[i]

    return f


FUNCTIONS = {
    "count_syllables": (1, lambda s: syllables(str(s))),
    "string_length": (1, lambda s: len(str(s))),
    "count_words": (1, lambda s: len(str(s).split())),
    "starts_with_vowel": (1, lambda s: int(next((c for c in str(s) if c.isalpha()), "").lower() in ("a", "e", "i", "o", "u") and any(c.isalpha() for c in str(s)))),
    "reverse_string": (1, lambda s: str(s)[::-1]),
    "is_palindrome": (1, lambda s: int([c.lower() for c in str(s) if c.isalnum()] == [c.lower() for c in str(s) if c.isalnum()][::-1])),
    "is_prime": (1, lambda n: int(prime(as_int(n)))),
    "is_square": (1, lambda n: int(square(as_int(n)))),
    "is_fibonacci": (1, lambda n: int(fibonacci(as_int(n)))),
    "is_even": (1, lambda n: int(as_int(n) % 2 == 0)),
    "digit_sum": (1, lambda n: sum(int(d) for d in str(abs(as_int(n))))),
    "is_divisible_by": (2, lambda n, d: int(as_int(d) != 0 and as_int(n) % as_int(d) == 0)),
    "get_latitude": (1, geo_field(0)),
    "get_longitude": (1, geo_field(1)),
    "get_country_of_place": (1, geo_field(2)),
    "get_province_of_place": (1, geo_field(3)),
    "distance_between": (2, haversine),
}


def register_functions(conn):
    for name, (arity, fn) in FUNCTIONS.items():
        conn.create_function(name, arity, nulls_pass(fn), deterministic=True)


# ---- output -----------------------------------------------------------------


def run(conn, sql):
    cur = conn.execute(sql)
    cols = [d[0] for d in cur.description]
    rows = [list(r) for r in cur.fetchall()]
    return cols, rows


def record(q, gold_sql, cols, rows):
    return {
        "question_id": q["question_id"],
        "db_id": q["db_id"],
        "question": q["question"],
        "gold_sql": gold_sql,
        "gold_columns": cols,
        "gold_rows": rows,
        "produces_rows": bool(rows),
    }


def write_jsonl(path, records):
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    conns = {}

    def conn_for(db_id):
        if db_id not in conns:
            conns[db_id] = open_db(db_id)
        return conns[db_id]

    bench1 = json.loads((QUESTIONS / "bench1.json").read_text())
    out1 = []
    for q in bench1:
        cols, rows = run(conn_for(q["db_id"]), q["gold_sql"])
        out1.append(record(q, q["gold_sql"], cols, rows))
    write_jsonl(HERE / "bench1.jsonl", out1)

    bench2 = json.loads((QUESTIONS / "bench2.json").read_text())
    out2 = []
    for q in bench2:
        cols, rows = run(conn_for(q["db_id"]), q["sl"])
        out2.append(record(q, q["sl"], cols, rows))
    write_jsonl(HERE / "bench2.jsonl", out2)
    for mode in ("qr", "sl"):
        mapping = {q["question_id"]: q[mode] for q in bench2}
        (HERE / f"bench2_{mode}.json").write_text(json.dumps(mapping, indent=2, ensure_ascii=False) + "\n")

    for r in out1 + out2:
        print(r["question_id"], json.dumps(r["gold_rows"], ensure_ascii=False))


if __name__ == "__main__":
    main()
