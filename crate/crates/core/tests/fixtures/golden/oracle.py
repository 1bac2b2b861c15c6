#!/usr/bin/env python3
"""Brute-force recomputation of the golden fixture.

Written independently of the Rust implementation: plain loops, direct
formulas, and exhaustive partition search for the natural-breaks step.
Run from this directory to regenerate expected.json:

    python3 oracle.py > expected.json
"""
import csv
import itertools
import json
import math
from fractions import Fraction

RADIUS = 500.0
LONELY = 250.0
K = 5
SCORES = {
    "free_atm": 3.0, "post_office": 2.0, "branch": 1.0, "cashback": 0.5,
    "charging_atm": -0.5, "paypoint": 0.0, "recycler": 4.0,
}
KINDS = list(SCORES)
W = {
    "avcash": Fraction(4, 15), "loneliness": Fraction(1, 15),
    "claimant": Fraction(2, 21), "income": Fraction(2, 21),
    "housing": Fraction(2, 21), "lone_parents": Fraction(1, 21),
    "iuc": Fraction(1, 6), "car": Fraction(1, 6),
}
COMPONENTS = ["avcash", "loneliness", "claimant", "income", "housing",
              "lone_parents", "iuc", "car"]


def load():
    areas = list(csv.DictReader(open("areas.csv")))
    pts = list(csv.DictReader(open("infrastructure.csv")))
    for p in pts:
        p["x"] = float(p["x"])
        p["y"] = float(p["y"])
    # supermarket cashback dropped when it shares a postcode with a free ATM
    free_pc = {p["postcode"] for p in pts if p["kind"] == "free_atm"}
    dropped = [p["id"] for p in pts
               if p["kind"] == "cashback" and p["postcode"] in free_pc]
    pts = [p for p in pts if p["id"] not in dropped]
    pts.sort(key=lambda p: p["id"])
    areas.sort(key=lambda a: a["area_id"])
    return areas, pts, dropped


def dist(ax, ay, bx, by):
    return math.sqrt((ax - bx) ** 2 + (ay - by) ** 2)


def lonely_flags(pts, subjects, alternatives):
    flags = {}
    for p in pts:
        if p["kind"] not in subjects:
            continue
        best = None
        for q in pts:
            if q is p or q["kind"] not in alternatives:
                continue
            d = dist(p["x"], p["y"], q["x"], q["y"])
            if best is None or d < best:
                best = d
        flags[p["id"]] = best is None or best > LONELY
    return flags


def evaluate(areas, pts, scores, frozen=None):
    flags = lonely_flags(pts, {"free_atm", "charging_atm"},
                         {"free_atm", "charging_atm", "recycler"})
    rows = []
    for a in areas:
        cx, cy = float(a["x"]), float(a["y"])
        counts = {k: 0 for k in KINDS}
        lonely = 0
        for p in pts:
            if dist(cx, cy, p["x"], p["y"]) <= RADIUS:
                counts[p["kind"]] += 1
                if p["kind"] == "free_atm" and flags[p["id"]]:
                    lonely += 1
        av = sum(counts[k] * scores[k] for k in KINDS)
        oriented = {
            "avcash": av,
            "loneliness": -float(lonely),
            "claimant": 100.0 - float(a["claimant_pct"]),
            "income": float(a["median_income"]),
            "housing": 100.0 - float(a["rented_or_shared_pct"]),
            "lone_parents": 100.0 - float(a["lone_parent_pct"]),
            "iuc": 11.0 - float(a["iuc_score"]),
            "car": float(a["car_access_pct"]),
        }
        rows.append({"area_id": a["area_id"], "counts": counts,
                     "avcash_raw": av, "lonely_free_atms": lonely,
                     "oriented": oriented})
    if frozen is None:
        bounds = {c: (min(r["oriented"][c] for r in rows),
                      max(r["oriented"][c] for r in rows)) for c in COMPONENTS}
    else:
        bounds = frozen
    for r in rows:
        comp = {}
        for c in COMPONENTS:
            lo, hi = bounds[c]
            if hi == lo:
                v = 0.0
            else:
                v = (r["oriented"][c] - lo) / (hi - lo)
            if frozen is not None:
                v = min(1.0, max(0.0, v))
            comp[c] = v
        r["components"] = comp
        r["score"] = 100.0 * sum(float(W[c]) * comp[c] for c in COMPONENTS)
    return rows, bounds


def ssd(xs):
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs)


def jenks_brute(values, k):
    s = sorted(values)
    n = len(s)
    best = None
    for cuts in itertools.combinations(range(1, n), k - 1):
        edges = (0,) + cuts + (n,)
        total = 0.0
        for i in range(k):
            total += ssd(s[edges[i]:edges[i + 1]])
        if best is None or total < best[0]:
            best = (total, edges)
    total, edges = best
    uppers = [s[edges[i + 1] - 1] for i in range(k)]
    labels = []
    for v in values:
        for i, u in enumerate(uppers):
            if v <= u:
                labels.append(i + 1)
                break
    return labels, uppers, total


def avg_ranks(vals):
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def median(xs):
    s = sorted(xs)
    n = len(s)
    return s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2.0


def pearson(a, b):
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    den = math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
    return num / den


def main():
    areas, pts, dropped = load()
    base, bounds = evaluate(areas, pts, SCORES)
    scores = [r["score"] for r in base]
    labels, uppers, total = jenks_brute(scores, K)

    wards = {r["area_id"]: r["ward_id"] for r in csv.DictReader(open("wards.csv"))}
    hist = {r["ward_id"]: float(r["rank"]) for r in csv.DictReader(open("historical_ranks.csv"))}
    ward_ids = sorted(hist)
    med = {w: median([r["score"] for r in base if wards[r["area_id"]] == w]) for w in ward_ids}
    now = avg_ranks([med[w] for w in ward_ids])
    then = avg_ranks([hist[w] for w in ward_ids])
    # no ties here, so the textbook d^2 formula applies
    n = len(ward_ids)
    d2 = sum((a - b) ** 2 for a, b in zip(now, then))
    rho = 1 - 6 * d2 / (n * (n * n - 1))

    def scenario(paypoint, recyclers, digital):
        sc = dict(SCORES)
        p2 = [dict(p) for p in pts]
        a2 = [dict(a) for a in areas]
        if paypoint:
            sc["paypoint"] = sc["post_office"]
        if recyclers:
            f = lonely_flags(p2, {"free_atm"}, {"free_atm", "recycler"})
            for p in p2:
                if p["kind"] == "free_atm" and f[p["id"]]:
                    p["kind"] = "recycler"
        if digital:
            for a in a2:
                if int(a["iuc_score"]) == 10:
                    a["iuc_score"] = "7"
        rows, _ = evaluate(a2, p2, sc, frozen=bounds)
        return {r["area_id"]: r["score"] - b["score"] for r, b in zip(rows, base)}

    out = {
        "dropped_points": dropped,
        "areas": [
            {
                "area_id": r["area_id"],
                "counts": r["counts"],
                "avcash_raw": r["avcash_raw"],
                "lonely_free_atms": r["lonely_free_atms"],
                "components": r["components"],
                "score": r["score"],
                "class": lab,
            }
            for r, lab in zip(base, labels)
        ],
        "bounds": {c: list(bounds[c]) for c in COMPONENTS},
        "jenks_upper_bounds": uppers,
        "jenks_total_ssd": total,
        "wards": [
            {"ward_id": w, "median": med[w], "rank_now": rn, "rank_then": rt}
            for w, rn, rt in zip(ward_ids, now, then)
        ],
        "spearman": rho,
        "pearson_medians": pearson([med[w] for w in ward_ids], [hist[w] for w in ward_ids]),
        "scenario_deltas": {
            "paypoint_banking": scenario(True, False, False),
            "cash_recyclers": scenario(False, True, False),
            "digital_inclusion": scenario(False, False, True),
            "all": scenario(True, True, True),
        },
    }
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
