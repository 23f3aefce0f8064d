#!/usr/bin/env python3
"""Builds data/wine.csv and data/ecoli.csv from locally installable sources.

Wine comes from scikit-learn's bundled copy of the UCI file. The 8-class UCI
Ecoli labels are reassembled from the KEEL one-vs-rest partitions shipped in
the `imbalanced-databases` wheel (same row order as the UCI file).

    pip download --no-deps imbalanced-databases -d /tmp/idb
    python3 scripts/build_datasets.py --idb-wheel /tmp/idb/imbalanced_databases-*.whl
"""
import argparse
import collections
import csv
import io
import pathlib
import zipfile

ECOLI_FEATURES = ["mcg", "gvh", "lip", "chg", "aac", "alm1", "alm2"]


def read_keel(zf, name):
    text = zf.read(f"imbalanced_databases/data/{name}/{name}.dat").decode()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        parts = [p.strip() for p in line.split(",")]
        rows.append((tuple(float(v) for v in parts[:-1]), parts[-1] == "positive"))
    return rows


def compatible(base, row):
    # Some KEEL partitions store the two-decimal values as digit strings with
    # trailing zeros stripped (0.40 -> 4.0) and may drop the constant chg column.
    if len(row) == len(base) - 1:
        base = base[:3] + base[4:]
    if len(row) != len(base):
        return False
    if all(abs(b - r) < 1e-9 for b, r in zip(base, row)):
        return True
    for b, r in zip(base, row):
        hundredths = round(b * 100)
        ok = hundredths == round(r) or (hundredths % 10 == 0 and hundredths // 10 == round(r))
        if b == 1.0:
            ok = ok or round(r) in (1, 10, 100)
        if not ok:
            return False
    return True


def positives(zf, name):
    return [f for f, p in read_keel(zf, name) if p]


def assign(base, labels, rows, cls, strict=True):
    # Non-strict partitions also contain rows of classes assigned earlier.
    for row in rows:
        hits = [i for i, (feat, _) in enumerate(base) if labels[i] is None and compatible(feat, row)]
        assert hits or not strict, (cls, row)
        if hits:
            labels[hits[0]] = cls


def build_ecoli(wheel, out):
    zf = zipfile.ZipFile(wheel)
    base = read_keel(zf, "ecoli1")
    labels = [None] * len(base)
    for name, cls in [("ecoli1", "im"), ("ecoli2", "pp"), ("ecoli3", "imU"), ("ecoli4", "om")]:
        assign(base, labels, positives(zf, name), cls)
    # KEEL class ids: 2=imL 3=imS 5=om 6=omL
    assign(base, labels, positives(zf, "ecoli-0-1-4-7_vs_5-6"), "omL", strict=False)
    assign(base, labels, positives(zf, "ecoli-0-1-3-7_vs_2-6"), "imL", strict=False)
    assign(base, labels, positives(zf, "ecoli-0-2-6-7_vs_3-5"), "imS", strict=False)
    labels = [lab or "cp" for lab in labels]
    counts = collections.Counter(labels)
    expected = {"cp": 143, "im": 77, "pp": 52, "imU": 35, "om": 20, "omL": 5, "imL": 2, "imS": 2}
    assert counts == expected, counts
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ECOLI_FEATURES + ["class"])
        for (feat, _), lab in zip(base, labels):
            w.writerow([f"{v:.2f}" for v in feat] + [lab])


def build_wine(out):
    from sklearn.datasets import load_wine

    ds = load_wine()
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + ["class"])
        for row, target in zip(ds.data, ds.target):
            w.writerow([repr(float(v)) for v in row] + [f"class_{target + 1}"])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--idb-wheel", required=True)
    ap.add_argument("--out-dir", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    build_ecoli(args.idb_wheel, out / "ecoli.csv")
    build_wine(out / "wine.csv")


if __name__ == "__main__":
    main()
