#!/usr/bin/env python3
"""Reconstruct the MovieLens 100K distribution files used by the DOA benchmark.

The GroupLens archive is not always reachable, but the RecBole wheel on PyPI
ships the same 100,000 ratings in original u.data order together with the genre
lists. This script pulls that wheel with pip, rewrites the ratings as u.data,
the genres as a u.item-style pipe file, and regenerates the five u1..u5
base/test splits exactly like the archive's mku.sh (consecutive 20,000-line
chunks of u.data, each sorted by user then item).
"""

import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]

WHEEL = "recbole==1.2.1"
INTER = "recbole/dataset_example/ml-100k/ml-100k.inter"
ITEM = "recbole/dataset_example/ml-100k/ml-100k.item"


def fetch_wheel(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", WHEEL, "--no-deps", "-q",
         "-d", str(workdir)],
        check=True)
    wheels = sorted(workdir.glob("recbole-*.whl"))
    if not wheels:
        sys.exit("pip did not produce a recbole wheel")
    return wheels[0]


def write_ratings(lines, out: pathlib.Path) -> list:
    rows = []
    for line in lines[1:]:
        user, item, rating, stamp = line.split("\t")
        rows.append((int(user), int(item), int(float(rating)), int(float(stamp))))
    with open(out / "u.data", "w") as f:
        for r in rows:
            f.write("%d\t%d\t%d\t%d\n" % r)
    return rows


def write_items(lines, out: pathlib.Path) -> None:
    with open(out / "u.item", "w", encoding="latin-1", errors="replace") as f:
        for line in lines[1:]:
            fields = line.split("\t")
            item, title, year = fields[0], fields[1], fields[2]
            labels = set(fields[3].split()) if len(fields) > 3 else set()
            flags = "|".join("1" if g in labels else "0" for g in GENRES)
            f.write("%s|%s (%s)||||%s\n" % (item, title.replace("|", "/"), year, flags))
    with open(out / "u.genre", "w") as f:
        for idx, g in enumerate(GENRES):
            f.write("%s|%d\n" % (g, idx))


def write_splits(rows, out: pathlib.Path, chunk: int = 20000) -> None:
    def dump(path, subset):
        with open(path, "w") as f:
            for r in sorted(subset, key=lambda r: (r[0], r[1])):
                f.write("%d\t%d\t%d\t%d\n" % r)

    for k in range(1, 6):
        test = rows[(k - 1) * chunk:k * chunk]
        base = rows[:(k - 1) * chunk] + rows[k * chunk:]
        dump(out / ("u%d.test" % k), test)
        dump(out / ("u%d.base" % k), base)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "ml-100k"))
    parser.add_argument("--wheel", help="use an already downloaded recbole wheel")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = pathlib.Path(args.wheel) if args.wheel else fetch_wheel(pathlib.Path(tmp))
        with zipfile.ZipFile(wheel) as z:
            inter = z.read(INTER).decode("utf-8").splitlines()
            item = z.read(ITEM).decode("utf-8", errors="replace").splitlines()
    rows = write_ratings(inter, out)
    write_items(item, out)
    write_splits(rows, out)
    users = len({r[0] for r in rows})
    items = len({r[1] for r in rows})
    print("wrote %s: %d users, %d items, %d ratings" % (out, users, items, len(rows)))
    if (users, items, len(rows)) != (943, 1682, 100000):
        sys.exit("unexpected MovieLens 100K shape")


if __name__ == "__main__":
    main()
