#!/usr/bin/env python3
"""Fetch MovieLens-100K ratings into data/ml-100k/u.data.

Tries the GroupLens archive first. If that host is unreachable, falls back to
the copy bundled in the recbole 1.2.1 wheel (ml-100k.inter, same 100k rows).
"""
import argparse
import glob
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
EXPECTED_ROWS = 100_000


def from_grouplens(timeout):
    with urllib.request.urlopen(GROUPLENS_URL, timeout=timeout) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data").decode()


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps",
             "-d", tmp, "recbole==1.2.1"],
            check=True, stdout=subprocess.DEVNULL)
        wheel = glob.glob(f"{tmp}/recbole-*.whl")[0]
        with zipfile.ZipFile(wheel) as archive:
            name = next(n for n in archive.namelist() if n.endswith("ml-100k/ml-100k.inter"))
            lines = archive.read(name).decode().splitlines()
    # Drop the "user_id:token\titem_id:token\t..." header; columns already match u.data.
    return "\n".join(lines[1:]) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent
                                         / "data" / "ml-100k" / "u.data"))
    ap.add_argument("--timeout", type=float, default=20.0)
    args = ap.parse_args()

    try:
        text = from_grouplens(args.timeout)
        source = "grouplens"
    except Exception as exc:  # noqa: BLE001
        print(f"grouplens unavailable ({exc}); using the recbole wheel", file=sys.stderr)
        text = from_recbole()
        source = "recbole"

    rows = [r for r in text.splitlines() if r.strip()]
    if len(rows) != EXPECTED_ROWS or any(len(r.split("\t")) != 4 for r in rows):
        sys.exit(f"unexpected content from {source}: {len(rows)} rows")

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(rows) + "\n")
    print(f"wrote {len(rows)} ratings to {out} ({source})")


if __name__ == "__main__":
    main()
