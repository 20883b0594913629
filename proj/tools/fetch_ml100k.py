#!/usr/bin/env python3
"""Place MovieLens 100K `u.data` under data/ml-100k/.

Tries the GroupLens archive first. When that is unreachable, falls back to the
copy of the rating file bundled in the RecBole wheel (same rows, same order,
plus a one-line header that is stripped here).
"""
import argparse
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
RECBOLE_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=20) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "recbole==1.2.1", "-d", tmp],
            check=True)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        raw = zipfile.ZipFile(wheel).read(RECBOLE_MEMBER).decode()
    lines = raw.splitlines()
    if lines and lines[0].startswith("user_id"):
        lines = lines[1:]
    return ("\n".join(lines) + "\n").encode()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "ml-100k"))
    args = parser.parse_args()
    dest = pathlib.Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    target = dest / "u.data"
    if target.exists():
        print(f"{target} already present")
        return
    try:
        payload = from_grouplens()
    except Exception as err:  # noqa: BLE001
        print(f"grouplens download failed ({err}); using recbole wheel", file=sys.stderr)
        payload = from_recbole()
    target.write_bytes(payload)
    count = payload.count(b"\n")
    print(f"wrote {target} ({count} ratings)")


if __name__ == "__main__":
    main()
