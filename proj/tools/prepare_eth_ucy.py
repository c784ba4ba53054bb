#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Stage the ETH/UCY scene files as data/<scene>.txt.

The preprocessed ETH/UCY files (frame, pedestrian id, x, y in meters, one row
every 0.4 s) are taken from the Trajectron++ source distribution on PyPI, which
bundles them under experiments/pedestrians/raw/raw/all_data/.

univ is the union of students001 and students003. The two recordings share id
spaces, so students003 gets pedestrian ids shifted by 1000 and frame ids shifted
past the end of students001 with a gap, which keeps the two sequences apart.
"""

import argparse
import io
import pathlib
import re
import sys
import tarfile
import urllib.request

INDEX = "https://pypi.org/simple/trajectron/"
SDIST = "trajectron-0.1.3.tar.gz"
PREFIX = "trajectron-0.1.3/experiments/pedestrians/raw/raw/all_data/"

SCENES = {
    "eth": ["biwi_eth.txt"],
    "hotel": ["biwi_hotel.txt"],
    "univ": ["students001.txt", "students003.txt"],
    "zara1": ["crowds_zara01.txt"],
    "zara2": ["crowds_zara02.txt"],
}

PED_OFFSET = 1000
FRAME_GAP = 1000


def fetch_sdist():
    with urllib.request.urlopen(INDEX, timeout=60) as resp:
        page = resp.read().decode()
    match = re.search(r'href="([^"]*' + re.escape(SDIST) + r')[#"]', page)
    if not match:
        sys.exit(f"{SDIST} not listed on {INDEX}")
    url = urllib.request.urljoin(INDEX, match.group(1))
    with urllib.request.urlopen(url, timeout=300) as resp:
        return resp.read()


def parse_rows(text):
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 4:
            continue
        rows.append((int(float(parts[0])), int(float(parts[1])), parts[2], parts[3]))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--sdist", help="use a local copy of " + SDIST)
    args = parser.parse_args()

    blob = pathlib.Path(args.sdist).read_bytes() if args.sdist else fetch_sdist()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        for scene, files in SCENES.items():
            merged = []
            frame_base = 0
            for k, name in enumerate(files):
                text = tar.extractfile(PREFIX + name).read().decode()
                rows = parse_rows(text)
                for frame, ped, x, y in rows:
                    merged.append((frame + frame_base, ped + k * PED_OFFSET, x, y))
                frame_base = max(r[0] for r in merged) + FRAME_GAP
            with open(out / f"{scene}.txt", "w") as fh:
                for frame, ped, x, y in merged:
                    fh.write(f"{frame}\t{ped}\t{x}\t{y}\n")
            print(f"{scene}: {len(merged)} rows")


if __name__ == "__main__":
    main()
