"""
Command-line workflow
=====================

Extract pmfs from a directory of PGM images, learn a dictionary, encode
and evaluate. Every step writes plain files; the metrics are
byte-identical across reruns with the same seed.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from infosdl import io

root = Path(tempfile.mkdtemp())
rng = np.random.default_rng(4)

# two classes of 16x16 images: horizontal and vertical bars
for cls, axis in (("horizontal", 0), ("vertical", 1)):
    (root / "images" / cls).mkdir(parents=True)
    for i in range(6):
        img = 0.1 * rng.random((16, 16))
        bars = np.zeros(16)
        bars[rng.choice(16, 4, replace=False)] = 0.8
        img += bars[:, None] if axis == 0 else bars[None, :]
        io.write_pgm(root / "images" / cls / f"{i}.pgm", img)


def infosdl(*args):
    cmd = [sys.executable, "-m", "infosdl", *map(str, args)]
    out = subprocess.run(cmd, capture_output=True, text=True, check=True)
    print("$ infosdl", " ".join(map(str, args)))
    print(out.stdout.strip())


infosdl("features", "--data", root / "images", "--out", root / "pmf.txt")
infosdl("learn", "--mode", "density", "--data", root / "pmf.txt", "--model", root / "model.json",
        "--atoms", 4, "--seed", 7, "--out", root / "learn.json")
print((root / "learn.json").read_text())
infosdl("encode", "--data", root / "pmf.txt", "--model", root / "model.json", "--out", root / "codes.txt")
infosdl("eval", "--data", root / "pmf.txt", "--model", root / "model.json",
        "--codes", root / "codes.txt", "--table", root / "table.csv", "--report", "text")
print((root / "table.csv").read_text().splitlines()[:3])

# the self-test runs gradient, center, KKT, geometry and file checks
infosdl("selftest")
