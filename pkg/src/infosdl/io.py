"""Reading and writing datasets, models, codes and PGM images.

Density and code files: plain text, one row per line, whitespace-separated
decimals, optional first line ``# bins=<k>``. Class labels, when present,
live in a sidecar file ``<path>.labels`` with one integer per row.

SPD files: a header ``spd <n> <N>`` followed by ``N`` lines of ``n*n``
row-major values and an optional trailing integer label.

Models: JSON. Numbers are written with 17 significant digits so that a
save/load round trip is exact.
"""

import json
import logging
import os
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .spd import check_spd

log = logging.getLogger(__name__)

RENORM_TOL = 1e-6
MODEL_VERSION = 1


def _fmt(x):
    return format(float(x), ".17g")


def _fmt_row(row):
    return " ".join(_fmt(v) for v in row)


def _labels_path(path):
    return Path(str(path) + ".labels")


def _scale_path(path):
    return Path(str(path) + ".scale")


def read_densities(path):
    """Load a density file; rows off by less than ``1e-6`` are renormalized.

    Returns
    -------
    F : ndarray, shape (N, k)
    labels : ndarray of int or None
        From the ``.labels`` sidecar when it exists.
    """
    path = Path(path)
    bins = None
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key = s[1:].strip()
                if key.startswith("bins="):
                    try:
                        bins = int(key[5:])
                    except ValueError:
                        raise DataFormatError(f"{path}:{lineno}: bad bins header {s!r}") from None
                continue
            try:
                rows.append([float(v) for v in s.split()])
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise DataFormatError(f"{path}: no density rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataFormatError(f"{path}: rows have differing lengths {sorted(widths)}")
    F = np.array(rows)
    if bins is not None and F.shape[1] != bins:
        raise DataFormatError(f"{path}: header says {bins} bins but rows have {F.shape[1]}")
    if not np.all(np.isfinite(F)) or np.any(F < 0):
        bad = int(np.flatnonzero(~(np.isfinite(F) & (F >= 0)).all(axis=1))[0])
        raise DataFormatError(f"{path}: row {bad + 1} has negative or non-finite values")
    dev = np.abs(F.sum(axis=1) - 1.0)
    if np.any(dev >= RENORM_TOL):
        bad = int(np.flatnonzero(dev >= RENORM_TOL)[0])
        raise DataFormatError(f"{path}: row {bad + 1} sums to {F[bad].sum():.9g}, not 1")
    F = F / F.sum(axis=1, keepdims=True)
    return F, _read_labels(path, F.shape[0])


def write_densities(path, F, labels=None):
    """Write rows with a ``# bins=<k>`` header (and a labels sidecar if given)."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"# bins={F.shape[1]}\n")
        for row in F:
            fh.write(_fmt_row(row) + "\n")
    if labels is not None:
        write_labels(_labels_path(path), labels)


read_codes = read_densities


def write_codes(path, W, labels=None):
    """Write a code matrix in the density format."""
    write_densities(path, W, labels)


def _read_labels(path, n):
    lp = _labels_path(path)
    if not lp.exists():
        return None
    labels = read_labels(lp)
    if labels.size != n:
        raise DataFormatError(f"{lp}: {labels.size} labels for {n} rows")
    return labels


def read_labels(path):
    with open(path) as fh:
        try:
            return np.array([int(s) for s in fh.read().split()], dtype=np.int64)
        except ValueError:
            raise DataFormatError(f"{path}: labels must be integers") from None


def write_labels(path, labels):
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def read_scales(path):
    """Per-row total intensities from the ``.scale`` sidecar, or None."""
    sp = _scale_path(path)
    if not sp.exists():
        return None
    try:
        return np.loadtxt(sp, ndmin=1)
    except ValueError:
        raise DataFormatError(f"{sp}: malformed scale values") from None


def write_scales(path, scales):
    with open(_scale_path(path), "w") as fh:
        fh.writelines(_fmt(v) + "\n" for v in scales)


def read_spd(path):
    """Load an SPD dataset file.

    Returns
    -------
    X : ndarray, shape (N, n, n)
    labels : ndarray of int or None
        None unless every record carries a label.
    """
    path = Path(path)
    with open(path) as fh:
        lines = [s.strip() for s in fh if s.strip() and not s.lstrip().startswith("#")]
    if not lines:
        raise DataFormatError(f"{path}: empty SPD file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "spd":
        raise DataFormatError(f"{path}: header must read 'spd <n> <N>', got {lines[0]!r}")
    try:
        n, N = int(head[1]), int(head[2])
    except ValueError:
        raise DataFormatError(f"{path}: non-integer sizes in header") from None
    if n < 1 or N < 1:
        raise DataFormatError(f"{path}: header sizes must be positive")
    body = lines[1:]
    if len(body) != N:
        raise DataFormatError(f"{path}: header announces {N} matrices, found {len(body)}")
    X = np.empty((N, n, n))
    labels = []
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) not in (n * n, n * n + 1):
            raise DataFormatError(f"{path}: record {i + 1} has {len(parts)} values, "
                                  f"expected {n * n}")
        try:
            X[i] = np.array([float(v) for v in parts[:n * n]]).reshape(n, n)
            if len(parts) > n * n:
                labels.append(int(parts[-1]))
        except ValueError:
            raise DataFormatError(f"{path}: record {i + 1} is not numeric") from None
        try:
            X[i] = check_spd(X[i], f"record {i + 1}")
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from None
    lab = np.array(labels, dtype=np.int64) if len(labels) == N else None
    return X, lab


def write_spd(path, X, labels=None):
    """Write an SPD dataset with 17 significant digits per value."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    N, n = X.shape[0], X.shape[-1]
    with open(path, "w") as fh:
        fh.write(f"spd {n} {N}\n")
        for i in range(N):
            line = _fmt_row(X[i].ravel())
            if labels is not None:
                line += f" {int(labels[i])}"
            fh.write(line + "\n")


def save_model(path, mode, atoms, config, metadata=None):
    """Write a dictionary model as JSON.

    Atoms are stored as nested lists (``r x k`` for densities, ``r x n x n``
    for SPD matrices) of shortest round-trip decimal floats.
    """
    atoms = np.asarray(atoms, dtype=float)
    doc = {
        "format": "infosdl-model",
        "version": MODEL_VERSION,
        "mode": mode,
        "num_atoms": int(atoms.shape[0]),
        "seed": int(config["seed"]),
        "config": config,
        "metadata": metadata or {},
    }
    if mode == "density":
        doc["bins"] = int(atoms.shape[1])
    else:
        doc["n"] = int(atoms.shape[-1])
    doc["atoms"] = atoms.tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Read a model file; returns ``(mode, atoms, document)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not a JSON model ({exc.msg})") from None
    if doc.get("format") != "infosdl-model" or doc.get("mode") not in ("density", "spd"):
        raise DataFormatError(f"{path}: not an infosdl model file")
    atoms = np.array(doc["atoms"], dtype=float)
    expect = 2 if doc["mode"] == "density" else 3
    if atoms.ndim != expect or atoms.shape[0] != doc["num_atoms"]:
        raise DataFormatError(f"{path}: atoms have shape {atoms.shape}")
    return doc["mode"], atoms, doc


def read_pgm(path):
    """Read a P2 or P5 PGM (8 or 16 bit) as float intensities in ``[0, 1]``."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode not in ("L", "I", "I;16", "I;16B"):
                raise DataFormatError(f"{path}: not a grayscale PGM image")
            arr = np.array(im)
            full = 255.0 if im.mode == "L" else 65535.0
    except UnidentifiedImageError:
        raise DataFormatError(f"{path}: unreadable image") from None
    except (SyntaxError, ValueError) as exc:
        raise DataFormatError(f"{path}: malformed PGM ({exc})") from None
    return arr.astype(float) / full


def write_pgm(path, img, maxval=255, binary=True):
    """Write intensities in ``[0, 1]`` as a PGM with the given ``maxval``."""
    img = np.clip(np.asarray(img, dtype=float), 0.0, 1.0)
    q = np.rint(img * maxval).astype(np.int64)
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n".encode())
        if binary:
            fh.write(q.astype(">u2" if maxval > 255 else "u1").tobytes())
        else:
            fh.write(("\n".join(" ".join(map(str, r)) for r in q) + "\n").encode())


def scan_image_dir(root):
    """List ``(path, class_name)`` pairs of ``.pgm`` files under ``root``.

    Each subdirectory is a class; files directly under ``root`` belong to
    class ``""``. Traversal is lexicographic at every level.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"image directory not found: {root}")
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel = Path(dirpath).relative_to(root)
        label = rel.parts[0] if rel.parts else ""
        for name in sorted(filenames):
            if name.lower().endswith(".pgm"):
                found.append((Path(dirpath) / name, label))
    found.sort(key=lambda p: (p[1], str(p[0])))
    return found
