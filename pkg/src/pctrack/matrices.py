"""Transition-matrix generators and a plain-text loader.

File format: one row per line, whitespace-separated decimals, lines starting
with ``#`` ignored.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import DomainError, ROW_SUM_TOL, TransitionMatrix

# Matrices used in the worked examples.
EXAMPLE_OPTIMAL_MATCH = ((0.8, 0.2, 0.0), (0.1, 0.6, 0.3), (0.0, 0.4, 0.6))
EXAMPLE_NON_PERCENTILE = ((0.9, 0.1, 0.0), (0.1, 0.8, 0.1), (0.0, 0.1, 0.9))

BAND = (0.3, 0.1, 0.2, 0.1, 0.2, 0.1)


def tridiagonal_eps(M: int, eps: float) -> TransitionMatrix:
    """Lazy random walk on ``0..M``: move to each neighbour with probability ``eps``."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if not 0 <= eps <= 0.5:
        raise DomainError(f"eps must lie in [0, 0.5], got {eps}")
    n = M + 1
    P = np.zeros((n, n))
    for i in range(n):
        if i > 0:
            P[i, i - 1] = eps
        if i < M:
            P[i, i + 1] = eps
        P[i, i] = 1 - eps * ((i > 0) + (i < M))
    return TransitionMatrix(P)


def banded_20() -> TransitionMatrix:
    """The 20-state banded matrix with band ``.3 .1 .2 .1 .2 .1``.

    Rows 0-2 and 17-19 are taken as printed. Rows 3..17 place the band at
    columns ``k-3 .. k+2``, which is where the printed row 17 sits; row 3
    therefore repeats row 2.
    """
    n = 20
    P = np.zeros((n, n))
    P[0, :4] = (0.6, 0.1, 0.2, 0.1)
    P[1, :5] = (0.4, 0.2, 0.1, 0.2, 0.1)
    P[2, :6] = BAND
    for k in range(3, 18):
        P[k, k - 3 : k + 3] = BAND
    P[18, 15:] = (0.3, 0.1, 0.2, 0.1, 0.3)
    P[19, 16:] = (0.3, 0.1, 0.2, 0.4)
    return TransitionMatrix(P)


def parse_matrix(text: str, tol: float = ROW_SUM_TOL) -> TransitionMatrix:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError as exc:
            raise DomainError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DomainError("no matrix rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths.pop() != len(rows):
        raise DomainError(f"matrix is not square: {len(rows)} rows of widths {[len(r) for r in rows]}")
    return TransitionMatrix(rows, tol=tol)


def load_matrix(source) -> TransitionMatrix:
    """Read a matrix from a path or from the text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
        return parse_matrix(Path(source).read_text())
    return parse_matrix(source)


def format_matrix(P) -> str:
    P = np.asarray(P)
    return "".join(" ".join(repr(float(x)) for x in row) + "\n" for row in P)


def from_descriptor(descriptor) -> TransitionMatrix:
    """Build a matrix from a config value.

    Accepts a path, a list of rows, or a mapping with ``generator`` set to
    ``tridiagonal`` (keys ``M``, ``eps``), ``banded20``, ``optimal_match`` or
    ``non_percentile``.
    """
    if isinstance(descriptor, (str, Path)):
        return load_matrix(Path(descriptor))
    if isinstance(descriptor, (list, tuple)):
        return TransitionMatrix(descriptor)
    if isinstance(descriptor, dict):
        if "rows" in descriptor:
            return TransitionMatrix(descriptor["rows"])
        if "path" in descriptor:
            return load_matrix(Path(descriptor["path"]))
        gen = descriptor.get("generator")
        if gen == "tridiagonal":
            return tridiagonal_eps(int(descriptor["M"]), float(descriptor["eps"]))
        if gen == "banded20":
            return banded_20()
        if gen == "optimal_match":
            return TransitionMatrix(EXAMPLE_OPTIMAL_MATCH)
        if gen == "non_percentile":
            return TransitionMatrix(EXAMPLE_NON_PERCENTILE)
        raise DomainError(f"unknown matrix generator {gen!r}")
    raise DomainError(f"cannot build a matrix from {descriptor!r}")
