"""Synthetic data generation, CSV ingestion/emission, and deterministic
splits.

Randomness comes from a seeded PCG64 generator; Gaussian noise is
produced by the Box-Muller transform of that uniform stream so the
generator contract is a documented, reproducible algorithm.  The
identifier recorded in experiment reports is ``pcg64-boxmuller``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParseError, TooFewSamples
from .kernels import Dataset

GENERATOR_ID = "pcg64-boxmuller"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normals via Box-Muller on the uniform stream."""
    u1 = rng.random(n)
    u2 = rng.random(n)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class SShapeParams:
    n: int = 500
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise TooFewSamples(f"need n >= 2, got {self.n}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")


def sshape_response(x) -> np.ndarray:
    """Noiseless response r = x + 0.3 sin(2 pi x)."""
    x = np.asarray(x, dtype=float)
    return x + 0.3 * np.sin(2.0 * np.pi * x)


def gen_sshape(params: SShapeParams) -> Dataset:
    """S-shaped inverse regression problem.

    Latent x is uniform on (0, 1) and r = x + 0.3 sin(2 pi x) + noise.
    The task is to recover x from r, so the returned inputs column holds
    r and the outputs column holds x.
    """
    rng = _rng(params.seed)
    x = rng.random(params.n)
    r = sshape_response(x) + params.noise_sigma * _gaussian(rng, params.n)
    return Dataset(inputs=r[:, None], outputs=x[:, None], names=("x0", "y0"))


class SplitKind(str, Enum):
    HOLDOUT = "holdout"
    KFOLD = "kfold"


@dataclass(frozen=True)
class SplitSpec:
    """Holdout (``fraction`` is the test share) or k-fold partitioning,
    shuffled deterministically by ``seed``."""

    kind: SplitKind
    fraction: float = 0.25
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SplitKind(self.kind))
        if self.kind is SplitKind.HOLDOUT and not 0.0 < self.fraction < 1.0:
            raise ValueError(f"holdout fraction must be in (0, 1), got {self.fraction}")
        if self.kind is SplitKind.KFOLD and self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")

    @classmethod
    def holdout(cls, fraction: float, seed: int = 0) -> "SplitSpec":
        return cls(kind=SplitKind.HOLDOUT, fraction=fraction, seed=seed)

    @classmethod
    def kfold(cls, k: int, seed: int = 0) -> "SplitSpec":
        return cls(kind=SplitKind.KFOLD, k=k, seed=seed)


def split(data: Dataset, spec: SplitSpec):
    """Disjoint, exhaustive partitions of ``data``.

    Holdout returns ``(train, test)``; k-fold returns a list of
    ``(train, test)`` pairs.  Partitions keep the original row order and
    are identical for identical (data, spec).
    """
    m = data.n_samples
    perm = _rng(spec.seed).permutation(m)
    if spec.kind is SplitKind.HOLDOUT:
        n_test = int(round(spec.fraction * m))
        if n_test < 1 or m - n_test < 2:
            raise TooFewSamples(
                f"holdout of {m} rows at fraction {spec.fraction} leaves too few samples"
            )
        test_idx = np.sort(perm[:n_test])
        train_idx = np.sort(perm[n_test:])
        return data.take(train_idx), data.take(test_idx)
    folds = []
    for chunk in np.array_split(perm, spec.k):
        if chunk.size < 1 or m - chunk.size < 2:
            raise TooFewSamples(f"{spec.k}-fold split of {m} rows leaves too few samples")
        test_idx = np.sort(chunk)
        mask = np.ones(m, dtype=bool)
        mask[test_idx] = False
        folds.append((data.take(np.nonzero(mask)[0]), data.take(test_idx)))
    return folds


def _parse_header(fields: list[str]) -> tuple[list[int], list[int]]:
    """Map header names to input/output column positions by prefix."""
    x_cols: dict[int, int] = {}
    y_cols: dict[int, int] = {}
    for pos, raw in enumerate(fields):
        name = raw.strip()
        target = None
        if name.startswith("x"):
            target = x_cols
        elif name.startswith("y"):
            target = y_cols
        if target is None:
            raise ParseError(f"column name {name!r} must start with 'x' or 'y'", column=name)
        try:
            index = int(name[1:])
        except ValueError:
            raise ParseError(
                f"column name {name!r} must be an integer-suffixed 'x' or 'y' label",
                column=name,
            ) from None
        if index in target:
            raise ParseError(f"duplicate column name {name!r}", column=name)
        target[index] = pos
    for label, cols in (("x", x_cols), ("y", y_cols)):
        if not cols:
            raise ParseError(f"no {label}-prefixed columns in header")
        if sorted(cols) != list(range(len(cols))):
            raise ParseError(f"{label}-column indices must form 0..{len(cols) - 1}")
    return [x_cols[i] for i in range(len(x_cols))], [y_cols[i] for i in range(len(y_cols))]


def load_csv(path) -> Dataset:
    """Read a dataset; header columns prefixed x are inputs and y are
    outputs, assigned by name rather than position."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty; expected a header row") from None
        x_pos, y_pos = _parse_header(header)
        width = len(header)
        rows = []
        for row_number, row in enumerate(reader, start=1):
            if len(row) != width:
                raise ParseError(
                    f"expected {width} fields, got {len(row)}", row=row_number
                )
            parsed = []
            for pos, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"non-numeric cell {cell!r}",
                        row=row_number,
                        column=header[pos].strip(),
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise TooFewSamples(f"need at least 2 data rows, got {len(rows)}")
    body = np.asarray(rows, dtype=float)
    names = tuple(f"x{i}" for i in range(len(x_pos))) + tuple(f"y{i}" for i in range(len(y_pos)))
    return Dataset(inputs=body[:, x_pos], outputs=body[:, y_pos], names=names)


def save_csv(data: Dataset, path) -> None:
    """Write UTF-8 CSV with canonical x0..x{p-1}, y0..y{q-1} header and
    17-significant-digit decimal floats (lossless float64 round-trip)."""
    p, q = data.n_inputs, data.n_outputs
    header = [f"x{i}" for i in range(p)] + [f"y{i}" for i in range(q)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(data.n_samples):
            cells = [f"{v:.17g}" for v in data.inputs[i]]
            cells += [f"{v:.17g}" for v in data.outputs[i]]
            fh.write(",".join(cells) + "\n")
