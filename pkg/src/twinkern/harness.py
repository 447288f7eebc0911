"""Experiment harness: configuration, metrics, degree-grid runs, and
k-fold cross-validation.

A run learns transforms per (d1, d2) grid cell on the training split,
fits the mapped predictor, and compares its test MAE against the
unmapped baseline fitted once per bandwidth pair.  The (1, 1) cell is
the identity mapping: its learned transforms are exactly proportional to
the identity and both prediction criteria are invariant to that scaling,
so the cell reuses the baseline predictions and its gain is exactly 0.

Reports are JSON documents that are byte-identical across runs of the
same configuration apart from the ``timing`` block.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .basis import BasisKind, BasisSpec
from .data import GENERATOR_ID, SShapeParams, SplitKind, SplitSpec, gen_sshape, load_csv, split
from .errors import ConfigError, DivisionByZero, ShapeError, TooFewSamples, TwinkernError
from .kernels import Dataset, KernelFamily, KernelParams
from .learner import learn_transforms
from .tgp import Criterion, OptimizerOpts, predict, tgp_fit


def mae(predictions, truths) -> float:
    """Mean absolute error over all entries of two same-shaped arrays."""
    a = np.asarray(predictions, dtype=float)
    b = np.asarray(truths, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise TooFewSamples("cannot average an empty prediction set")
    return float(np.mean(np.abs(a - b)))


def gain_percent(mae_map: float, mae_nomap: float) -> float:
    """Error reduction (1 - mae_map / mae_nomap) * 100; negative when the
    mapping hurts."""
    if not mae_nomap > 0:
        raise DivisionByZero(f"baseline error must be positive, got {mae_nomap}")
    return (1.0 - mae_map / mae_nomap) * 100.0


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_kind: str
    sshape: SShapeParams | None
    csv_path: str | None
    family: KernelFamily
    gamma_x: tuple[float, ...]
    gamma_y: tuple[float, ...]
    basis: BasisSpec
    degrees: tuple[int, ...]
    criterion: Criterion
    split: SplitSpec
    optimizer: OptimizerOpts
    out_dir: str | None
    seed: int
    workers: int

    @classmethod
    def from_dict(cls, raw: dict, **overrides) -> "ExperimentConfig":
        """Parse and validate a configuration dictionary.

        ``overrides`` (out_dir, seed, workers) take precedence over the
        document, matching the CLI flag contract.
        """
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        try:
            return cls._parse(dict(raw), overrides)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, TwinkernError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def _parse(cls, raw: dict, overrides: dict) -> "ExperimentConfig":
        seed = int(overrides.get("seed") if overrides.get("seed") is not None else raw.get("seed", 0))

        dataset = raw.get("dataset")
        if not isinstance(dataset, dict) or len(dataset) != 1:
            raise ConfigError("dataset must be an object with exactly one of 'sshape' or 'csv'")
        kind = next(iter(dataset))
        sshape = None
        csv_path = None
        if kind == "sshape":
            body = dict(dataset["sshape"])
            body.setdefault("seed", seed)
            sshape = SShapeParams(**body)
        elif kind == "csv":
            csv_path = dataset["csv"]["path"]
            if not os.path.isfile(csv_path):
                raise ConfigError(f"csv path does not exist: {csv_path}")
        else:
            raise ConfigError(f"unknown dataset kind {kind!r}")

        kernel = raw.get("kernel", {})
        family = KernelFamily(kernel.get("family", "rbf"))
        gamma_x = _gamma_grid(kernel.get("gamma_x"), "gamma_x")
        gamma_y = _gamma_grid(kernel.get("gamma_y"), "gamma_y")

        basis_raw = raw.get("basis", {})
        basis = BasisSpec(
            kind=BasisKind(basis_raw.get("kind", "monomial")),
            weight_param=basis_raw.get("weight_param", 0.5),
        )

        degrees = tuple(int(d) for d in raw.get("degrees", ()))
        if not degrees:
            raise ConfigError("degrees grid must be nonempty")
        if any(d < 1 for d in degrees):
            raise ConfigError("degrees must be at least 1")

        criterion = Criterion(raw.get("criterion", "kldiv"))

        split_raw = dict(raw.get("split", {"kind": "holdout"}))
        split_raw.setdefault("seed", seed + 1)
        split_spec = SplitSpec(**split_raw)

        optimizer = OptimizerOpts(**raw.get("optimizer", {}))

        out_dir = overrides.get("out_dir") if overrides.get("out_dir") is not None else raw.get("out_dir")
        workers = int(
            overrides.get("workers") if overrides.get("workers") is not None else raw.get("workers", 1)
        )
        if workers < 1:
            raise ConfigError(f"workers must be at least 1, got {workers}")

        return cls(
            dataset_kind=kind,
            sshape=sshape,
            csv_path=csv_path,
            family=family,
            gamma_x=gamma_x,
            gamma_y=gamma_y,
            basis=basis,
            degrees=degrees,
            criterion=criterion,
            split=split_spec,
            optimizer=optimizer,
            out_dir=None if out_dir is None else str(out_dir),
            seed=seed,
            workers=workers,
        )

    @classmethod
    def from_json_file(cls, path, **overrides) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, **overrides)

    def to_dict(self) -> dict:
        dataset: dict = {}
        if self.dataset_kind == "sshape":
            dataset["sshape"] = {
                "n": self.sshape.n,
                "noise_sigma": self.sshape.noise_sigma,
                "seed": self.sshape.seed,
            }
        else:
            dataset["csv"] = {"path": self.csv_path}
        return {
            "dataset": dataset,
            "kernel": {
                "family": self.family.value,
                "gamma_x": list(self.gamma_x),
                "gamma_y": list(self.gamma_y),
            },
            "basis": {"kind": self.basis.kind.value, "weight_param": self.basis.weight_param},
            "degrees": list(self.degrees),
            "criterion": self.criterion.value,
            "split": _split_dict(self.split),
            "optimizer": {
                "gtol": self.optimizer.gtol,
                "ftol": self.optimizer.ftol,
                "max_iters": self.optimizer.max_iters,
                "restarts": self.optimizer.restarts,
            },
            "out_dir": self.out_dir,
            "seed": self.seed,
            "workers": self.workers,
        }


def _gamma_grid(value, name: str) -> tuple[float, ...]:
    if value is None:
        raise ConfigError(f"kernel.{name} is required")
    values = value if isinstance(value, (list, tuple)) else [value]
    grid = tuple(float(v) for v in values)
    if not grid:
        raise ConfigError(f"kernel.{name} grid must be nonempty")
    if any(not v > 0 for v in grid):
        raise ConfigError(f"kernel.{name} values must be positive")
    return grid


def _split_dict(spec: SplitSpec) -> dict:
    if spec.kind is SplitKind.HOLDOUT:
        return {"kind": "holdout", "fraction": spec.fraction, "seed": spec.seed}
    return {"kind": "kfold", "k": spec.k, "seed": spec.seed}


@dataclass(frozen=True)
class Report:
    """Run results; ``timing`` is the only block allowed to differ
    between reruns of the same configuration."""

    config: dict
    generator: dict
    baseline_mae: float
    cells: tuple[dict, ...]
    chosen: dict | None
    timing: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "generator": self.generator,
            "baseline": {"mae_without_map": self.baseline_mae},
            "cells": list(self.cells),
            "chosen": self.chosen,
            "timing": self.timing,
        }

    def comparable_dict(self) -> dict:
        d = self.to_dict()
        del d["timing"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def cell(self, d1: int, d2: int) -> dict:
        for c in self.cells:
            if c["d1"] == d1 and c["d2"] == d2:
                return c
        raise KeyError((d1, d2))


def _load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset_kind == "sshape":
        return gen_sshape(config.sshape)
    return load_csv(config.csv_path)


def _predict_all(model, inputs: np.ndarray, opts: OptimizerOpts) -> np.ndarray:
    return np.vstack([predict(model, row, opts).output for row in inputs])


def _scalar_gammas(config: ExperimentConfig) -> tuple[float, float]:
    if len(config.gamma_x) != 1 or len(config.gamma_y) != 1:
        raise ConfigError(
            "run_experiment needs scalar bandwidths; use cross_validate for grids"
        )
    return config.gamma_x[0], config.gamma_y[0]


def _cell_task(payload: dict) -> dict:
    """One grid cell: learn transforms on the training split, fit the
    mapped predictor, and score the test split.  Top-level so it can run
    in a worker process."""
    started = time.perf_counter()
    out = {"d1": payload["d1"], "d2": payload["d2"]}
    try:
        transforms = learn_transforms(
            payload["train"],
            payload["kparams_x"],
            payload["kparams_y"],
            payload["basis"],
            payload["d1"],
            payload["d2"],
        )
        out["objective_value"] = transforms.objective_value
        out["alpha"] = [float(v) for v in transforms.input.coefficients]
        out["beta"] = [float(v) for v in transforms.output.coefficients]
        out["warnings"] = list(transforms.warnings)
        if payload["reuse_baseline"]:
            out["mae_with_map"] = None
        else:
            model = tgp_fit(
                payload["train"],
                payload["kparams_x"],
                payload["kparams_y"],
                transforms,
                payload["criterion"],
            )
            preds = _predict_all(model, payload["test"].inputs, payload["optimizer"])
            out["mae_with_map"] = mae(preds, payload["test"].outputs)
        out["status"] = "ok"
        out["error"] = None
    except TwinkernError as exc:
        out["status"] = "failed"
        out["error"] = f"{type(exc).__name__}: {exc}"
        out.setdefault("objective_value", None)
        out.setdefault("alpha", None)
        out.setdefault("beta", None)
        out.setdefault("warnings", [])
        out["mae_with_map"] = None
    out["seconds"] = time.perf_counter() - started
    return out


def run_experiment(config: ExperimentConfig) -> Report:
    """Learn, fit, and score every (d1, d2) grid cell against the shared
    baseline; emit the report JSON and the gain-surface TSV when
    ``out_dir`` is set."""
    started = time.perf_counter()
    gx, gy = _scalar_gammas(config)
    kparams_x = KernelParams(family=config.family, bandwidth=gx)
    kparams_y = KernelParams(family=config.family, bandwidth=gy)
    dataset = _load_dataset(config)
    train, test = split(dataset, config.split)

    baseline_started = time.perf_counter()
    baseline_model = tgp_fit(train, kparams_x, kparams_y, None, config.criterion)
    baseline_preds = _predict_all(baseline_model, test.inputs, config.optimizer)
    baseline_mae = mae(baseline_preds, test.outputs)
    baseline_seconds = time.perf_counter() - baseline_started

    cells = sorted(set(product(config.degrees, config.degrees)))
    payloads = [
        {
            "d1": d1,
            "d2": d2,
            "train": train,
            "test": test,
            "kparams_x": kparams_x,
            "kparams_y": kparams_y,
            "basis": config.basis,
            "criterion": config.criterion,
            "optimizer": config.optimizer,
            "reuse_baseline": (d1, d2) == (1, 1),
        }
        for d1, d2 in cells
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            raw_results = list(pool.map(_cell_task, payloads))
    else:
        raw_results = [_cell_task(p) for p in payloads]

    results = []
    timing_cells = {}
    for cell in sorted(raw_results, key=lambda c: (c["d1"], c["d2"])):
        timing_cells[f"{cell['d1']},{cell['d2']}"] = cell.pop("seconds")
        if cell["status"] == "ok":
            if cell["mae_with_map"] is None:
                cell["mae_with_map"] = baseline_mae
            cell["mae_without_map"] = baseline_mae
            cell["gain_percent"] = gain_percent(cell["mae_with_map"], cell["mae_without_map"])
        else:
            cell["mae_without_map"] = baseline_mae
            cell["gain_percent"] = None
        results.append(cell)

    chosen = _choose_cell(results)
    report = Report(
        config=config.to_dict(),
        generator={"algorithm": GENERATOR_ID, "seed": config.seed},
        baseline_mae=baseline_mae,
        cells=tuple(results),
        chosen=chosen,
        timing={
            "total_seconds": time.perf_counter() - started,
            "baseline_seconds": baseline_seconds,
            "cell_seconds": timing_cells,
        },
    )
    if config.out_dir is not None:
        _write_outputs(report, config.out_dir)
    return report


def _choose_cell(cells: list[dict]) -> dict | None:
    ok = [c for c in cells if c["status"] == "ok"]
    if not ok:
        return None
    best = min(ok, key=lambda c: (-c["gain_percent"], c["d1"] + c["d2"], c["d1"], c["d2"]))
    return {
        "d1": best["d1"],
        "d2": best["d2"],
        "gain_percent": best["gain_percent"],
        "mae_with_map": best["mae_with_map"],
        "mae_without_map": best["mae_without_map"],
        "alpha": best["alpha"],
        "beta": best["beta"],
    }


def _write_outputs(report: Report, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    lines = ["d1\td2\tgain_percent"]
    for cell in report.cells:
        gain = cell["gain_percent"]
        lines.append(f"{cell['d1']}\t{cell['d2']}\t{'nan' if gain is None else repr(gain)}")
    with open(os.path.join(out_dir, "gains.tsv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _cv_cell_mae(train, test, kparams_x, kparams_y, basis, d1, d2, criterion, opts) -> float:
    try:
        transforms = learn_transforms(train, kparams_x, kparams_y, basis, d1, d2)
        model = tgp_fit(train, kparams_x, kparams_y, transforms, criterion)
        preds = _predict_all(model, test.inputs, opts)
        return mae(preds, test.outputs)
    except TwinkernError:
        return float("inf")


def _select_best(records: dict) -> tuple:
    """Deterministic argmin over {(gx, gy, d1, d2): mean_mae}: lowest MAE,
    then smaller d1 + d2, then smaller bandwidths, then smaller (d1, d2)."""
    return min(
        records,
        key=lambda k: (records[k], k[2] + k[3], k[0], k[1], k[2], k[3]),
    )


def cross_validate(config: ExperimentConfig) -> dict:
    """Grid search over bandwidths and degrees by mean k-fold validation
    MAE of the mapped predictor.

    Degrees are explored in saturation levels: level l uses the l
    smallest grid degrees for both d1 and d2, and expansion stops once
    the level-best MAE improves by less than 1% relative.
    """
    if config.split.kind is not SplitKind.KFOLD:
        raise ConfigError("cross_validate requires a kfold split")
    dataset = _load_dataset(config)
    folds = split(dataset, config.split)
    degrees = sorted(set(config.degrees))
    records: dict = {}
    for gx in config.gamma_x:
        for gy in config.gamma_y:
            kparams_x = KernelParams(family=config.family, bandwidth=gx)
            kparams_y = KernelParams(family=config.family, bandwidth=gy)
            seen: dict = {}
            previous_best = None
            for level in range(1, len(degrees) + 1):
                for d1, d2 in sorted(product(degrees[:level], degrees[:level])):
                    if (d1, d2) in seen:
                        continue
                    fold_maes = [
                        _cv_cell_mae(
                            tr, te, kparams_x, kparams_y, config.basis,
                            d1, d2, config.criterion, config.optimizer,
                        )
                        for tr, te in folds
                    ]
                    seen[(d1, d2)] = float(np.mean(fold_maes))
                best_now = min(seen.values())
                if previous_best is not None:
                    if previous_best <= 0 or (previous_best - best_now) / previous_best < 0.01:
                        break
                previous_best = best_now
            for (d1, d2), value in seen.items():
                records[(gx, gy, d1, d2)] = value
    gx, gy, d1, d2 = _select_best(records)
    return {
        "gamma_x": gx,
        "gamma_y": gy,
        "d1": d1,
        "d2": d2,
        "mean_mae": records[(gx, gy, d1, d2)],
    }
