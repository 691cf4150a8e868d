"""Command line driver: datasets, training, evaluation, exports.

Subcommands
-----------
gen-data    write one labeled dataset file for a problem split
train       train one model; writes a checkpoint and a loss history CSV
eval        comparison table for checkpointed models plus the projection row
export-psi  sample recovered weighting functions next to the true ones
sweep       training-set size sweep, one CSV row per (size, model, split)
report      full analysis bundle: table, histograms, error decomposition,
            bound check, and (2D) diagonal line slices

Configuration
-------------
Each subcommand accepts --config FILE holding a JSON object of the same
keys the flags set; flags override file values, and unknown keys are
rejected. Datasets live under --data-dir, the PGVARMION_DATA_DIR
environment variable, or ./data, in that order; everything else lands in
--out-dir (default ./out). Commands that read a split look for the file
gen-data would write and otherwise rebuild the same samples in memory,
so results are identical either way.

Every command rewrites its entry in <out-dir>/manifest.json recording
library versions, the resolved configuration, the seeds in effect, and
SHA-256 digests of each input and output file. Nothing records wall
time, so rerunning a command with the same inputs reproduces every
output byte for byte.

All computation is sequential; --threads caps a worker pool that never
grows past one, and --deterministic pins it there explicitly. Both are
echoed into the manifest.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (comparison_table, error_decomposition, error_report,
                       histogram_csv, histogram_export, line_slices_2d,
                       line_slices_csv, projection_report, psi_error_report,
                       theorem_bound_report)
from .basis import TensorSineBasis2d, project
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import build_dataset, load_dataset
from .errors import (CovarianceError, DataFormatError, DegenerateBasisError,
                     InvalidArgumentError, NumericError,
                     UnsupportedForcingError, ZeroNormError)
from .problems import (MODEL_TAGS, PROBLEM_TAGS, PROFILES,
                       _MODEL_SEED_OFFSETS, get_problem)
from .quadrature import uniform_interior_grid_2d
from .reference import solve_adjoint_for_psi
from .training import train, training_size_sweep
from .validation import check_choice, check_positive_int

DATA_DIR_ENV = "PGVARMION_DATA_DIR"
SWEEP_SIZES = (100, 250, 500, 1000, 2000, 3000, 4000)
PSI_GRID_1D = 401
PSI_GRID_2D = 33
N_PSI_MODES_2D = 16

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_CONFIG_ERRORS = (InvalidArgumentError, UnsupportedForcingError)
_DATA_ERRORS = (DataFormatError, ZeroNormError, OSError)
_NUMERIC_ERRORS = (NumericError, DegenerateBasisError, CovarianceError)


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one command invocation.

    Fields default to None (or empty) meaning "use the problem's own
    value". The same names are accepted as JSON keys in --config files.
    """

    problem: object = None
    model: object = None
    models: tuple = ()
    profile: str = "paper"
    split: object = None
    splits: tuple = ()
    count: object = None
    seed: object = None
    sizes: tuple = ()
    data_dir: object = None
    out_dir: object = None
    checkpoint: object = None
    checkpoints: tuple = ()
    epochs: object = None
    batch_size: object = None
    batch_unit: object = None
    n_r: object = None
    lr_initial: object = None
    schedule_interval: object = None
    schedule_gamma: object = None
    beta1: object = None
    beta2: object = None
    eps: object = None
    weight_decay: object = None
    checkpoint_every: object = None
    threads: object = None
    deterministic: bool = False


_SEQUENCE_KEYS = ("models", "splits", "sizes", "checkpoints")


def run_config(path=None, **overrides):
    """RunConfig from an optional JSON file plus keyword overrides.

    Overrides win over file values. Unknown keys from either source are
    rejected so typos cannot silently fall back to defaults.
    """
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config file: {exc}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config file is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise InvalidArgumentError("config file must hold a JSON object")
        values.update(data)
    values.update(overrides)

    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise InvalidArgumentError("unknown config keys: " + ", ".join(unknown))
    for key in _SEQUENCE_KEYS:
        if key in values:
            seq = values[key]
            if isinstance(seq, str) or not isinstance(seq, (list, tuple)):
                raise InvalidArgumentError(f"{key}: expected a list")
            values[key] = tuple(seq)
    if not isinstance(values.get("deterministic", False), bool):
        raise InvalidArgumentError("deterministic: expected true or false")
    return RunConfig(**values)


def _check_seed(seed):
    if seed is None:
        return None
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InvalidArgumentError(
            f"seed: expected a nonnegative integer, got {seed!r}")
    return seed


def _setup_for(rc):
    """Problem setup for the run, after validating the shared fields."""
    if rc.problem is None:
        raise InvalidArgumentError(
            "a problem tag is required (--problem or config file); "
            "known tags: " + ", ".join(PROBLEM_TAGS))
    check_choice("problem", rc.problem, PROBLEM_TAGS)
    check_choice("profile", rc.profile, PROFILES)
    _check_seed(rc.seed)
    if rc.count is not None:
        check_positive_int("count", rc.count)
    if rc.threads is not None:
        check_positive_int("threads", rc.threads)
    return get_problem(rc.problem)


def _data_dir(rc):
    if rc.data_dir is not None:
        base = Path(rc.data_dir)
    elif os.environ.get(DATA_DIR_ENV):
        base = Path(os.environ[DATA_DIR_ENV])
    else:
        base = Path("data")
    base.mkdir(parents=True, exist_ok=True)
    return base


def _out_dir(rc):
    base = Path(rc.out_dir) if rc.out_dir is not None else Path("out")
    base.mkdir(parents=True, exist_ok=True)
    return base


def _dataset_path(data_dir, setup, split):
    return data_dir / f"{setup.tag}_{split}.ds"


def _dataset_for(setup, split, count, seed, data_dir):
    """The first `count` samples of a split, from file or rebuilt.

    A file written by gen-data is used when present, after checking it
    holds the same problem, split, and seed this run expects; prefixes
    of a larger file equal a fresh build of the smaller one, so both
    paths yield identical samples.
    """
    path = _dataset_path(data_dir, setup, split)
    want_seed = setup.base_seed if seed is None else int(seed)
    if not path.exists():
        return build_dataset(setup, split, count, seed=seed), None
    ds = load_dataset(path)
    if ds.problem != setup.tag or ds.split != split:
        raise DataFormatError(
            f"{path} holds {ds.problem}/{ds.split}, expected "
            f"{setup.tag}/{split}")
    if ds.seed != want_seed:
        raise DataFormatError(
            f"{path} was generated with seed {ds.seed}, this run expects "
            f"{want_seed}; rerun gen-data")
    if ds.n_samples < count:
        raise DataFormatError(
            f"{path} holds {ds.n_samples} samples, need {count}; rerun "
            f"gen-data with --count {count}")
    if ds.n_samples > count:
        ds = ds.take(count)
    return ds, path


def _resolve_splits(setup, rc, default=None):
    splits = tuple(rc.splits) if rc.splits else (default or setup.test_splits)
    valid = ("train",) + setup.test_splits
    for split in splits:
        check_choice("split", split, valid)
    return splits


def _split_count(setup, rc, split):
    if rc.count is not None:
        return rc.count
    prof = setup.profile(rc.profile)
    return prof.n_train if split == "train" else prof.n_test


def _train_config_for(setup, rc):
    cfg = setup.train_config(rc.profile, seed=rc.seed)
    overrides = {}
    for name in ("epochs", "batch_size", "batch_unit", "n_r", "lr_initial",
                 "schedule_interval", "schedule_gamma", "beta1", "beta2",
                 "eps", "weight_decay", "checkpoint_every"):
        value = getattr(rc, name)
        if value is not None:
            overrides[name] = value
    return replace(cfg, **overrides) if overrides else cfg


def _model_seed(rc, kind):
    if rc.seed is None:
        return None
    return rc.seed + _MODEL_SEED_OFFSETS[kind]


def _check_model_fits(setup, model, path):
    """Reject checkpoints trained against a different problem geometry."""
    if model.sensor_rule.n_points != setup.sensor_rule.n_points:
        raise DataFormatError(
            f"{path}: model reads {model.sensor_rule.n_points} sensors but "
            f"problem {setup.tag} provides {setup.sensor_rule.n_points}")
    basis = getattr(model, "basis", None)
    if basis is not None and basis.descriptor() != setup.basis.descriptor():
        raise DataFormatError(
            f"{path}: trial basis does not match problem {setup.tag}")


def _load_models(setup, rc, inputs):
    models = []
    for cpath in rc.checkpoints:
        record = load_checkpoint(cpath)
        _check_model_fits(setup, record.model, cpath)
        inputs[f"checkpoint:{cpath}"] = _sha256(cpath)
        models.append(record.model)
    return models


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_file(path, text):
    data = text.encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _manifest_entry(command, rc, seeds, inputs, outputs):
    workers = 1 if rc.deterministic else int(rc.threads or 1)
    return {
        "command": command,
        "config": dataclasses.asdict(rc),
        "versions": {
            "pgvarmion": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "workers": workers,
        "seeds": seeds,
        "inputs": inputs,
        "outputs": outputs,
    }


def _update_manifest(out_dir, key, entry):
    path = out_dir / "manifest.json"
    manifest = {}
    if path.exists():
        try:
            manifest = json.loads(path.read_text())
        except json.JSONDecodeError:
            raise DataFormatError(f"existing manifest {path} is not valid JSON")
    manifest[key] = entry
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _loss_csv(history):
    lines = ["epoch,lr,loss"]
    for epoch, lr, loss in history:
        lines.append(f"{int(epoch)},{float(lr)!r},{float(loss)!r}")
    return "\n".join(lines) + "\n"


def _errors_csv(report):
    with_psi = report.e_psi is not None
    header = ("sample,error_percent,projection_percent,error_norm,"
              "projection_norm,reference_norm")
    lines = [header + ",e_psi" if with_psi else header]
    for i in range(report.n_samples):
        row = (f"{i},{float(report.errors[i])!r},"
               f"{float(report.projection_errors[i])!r},"
               f"{float(report.error_norms[i])!r},"
               f"{float(report.projection_norms[i])!r},"
               f"{float(report.reference_norms[i])!r}")
        if with_psi:
            row += f",{float(report.e_psi[i])!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _decomposition_csv(report):
    lines = ["sample,e_total,e_projection,e_weighting,reference_norm,"
             "identity_gap"]
    for i in range(report.n_samples):
        lines.append(f"{i},{float(report.e_total[i])!r},"
                     f"{float(report.e_projection[i])!r},"
                     f"{float(report.e_weighting[i])!r},"
                     f"{float(report.reference_norms[i])!r},"
                     f"{float(report.identity_gaps[i])!r}")
    return "\n".join(lines) + "\n"


def _bound_csv(report):
    with_psi = report.psi_sum_bound is not None
    header = "sample,e_total,e_projection,ell_gap,bound,satisfied,lambda_min"
    lines = [header + ",psi_sum_bound" if with_psi else header]
    for i in range(report.n_samples):
        row = (f"{i},{float(report.e_total[i])!r},"
               f"{float(report.e_projection[i])!r},"
               f"{float(report.ell_gap[i])!r},{float(report.bound[i])!r},"
               f"{int(report.satisfied[i])},{float(report.lambda_min)!r}")
        if with_psi:
            row += f",{float(report.psi_sum_bound[i])!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _lowest_modes_2d(m, k):
    """The k index pairs (i, j) with the smallest frequency i^2 + j^2."""
    order = sorted((i * i + j * j, i, j)
                   for i in range(1, m + 1) for j in range(1, m + 1))
    return [(i, j) for _, i, j in order[:k]]


def _psi_csv_1d(model, setup):
    x = np.linspace(0.0, 1.0, PSI_GRID_1D)
    hats = np.column_stack([fn(x) for fn in model.recover_psi()])
    true_fns = solve_adjoint_for_psi(setup.basis, setup.pde)
    trues = np.column_stack([fn(x) for fn in true_fns])
    n = setup.basis.n_components
    header = (["x"] + [f"psi_hat_{i}" for i in range(1, n + 1)]
              + [f"psi_true_{i}" for i in range(1, n + 1)])
    lines = [",".join(header)]
    for row in range(x.shape[0]):
        parts = [repr(float(x[row]))]
        parts += [repr(float(v)) for v in hats[row]]
        parts += [repr(float(v)) for v in trues[row]]
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n", list(range(1, n + 1))


def _psi_csv_2d(model, setup):
    modes = _lowest_modes_2d(setup.basis.m, N_PSI_MODES_2D)
    pts = uniform_interior_grid_2d(PSI_GRID_2D).nodes
    hat_fns = model.recover_psi()
    m = setup.basis.m
    hat_cols = [hat_fns[(i - 1) * m + (j - 1)](pts) for i, j in modes]
    # solve the adjoint problem only up to the largest index we export
    m_true = max(max(i, j) for i, j in modes)
    true_fns = solve_adjoint_for_psi(TensorSineBasis2d(m_true), setup.pde,
                                     resolution=setup.reference_resolution)
    true_cols = [true_fns[(i - 1) * m_true + (j - 1)](pts) for i, j in modes]
    header = (["x", "y"] + [f"psi_hat_{i}_{j}" for i, j in modes]
              + [f"psi_true_{i}_{j}" for i, j in modes])
    lines = [",".join(header)]
    for row in range(pts.shape[0]):
        parts = [repr(float(pts[row, 0])), repr(float(pts[row, 1]))]
        parts += [repr(float(col[row])) for col in hat_cols]
        parts += [repr(float(col[row])) for col in true_cols]
        lines.append(",".join(parts))
    component_ids = [(i - 1) * m + j for i, j in modes]
    return "\n".join(lines) + "\n", component_ids


def _psi_report_csv(report):
    lines = ["mode,l2_percent,h1_percent"]
    for mode, l2, h1 in zip(report.modes, report.l2_percent,
                            report.h1_percent):
        lines.append(f"{int(mode)},{float(l2)!r},{float(h1)!r}")
    return "\n".join(lines) + "\n"


def _sweep_csv(rows):
    lines = ["size,model,split,aggregate_percent,mean_percent,final_loss"]
    for row in rows:
        lines.append(f"{int(row['size'])},{row['model']},{row['split']},"
                     f"{float(row['aggregate_percent'])!r},"
                     f"{float(row['mean_percent'])!r},"
                     f"{float(row['final_loss'])!r}")
    return "\n".join(lines) + "\n"


def cmd_gen_data(rc):
    setup = _setup_for(rc)
    split = rc.split or "train"
    check_choice("split", split, ("train",) + setup.test_splits)
    count = _split_count(setup, rc, split)
    ds = build_dataset(setup, split, count, seed=rc.seed)
    path = _dataset_path(_data_dir(rc), setup, split)
    digest = ds.save(path)
    out_dir = _out_dir(rc)
    entry = _manifest_entry("gen-data", rc, seeds={"dataset": ds.seed},
                            inputs={}, outputs={path.name: digest})
    _update_manifest(out_dir, f"gen-data:{setup.tag}:{split}", entry)
    print(f"wrote {path}: {ds.n_samples} samples (seed {ds.seed}), "
          f"digest {digest[:12]}")
    return EXIT_OK


def cmd_train(rc):
    setup = _setup_for(rc)
    kind = rc.model or "pg-varmion"
    check_choice("model", kind, MODEL_TAGS)
    cfg = _train_config_for(setup, rc)
    count = _split_count(setup, rc, "train")
    ds, src = _dataset_for(setup, "train", count, rc.seed, _data_dir(rc))
    if cfg.batch_unit == "functions" and cfg.batch_size > ds.n_samples:
        cfg = replace(cfg, batch_size=ds.n_samples)
    model = setup.make_model(kind, seed=_model_seed(rc, kind))
    out_dir = _out_dir(rc)
    stem = f"{setup.tag}_{kind}"
    partial = out_dir / f"{stem}_partial.ckpt"

    def keep_partial(m, epoch, _history):
        save_checkpoint(partial, m, train_config=cfg, trained_epochs=epoch)

    history = train(model, ds, cfg, checkpoint_callback=keep_partial)
    ckpt_path = out_dir / f"{stem}.ckpt"
    save_checkpoint(ckpt_path, model, train_config=cfg,
                    trained_epochs=cfg.epochs)
    if partial.exists():
        partial.unlink()
    loss_name = f"{stem}_loss.csv"
    outputs = {ckpt_path.name: _sha256(ckpt_path),
               loss_name: _write_file(out_dir / loss_name,
                                      _loss_csv(history))}
    inputs = {"dataset:train": ds.digest()}
    if src is not None:
        inputs[f"file:{src}"] = _sha256(src)
    seeds = {"dataset": ds.seed, "train": cfg.seed, "model": model.seed}
    entry = _manifest_entry("train", rc, seeds=seeds, inputs=inputs,
                            outputs=outputs)
    _update_manifest(out_dir, f"train:{setup.tag}:{kind}", entry)
    print(f"wrote {ckpt_path}: {kind} with {model.n_parameters} parameters, "
          f"{int(cfg.epochs)} epochs on {ds.n_samples} samples, "
          f"final loss {history[-1, 2]:.6e}")
    print(f"wrote {out_dir / loss_name}")
    return EXIT_OK


def cmd_eval(rc):
    setup = _setup_for(rc)
    splits = _resolve_splits(setup, rc)
    data_dir, out_dir = _data_dir(rc), _out_dir(rc)
    inputs, outputs = {}, {}
    models = _load_models(setup, rc, inputs)
    reports = []
    for split in splits:
        count = _split_count(setup, rc, split)
        ds, src = _dataset_for(setup, split, count, rc.seed, data_dir)
        inputs[f"dataset:{split}"] = ds.digest()
        reports.append(projection_report(setup.basis, ds))
        for model in models:
            reports.append(error_report(model, ds, basis=setup.basis))
    table = comparison_table(reports)
    for suffix, text in (("csv", table.csv()), ("txt", table.text())):
        name = f"{setup.tag}_eval.{suffix}"
        outputs[name] = _write_file(out_dir / name, text)
    for report in reports:
        name = f"{setup.tag}_{report.model}_{report.split}_errors.csv"
        outputs[name] = _write_file(out_dir / name, _errors_csv(report))
    seeds = {"dataset": rc.seed if rc.seed is not None else setup.base_seed}
    entry = _manifest_entry("eval", rc, seeds=seeds, inputs=inputs,
                            outputs=outputs)
    _update_manifest(out_dir, f"eval:{setup.tag}", entry)
    print(table.text(), end="")
    print(f"wrote {out_dir / (setup.tag + '_eval.csv')}")
    return EXIT_OK


def cmd_export_psi(rc):
    setup = _setup_for(rc)
    inputs = {}
    if rc.checkpoint is not None:
        record = load_checkpoint(rc.checkpoint)
        model = record.model
        _check_model_fits(setup, model, rc.checkpoint)
        inputs[f"checkpoint:{rc.checkpoint}"] = _sha256(rc.checkpoint)
        kind = model.tag
        state = "trained" if record.trained_epochs else "untrained"
    else:
        kind = rc.model or "pg-varmion"
        check_choice("model", kind, MODEL_TAGS)
        model = setup.make_model(kind, seed=_model_seed(rc, kind))
        state = "untrained"
    if not hasattr(model, "recover_psi"):
        raise InvalidArgumentError(
            f"model {kind} has no recoverable weighting functions")
    if setup.spatial_dim == 1:
        text, modes = _psi_csv_1d(model, setup)
    else:
        text, modes = _psi_csv_2d(model, setup)
    psi_report = psi_error_report(model, setup, modes=modes)
    out_dir = _out_dir(rc)
    stem = f"{setup.tag}_{kind}"
    outputs = {}
    for name, body in ((f"{stem}_psi.csv", text),
                       (f"{stem}_psi_report.csv",
                        _psi_report_csv(psi_report))):
        outputs[name] = _write_file(out_dir / name, body)
    seeds = {"model": model.seed}
    entry = _manifest_entry("export-psi", rc, seeds=seeds, inputs=inputs,
                            outputs=outputs)
    _update_manifest(out_dir, f"export-psi:{setup.tag}:{kind}", entry)
    mean_l2 = float(np.mean(psi_report.l2_percent))
    print(f"wrote {out_dir / (stem + '_psi.csv')}: {len(modes)} {state} "
          f"weighting functions, mean L2 error {mean_l2:.3f}%")
    return EXIT_OK


def cmd_sweep(rc):
    setup = _setup_for(rc)
    sizes = tuple(rc.sizes) if rc.sizes else SWEEP_SIZES
    bad = sorted(set(sizes) - set(SWEEP_SIZES))
    if bad:
        raise InvalidArgumentError(
            f"sizes must come from {list(SWEEP_SIZES)}, got {bad}")
    kinds = tuple(rc.models) if rc.models \
        else ((rc.model,) if rc.model else ("pg-varmion",))
    for kind in kinds:
        check_choice("model", kind, MODEL_TAGS)
    cfg = _train_config_for(setup, rc)
    rows = training_size_sweep(setup, sizes, model_kinds=kinds,
                               profile=rc.profile, data_seed=rc.seed,
                               config=cfg, n_test=rc.count)
    out_dir = _out_dir(rc)
    name = f"{setup.tag}_sweep.csv"
    outputs = {name: _write_file(out_dir / name, _sweep_csv(rows))}
    seeds = {"dataset": rc.seed if rc.seed is not None else setup.base_seed}
    entry = _manifest_entry("sweep", rc, seeds=seeds, inputs={},
                            outputs=outputs)
    _update_manifest(out_dir, f"sweep:{setup.tag}", entry)
    print(f"wrote {out_dir / name}: {len(rows)} rows "
          f"({len(sizes)} sizes x {len(kinds)} models)")
    return EXIT_OK


def cmd_report(rc):
    setup = _setup_for(rc)
    splits = _resolve_splits(setup, rc)
    prof = setup.profile(rc.profile)
    count = rc.count if rc.count is not None else min(100, prof.n_test)
    data_dir, out_dir = _data_dir(rc), _out_dir(rc)
    inputs, outputs = {}, {}
    models = _load_models(setup, rc, inputs)
    reports, datasets = [], {}
    for split in splits:
        ds, src = _dataset_for(setup, split, count, rc.seed, data_dir)
        datasets[split] = ds
        inputs[f"dataset:{split}"] = ds.digest()
        reports.append(projection_report(setup.basis, ds))
        for model in models:
            reports.append(error_report(model, ds, basis=setup.basis))
    table = comparison_table(reports)
    for suffix, text in (("csv", table.csv()), ("txt", table.text())):
        name = f"{setup.tag}_report.{suffix}"
        outputs[name] = _write_file(out_dir / name, text)
    for report in reports:
        name = f"{setup.tag}_{report.model}_{report.split}_hist.csv"
        outputs[name] = _write_file(out_dir / name,
                                    histogram_csv(histogram_export(report)))
    for model in models:
        if model._table_is_trainable:
            continue  # decomposition and bound need in-span coefficients
        for split in splits:
            ds = datasets[split]
            decomp = error_decomposition(model, setup, ds)
            name = f"{setup.tag}_{model.tag}_{split}_decomp.csv"
            outputs[name] = _write_file(out_dir / name,
                                        _decomposition_csv(decomp))
            bound = theorem_bound_report(model, setup, ds)
            name = f"{setup.tag}_{model.tag}_{split}_bound.csv"
            outputs[name] = _write_file(out_dir / name, _bound_csv(bound))
    if setup.spatial_dim == 2:
        ds = datasets[splits[0]]
        reference = setup.solve(ds.forcing(0))
        beta = project(reference, setup.basis, setup.analysis_rule)
        fields = [("reference", reference),
                  ("projection",
                   lambda pts: setup.basis.evaluate(pts) @ beta)]
        fields += [(model.tag,
                    lambda pts, m=model: m.evaluate(ds.F[0], pts))
                   for model in models]
        for label, field in fields:
            name = f"{setup.tag}_{label}_slices.csv"
            outputs[name] = _write_file(
                out_dir / name, line_slices_csv(line_slices_2d(field)))
    seeds = {"dataset": rc.seed if rc.seed is not None else setup.base_seed}
    entry = _manifest_entry("report", rc, seeds=seeds, inputs=inputs,
                            outputs=outputs)
    _update_manifest(out_dir, f"report:{setup.tag}", entry)
    print(table.text(), end="")
    print(f"wrote {len(outputs)} files under {out_dir}")
    return EXIT_OK


_DISPATCH = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "export-psi": cmd_export_psi,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def _csv_ints(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers")


def _add_training_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--batch-unit", dest="batch_unit",
                   help="pairs or functions")
    p.add_argument("--n-r", dest="n_r", type=int,
                   help="output points sampled per function each epoch")
    p.add_argument("--lr", dest="lr_initial", type=float,
                   help="initial learning rate")
    p.add_argument("--schedule-interval", dest="schedule_interval", type=int)
    p.add_argument("--schedule-gamma", dest="schedule_gamma", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)


def _add_common(p):
    p.add_argument("--config", metavar="FILE",
                   help="JSON settings file; flags override its values")
    p.add_argument("--problem", help="problem tag: " + ", ".join(PROBLEM_TAGS))
    p.add_argument("--profile", help="run profile: " + ", ".join(PROFILES))
    p.add_argument("--seed", type=int, help="base seed override")
    p.add_argument("--count", type=int, help="number of samples to use")
    p.add_argument("--data-dir", dest="data_dir",
                   help=f"dataset directory (default ${DATA_DIR_ENV} or ./data)")
    p.add_argument("--out-dir", dest="out_dir",
                   help="output directory (default ./out)")
    p.add_argument("--threads", type=int,
                   help="worker cap; computation is sequential either way")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="single-threaded, bit-reproducible execution")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pgvarmion",
        description="Operator learning with a projection-consistent branch: "
                    "data generation, training, evaluation, and analysis "
                    "exports.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")

    p = sub.add_parser("gen-data", help="write one dataset split to disk")
    _add_common(p)
    p.add_argument("--split", help="split to generate (default train)")

    p = sub.add_parser("train", help="train one model and checkpoint it")
    _add_common(p)
    p.add_argument("--model", help="model tag: " + ", ".join(MODEL_TAGS))
    _add_training_flags(p)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)

    p = sub.add_parser("eval",
                       help="error table for checkpoints plus projection")
    _add_common(p)
    p.add_argument("--checkpoint", dest="checkpoints", action="append",
                   metavar="FILE", help="checkpoint to evaluate (repeatable)")
    p.add_argument("--split", dest="splits", action="append",
                   help="split to evaluate (repeatable; default test splits)")

    p = sub.add_parser("export-psi",
                       help="sample recovered weighting functions")
    _add_common(p)
    p.add_argument("--checkpoint", metavar="FILE",
                   help="trained model to export (default: untrained)")
    p.add_argument("--model", help="model tag when no checkpoint is given")

    p = sub.add_parser("sweep", help="error versus training-set size")
    _add_common(p)
    p.add_argument("--model", dest="models", action="append",
                   help="model tag to sweep (repeatable)")
    p.add_argument("--sizes", type=_csv_ints, metavar="N,N,...",
                   help="training sizes, a subset of "
                        + ",".join(str(s) for s in SWEEP_SIZES))
    _add_training_flags(p)

    p = sub.add_parser("report", help="full analysis bundle for checkpoints")
    _add_common(p)
    p.add_argument("--checkpoint", dest="checkpoints", action="append",
                   metavar="FILE", help="checkpoint to analyze (repeatable)")
    p.add_argument("--split", dest="splits", action="append",
                   help="split to analyze (repeatable; default test splits)")

    return parser


_FLAG_KEYS = ("problem", "model", "models", "profile", "split", "splits",
              "count", "seed", "sizes", "data_dir", "out_dir", "checkpoint",
              "checkpoints", "epochs", "batch_size", "batch_unit", "n_r",
              "lr_initial", "schedule_interval", "schedule_gamma",
              "weight_decay", "checkpoint_every", "threads", "deterministic")


def _collect_overrides(args):
    out = {}
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = run_config(args.config, **_collect_overrides(args))
        return _DISPATCH[args.command](rc)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
