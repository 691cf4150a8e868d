"""Training loops for the operator surrogates.

Every epoch draws a fresh random subset of N_r output nodes per training
function, forms (function, node) pairs, and takes one AdamW step per
batch on the mean squared residual over the batch. Batches either count
pairs (1D problems: pairs from all functions are shuffled together) or
functions (2D: each batch is a chunk of functions with all their drawn
nodes, which keeps the gradient assembly rectangular).

All randomness comes from one Philox stream keyed by the config seed, so
a rerun with the same seed reproduces the loss history bit for bit.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError, NumericError
from .network import AdamW
from .rng import STREAM_SUBSAMPLE, philox
from .validation import check_choice, check_positive_int

BATCH_UNITS = ("pairs", "functions")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 8000
    batch_unit: str = "pairs"
    n_r: int = 20
    lr_initial: float = 1e-3
    schedule_interval: int = 100
    schedule_gamma: float = 0.75
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    checkpoint_every: int = 100

    def __post_init__(self):
        check_positive_int("epochs", self.epochs)
        check_positive_int("batch_size", self.batch_size)
        check_positive_int("n_r", self.n_r)
        check_choice("batch_unit", self.batch_unit, BATCH_UNITS)

    def make_optimizer(self):
        return AdamW(lr_initial=self.lr_initial, beta1=self.beta1,
                     beta2=self.beta2, eps=self.eps,
                     weight_decay=self.weight_decay,
                     schedule_interval=self.schedule_interval,
                     schedule_gamma=self.schedule_gamma)


def scatter_rows(indices, rows, n_out):
    """Sum rows into an (n_out, width) array by row index, deterministically."""
    order = np.argsort(indices, kind="stable")
    si = indices[order]
    sv = rows[order]
    out = np.zeros((n_out, rows.shape[1]))
    starts = np.flatnonzero(np.r_[True, si[1:] != si[:-1]])
    out[si[starts]] = np.add.reduceat(sv, starts, axis=0)
    return out


def training_loss(model, F_rows, points, labels):
    """Mean squared residual over all (function, point) pairs."""
    labels = np.asarray(labels, dtype=float)
    if labels.size == 0:
        raise InvalidArgumentError("empty batch")
    pred = model.evaluate_batch(F_rows, points)
    return float(np.mean((pred - labels) ** 2))


def train(model, dataset, config, checkpoint_callback=None):
    """Run the configured epochs on the dataset's training samples.

    The model is updated in place. Returns the loss history as an
    (epochs, 3) array of (epoch, learning rate, mean training loss).
    """
    if dataset.split != "train":
        raise InvalidArgumentError(
            f"training requires the train split, got {dataset.split!r}")
    if config.n_r > dataset.n_outputs:
        raise InvalidArgumentError("n_r exceeds the number of output nodes")
    F = dataset.F
    labels = dataset.labels
    n_f, n_o = labels.shape
    rng = philox(config.seed, STREAM_SUBSAMPLE)
    opt = config.make_optimizer()
    ctx = model._training_context(dataset.output_rule.nodes)
    history = np.zeros((config.epochs, 3))

    for epoch in range(config.epochs):
        keys = rng.random((n_f, n_o))
        node_idx = np.argpartition(keys, config.n_r - 1, axis=1)[:, :config.n_r]
        if config.batch_unit == "pairs":
            epoch_loss = _pairs_epoch(model, ctx, F, labels, node_idx,
                                      rng, opt, config, epoch)
        else:
            epoch_loss = _functions_epoch(model, ctx, F, labels, node_idx,
                                          rng, opt, config, epoch)
        history[epoch] = (epoch, opt.learning_rate(epoch), epoch_loss)
        if checkpoint_callback is not None \
                and (epoch + 1) % config.checkpoint_every == 0:
            checkpoint_callback(model, epoch + 1, history[:epoch + 1])
    return history


def _check_batch_loss(value, epoch, batch):
    if not np.isfinite(value):
        raise NumericError(
            f"non-finite training loss at epoch {epoch}, batch {batch}")


def _pairs_epoch(model, ctx, F, labels, node_idx, rng, opt, config, epoch):
    n_f, n_r = node_idx.shape
    func_of_pair = np.repeat(np.arange(n_f), n_r)
    node_of_pair = node_idx.ravel()
    perm = rng.permutation(n_f * n_r)
    func_of_pair = func_of_pair[perm]
    node_of_pair = node_of_pair[perm]
    sse = 0.0
    for b, start in enumerate(range(0, n_f * n_r, config.batch_size)):
        fb = func_of_pair[start:start + config.batch_size]
        nb = node_of_pair[start:start + config.batch_size]
        coeff_map, table = model._step_begin(ctx)
        coeffs = F[fb] @ coeff_map.T
        rows = table[nb]
        resid = np.einsum("pi,pi->p", coeffs, rows) - labels[fb, nb]
        batch_sse = float(resid @ resid)
        _check_batch_loss(batch_sse, epoch, b)
        sse += batch_sse
        r = (2.0 / fb.size) * resid
        coeff_cot = r[:, None] * rows
        table_cot = None
        if model._table_is_trainable:
            table_cot = scatter_rows(nb, r[:, None] * coeffs, table.shape[0])
        model._step_apply(ctx, F[fb], coeff_cot, table_cot, opt, epoch)
    return sse / (n_f * n_r)


def _functions_epoch(model, ctx, F, labels, node_idx, rng, opt, config, epoch):
    n_f, n_r = node_idx.shape
    perm = rng.permutation(n_f)
    sse = 0.0
    for b, start in enumerate(range(0, n_f, config.batch_size)):
        J = perm[start:start + config.batch_size]
        idx = node_idx[J]
        coeff_map, table = model._step_begin(ctx)
        coeffs = F[J] @ coeff_map.T
        rows = table[idx]
        resid = np.einsum("fi,fpi->fp", coeffs, rows) \
            - np.take_along_axis(labels[J], idx, axis=1)
        batch_sse = float(np.sum(resid * resid))
        _check_batch_loss(batch_sse, epoch, b)
        sse += batch_sse
        r = (2.0 / resid.size) * resid
        coeff_cot = np.einsum("fp,fpi->fi", r, rows)
        table_cot = None
        if model._table_is_trainable:
            table_cot = scatter_rows(
                idx.ravel(), (r[:, :, None] * coeffs[:, None, :]).reshape(
                    -1, coeffs.shape[1]), table.shape[0])
        model._step_apply(ctx, F[J], coeff_cot, table_cot, opt, epoch)
    return sse / node_idx.size


def _steps_per_epoch(n_functions, config):
    if config.batch_unit == "pairs":
        pairs = n_functions * config.n_r
        return -(-pairs // config.batch_size)
    return -(-n_functions // min(config.batch_size, n_functions))


def training_size_sweep(setup, sizes, model_kinds=None, profile="paper",
                        data_seed=None, model_seed=None, config=None,
                        n_test=None):
    """Train fresh models on training-set prefixes; tabulate test errors.

    Returns a list of dict rows (size, model, split, aggregate and mean
    relative errors in percent, training loss). Datasets are built once
    at the largest size and sliced, so sweep entries share forcings with
    the full run. config overrides the profile's training settings;
    n_test overrides the profile's test-split size.

    Every entry trains with the optimizer-step budget of the largest
    requested size: smaller prefixes yield fewer batches per epoch, so
    their epoch counts and decay intervals are scaled up to match. The
    largest size runs the configured epochs unchanged and reproduces a
    direct train() call bit for bit.
    """
    from .datasets import build_dataset
    sizes = sorted(int(s) for s in sizes)
    if not sizes:
        return []
    if model_kinds is None:
        model_kinds = ("pg-varmion",)
    prof = setup.profile(profile)
    base_config = setup.train_config(profile) if config is None else config
    full = build_dataset(setup, "train", max(sizes), seed=data_seed)
    tests = {split: build_dataset(setup, split, n_test or prof.n_test,
                                  seed=data_seed)
             for split in setup.test_splits}
    out_rule = setup.output_rule
    ref_steps = _steps_per_epoch(max(sizes), base_config)
    rows = []
    for size in sizes:
        subset = full.take(size)
        config = base_config
        if config.batch_unit == "functions" and config.batch_size > size:
            config = replace(config, batch_size=size)
        steps = _steps_per_epoch(size, config)
        if steps != ref_steps:
            scale = ref_steps / steps
            config = replace(
                config,
                epochs=max(1, round(base_config.epochs * scale)),
                schedule_interval=max(
                    1, round(base_config.schedule_interval * scale)))
        for kind in model_kinds:
            model = setup.make_model(kind, seed=model_seed)
            history = train(model, subset, config)
            for split, ds in tests.items():
                pred = model.evaluate_batch(ds.F, out_rule.nodes)
                num = np.sqrt(np.sum(out_rule.weights
                                     * (pred - ds.labels) ** 2, axis=1))
                den = np.sqrt(np.sum(out_rule.weights * ds.labels ** 2, axis=1))
                rows.append({"size": size, "model": kind, "split": split,
                             "aggregate_percent":
                                 100.0 * float(np.sum(num) / np.sum(den)),
                             "mean_percent": 100.0 * float(np.mean(num / den)),
                             "final_loss": float(history[-1, 2])})
    return rows
