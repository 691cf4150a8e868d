"""Labeled datasets: generation, binary storage, CSV export.

A dataset holds, per sample, the forcing's generative record, its sensor
vector F, and the reference solution sampled at every output node. File
layout (all integers little-endian):

    magic "PGVMDS\\0\\0" | uint32 version | uint64 header length |
    header JSON | per sample: uint32 record length, record JSON,
    F as float64[n_sensors], labels as float64[n_outputs]

The header carries the problem tag, split, seed, counts, both rule
descriptors, and the reference-solver resolution. JSON is written with
sorted keys and no whitespace, so regenerating a dataset from the same
(problem, split, count, seed) produces byte-identical files.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataFormatError, InvalidArgumentError, PgvError
from .forcing import forcing_from_record
from .models import sensor_vector
from .quadrature import rule_from_descriptor
from .rng import split_seed
from .validation import check_choice, check_positive_int

MAGIC = b"PGVMDS\0\0"
VERSION = 1
SPLITS = ("train", "test1", "test2", "test3")


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


@dataclass
class LabeledDataset:
    problem: str
    split: str
    seed: int
    sensor_rule: object
    output_rule: object
    forcing_records: list
    F: np.ndarray
    labels: np.ndarray
    reference_resolution: int = 0

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.F.ndim != 2 or self.labels.ndim != 2:
            raise InvalidArgumentError("F and labels must be 2D")
        n = self.F.shape[0]
        if self.labels.shape[0] != n or len(self.forcing_records) != n:
            raise InvalidArgumentError("sample counts disagree")
        if self.F.shape[1] != self.sensor_rule.n_points:
            raise InvalidArgumentError("F width != sensor rule size")
        if self.labels.shape[1] != self.output_rule.n_points:
            raise InvalidArgumentError("label width != output rule size")
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.labels))):
            raise InvalidArgumentError("non-finite dataset values")

    @property
    def n_samples(self):
        return self.F.shape[0]

    @property
    def n_sensors(self):
        return self.F.shape[1]

    @property
    def n_outputs(self):
        return self.labels.shape[1]

    def forcing(self, i):
        return forcing_from_record(self.forcing_records[i])

    def take(self, n):
        """Prefix of the first n samples as a new dataset."""
        n = check_positive_int("n", n, maximum=self.n_samples)
        return replace(self, forcing_records=self.forcing_records[:n],
                       F=self.F[:n].copy(), labels=self.labels[:n].copy())

    def to_bytes(self):
        header = {
            "version": VERSION,
            "problem": self.problem,
            "split": self.split,
            "seed": int(self.seed),
            "n_samples": self.n_samples,
            "n_sensors": self.n_sensors,
            "n_outputs": self.n_outputs,
            "sensor_rule": self.sensor_rule.descriptor(),
            "output_rule": self.output_rule.descriptor(),
            "reference_resolution": int(self.reference_resolution),
        }
        hb = _dumps(header)
        parts = [MAGIC, struct.pack("<I", VERSION),
                 struct.pack("<Q", len(hb)), hb]
        for rec, Fi, ui in zip(self.forcing_records, self.F, self.labels):
            rb = _dumps(rec)
            parts.append(struct.pack("<I", len(rb)))
            parts.append(rb)
            parts.append(Fi.astype("<f8").tobytes())
            parts.append(ui.astype("<f8").tobytes())
        return b"".join(parts)

    def save(self, path):
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        return hashlib.sha256(data).hexdigest()

    def digest(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def to_csv(self, path, max_rows=None):
        """Wide CSV: one row per sample with family, F values, labels."""
        import csv
        n = self.n_samples if max_rows is None else min(max_rows, self.n_samples)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["sample", "family"]
                        + [f"F_{k}" for k in range(self.n_sensors)]
                        + [f"u_{j}" for j in range(self.n_outputs)])
            for i in range(n):
                wr.writerow([i, self.forcing_records[i]["family"]]
                            + [repr(float(v)) for v in self.F[i]]
                            + [repr(float(v)) for v in self.labels[i]])


def load_dataset(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read dataset: {exc}") from exc
    if data[:8] != MAGIC:
        raise DataFormatError("not a dataset file (bad magic)")
    try:
        version, = struct.unpack_from("<I", data, 8)
        if version != VERSION:
            raise DataFormatError(f"unsupported dataset version {version}")
        hlen, = struct.unpack_from("<Q", data, 12)
        pos = 20
        header = json.loads(data[pos:pos + hlen])
        pos += hlen
        n = header["n_samples"]
        ns, no = header["n_sensors"], header["n_outputs"]
        records = []
        F = np.empty((n, ns))
        labels = np.empty((n, no))
        for i in range(n):
            rlen, = struct.unpack_from("<I", data, pos)
            pos += 4
            records.append(json.loads(data[pos:pos + rlen]))
            pos += rlen
            F[i] = np.frombuffer(data, "<f8", ns, pos)
            pos += 8 * ns
            labels[i] = np.frombuffer(data, "<f8", no, pos)
            pos += 8 * no
        if pos != len(data):
            raise DataFormatError("trailing bytes after last sample")
    except (struct.error, ValueError, KeyError, IndexError) as exc:
        raise DataFormatError(f"corrupt dataset file: {exc}") from exc
    return LabeledDataset(
        problem=header["problem"], split=header["split"],
        seed=header["seed"],
        sensor_rule=rule_from_descriptor(header["sensor_rule"]),
        output_rule=rule_from_descriptor(header["output_rule"]),
        forcing_records=records, F=F, labels=labels,
        reference_resolution=header["reference_resolution"])


def _grid_axes(rule):
    """Recover the per-axis coordinates of a tensor-grid rule."""
    xs = np.unique(rule.nodes[:, 0])
    ys = np.unique(rule.nodes[:, 1])
    if xs.size * ys.size != rule.n_points:
        raise InvalidArgumentError("output rule is not a tensor grid")
    return xs, ys


def build_dataset(setup, split, n_f, seed=None):
    """Draw forcings, solve references, and sample sensors and labels.

    seed is the base seed (defaults to the problem's); the split offset
    is applied internally so splits never share forcing streams.
    """
    check_choice("split", split, SPLITS)
    n_f = check_positive_int("n_f", n_f)
    base = setup.base_seed if seed is None else int(seed)
    stream = split_seed(base, split)
    out_rule = setup.output_rule
    grid = None
    if setup.spatial_dim == 2:
        grid = _grid_axes(out_rule)
    records = []
    F = np.empty((n_f, setup.sensor_rule.n_points))
    labels = np.empty((n_f, out_rule.n_points))
    for i in range(n_f):
        try:
            f = setup.draw_forcing(split, stream, i)
            sol = setup.solve(f)
            F[i] = sensor_vector(f, setup.sensor_rule)
            if grid is None:
                labels[i] = sol(out_rule.nodes)
            else:
                labels[i] = sol.evaluate_grid(*grid).ravel()
        except PgvError as exc:
            raise type(exc)(f"sample {i} of {setup.tag}/{split}: {exc}") from exc
        records.append(f.record())
    return LabeledDataset(problem=setup.tag, split=split, seed=base,
                          sensor_rule=setup.sensor_rule, output_rule=out_rule,
                          forcing_records=records, F=F, labels=labels,
                          reference_resolution=setup.reference_resolution)
