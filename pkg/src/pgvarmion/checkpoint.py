"""Binary checkpoint format for trained operator surrogates.

Layout: an 8-byte magic, a little-endian uint32 format version, a
little-endian uint64 header length, a UTF-8 JSON header, then the raw
parameter blocks concatenated in the order the header manifest lists
them, each row-major little-endian float64. The header pins everything
needed to rebuild the model without touching the original problem
wiring: model kind and constructor arguments, basis and rule
descriptors, the block manifest with shapes, and an optional training
config echo. Orthonormalized bases ship their coefficient transform as
the first block, so evaluation is self-contained.

The header JSON is serialized with sorted keys and no whitespace, which
together with the fixed block order makes save -> load -> save produce
byte-identical files.
"""

import dataclasses
import json
import struct

import numpy as np

from .basis import TransformedBasis, basis_from_descriptor, mass_matrix
from .errors import DataFormatError, InvalidArgumentError
from .models import BNet, LDeepONet, PgVarmion
from .quadrature import rule_from_descriptor
from .training import TrainConfig

MAGIC = b"PGVMCK\x00\x00"
FORMAT_VERSION = 1

_HEAD = struct.Struct("<8sIQ")


@dataclasses.dataclass(frozen=True)
class CheckpointRecord:
    """A loaded checkpoint: the rebuilt model plus its metadata."""

    model: object
    train_config: object
    trained_epochs: object
    header: dict


def _rule_or_none(rule):
    return None if rule is None else rule.descriptor()


def _model_header(model):
    if isinstance(model, PgVarmion):
        return {
            "kind": model.tag,
            "basis": model.basis.descriptor(),
            "sensor_rule": model.sensor_rule.descriptor(),
            "hidden_dims": list(model.hidden_dims),
            "cutoff_p": model.cutoff_p,
            "final_bias": model.final_bias,
            "seed": model.seed,
            "mass_rule": None if model.mass is None
                         else model.mass.rule_descriptor,
            "boundary_sensor_rule": _rule_or_none(model.boundary_sensor_rule),
        }
    if isinstance(model, BNet):
        return {
            "kind": model.tag,
            "basis": model.basis.descriptor(),
            "sensor_rule": model.sensor_rule.descriptor(),
            "seed": model.seed,
        }
    if isinstance(model, LDeepONet):
        return {
            "kind": model.tag,
            "q": model.q,
            "spatial_dim": model.spatial_dim,
            "sensor_rule": model.sensor_rule.descriptor(),
            "hidden_dims": list(model.hidden_dims),
            "cutoff_p": model.cutoff_p,
            "final_bias": model.final_bias,
            "seed": model.seed,
        }
    raise InvalidArgumentError(
        f"cannot checkpoint a {type(model).__name__}")


def _ordered_blocks(model):
    blocks = []
    basis = getattr(model, "basis", None)
    if isinstance(basis, TransformedBasis):
        blocks.append(("basis_transform", basis.transform))
    for name in sorted(model.state_blocks()):
        blocks.append((name, model.state_blocks()[name]))
    return blocks


def save_checkpoint(path, model, train_config=None, trained_epochs=None):
    """Write a model (and optional training metadata) to one file."""
    model_header = _model_header(model)
    blocks = _ordered_blocks(model)
    header = {
        "model": model_header,
        "blocks": [[name, list(arr.shape)] for name, arr in blocks],
        "train_config": None if train_config is None
                        else dataclasses.asdict(train_config),
        "trained_epochs": None if trained_epochs is None
                          else int(trained_epochs),
    }
    payload = json.dumps(header, sort_keys=True,
                         separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, FORMAT_VERSION, len(payload)))
        fh.write(payload)
        for _, arr in blocks:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _rebuild_model(mh, transform):
    kind = mh["kind"]
    if kind in ("pg-varmion", "bnet"):
        basis = basis_from_descriptor(mh["basis"], transform=transform)
        sensor_rule = rule_from_descriptor(mh["sensor_rule"])
        if kind == "bnet":
            return BNet(basis, sensor_rule, seed=mh["seed"])
        mass = None
        if mh["mass_rule"] is not None:
            mass = mass_matrix(basis, rule_from_descriptor(mh["mass_rule"]))
        boundary = mh["boundary_sensor_rule"]
        return PgVarmion(basis, sensor_rule, mh["hidden_dims"],
                         mh["cutoff_p"], final_bias=mh["final_bias"],
                         seed=mh["seed"], mass=mass,
                         boundary_sensor_rule=None if boundary is None
                         else rule_from_descriptor(boundary))
    if kind == "l-deeponet":
        return LDeepONet(mh["q"], mh["spatial_dim"],
                         rule_from_descriptor(mh["sensor_rule"]),
                         mh["hidden_dims"], mh["cutoff_p"],
                         final_bias=mh["final_bias"], seed=mh["seed"])
    raise DataFormatError(f"unknown model kind {kind!r}")


def load_checkpoint(path):
    """Rebuild a model from a checkpoint file.

    Validates the magic, version, manifest shapes, finiteness, and that
    no trailing bytes follow the last block.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size:
        raise DataFormatError("checkpoint truncated before header")
    magic, version, header_len = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise DataFormatError("not a checkpoint file (bad magic)")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported checkpoint version {version}")
    offset = _HEAD.size
    if len(raw) < offset + header_len:
        raise DataFormatError("checkpoint truncated inside header")
    try:
        header = json.loads(raw[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"unreadable checkpoint header: {exc}")
    offset += header_len

    arrays = {}
    for name, shape in header["blocks"]:
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = 8 * count
        if len(raw) < offset + nbytes:
            raise DataFormatError(f"checkpoint truncated inside block {name!r}")
        arr = np.frombuffer(raw[offset:offset + nbytes],
                            dtype="<f8").astype(float).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise DataFormatError(f"non-finite values in block {name!r}")
        arrays[name] = arr
        offset += nbytes
    if offset != len(raw):
        raise DataFormatError(
            f"{len(raw) - offset} trailing bytes after the last block")

    model = _rebuild_model(header["model"], arrays.pop("basis_transform", None))
    state = model.state_blocks()
    if sorted(arrays) != sorted(state):
        raise DataFormatError(
            f"block manifest {sorted(arrays)} does not match "
            f"model state {sorted(state)}")
    for name, arr in arrays.items():
        if state[name].shape != arr.shape:
            raise DataFormatError(
                f"block {name!r}: shape {arr.shape} does not match "
                f"model shape {state[name].shape}")
        state[name][...] = arr

    echo = header["train_config"]
    return CheckpointRecord(
        model=model,
        train_config=None if echo is None else TrainConfig(**echo),
        trained_epochs=header["trained_epochs"],
        header=header)
