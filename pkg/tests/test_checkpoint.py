import dataclasses
import json
import struct

import numpy as np
import pytest

from pgvarmion.basis import SineBasis1d, TransformedBasis, mass_matrix
from pgvarmion.checkpoint import (FORMAT_VERSION, MAGIC, load_checkpoint,
                                  save_checkpoint)
from pgvarmion.datasets import build_dataset
from pgvarmion.errors import DataFormatError, InvalidArgumentError
from pgvarmion.models import PgVarmion
from pgvarmion.problems import get_problem
from pgvarmion.quadrature import boundary_rule_1d, gauss_legendre
from pgvarmion.rng import philox
from pgvarmion.training import TrainConfig, train


def eval_points(setup):
    if setup.spatial_dim == 1:
        return np.linspace(0.0, 1.0, 37)
    g = np.linspace(0.1, 0.9, 6)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def assert_same_model(original, loaded, setup):
    F = philox(77, 0).normal(size=setup.sensor_rule.n_points)
    pts = eval_points(setup)
    np.testing.assert_array_equal(loaded.evaluate(F, pts),
                                  original.evaluate(F, pts))
    for name, arr in original.state_blocks().items():
        np.testing.assert_array_equal(loaded.state_blocks()[name], arr)


class TestRoundTrip:
    @pytest.mark.parametrize("problem,kind", [
        ("diffusion1d", "pg-varmion"),
        ("diffusion1d", "bnet"),
        ("diffusion1d", "l-deeponet"),
        ("advdiff1d", "pg-varmion"),
        ("advdiff1d", "bnet"),
        ("advdiff2d", "pg-varmion"),
        ("advdiff2d", "l-deeponet"),
    ])
    def test_model_survives_round_trip(self, tmp_path, problem, kind):
        setup = get_problem(problem)
        model = setup.make_model(kind)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, model)
        rec = load_checkpoint(path)
        assert rec.model.tag == kind
        assert rec.train_config is None
        assert rec.trained_epochs is None
        assert_same_model(model, rec.model, setup)

    def test_save_load_save_is_byte_identical(self, tmp_path):
        setup = get_problem("advdiff1d")
        model = setup.make_model("pg-varmion")
        cfg = TrainConfig(epochs=7, batch_size=100, n_r=5, seed=3)
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(p1, model, train_config=cfg, trained_epochs=7)
        rec = load_checkpoint(p1)
        save_checkpoint(p2, rec.model, train_config=rec.train_config,
                        trained_epochs=rec.trained_epochs)
        assert p1.read_bytes() == p2.read_bytes()

    def test_transformed_basis_round_trip(self, tmp_path):
        setup = get_problem("advdiff1d")
        assert isinstance(setup.basis, TransformedBasis)
        model = setup.make_model("bnet")
        path = tmp_path / "b.ckpt"
        save_checkpoint(path, model)
        rec = load_checkpoint(path)
        np.testing.assert_array_equal(rec.model.basis.transform,
                                      setup.basis.transform)
        pts = np.linspace(0.0, 1.0, 21)
        np.testing.assert_array_equal(rec.model.basis.evaluate(pts),
                                      setup.basis.evaluate(pts))

    def test_trained_model_round_trip(self, tmp_path):
        setup = get_problem("diffusion1d")
        ds = build_dataset(setup, "train", 30)
        model = setup.make_model("pg-varmion")
        cfg = TrainConfig(epochs=4, batch_size=300, n_r=5, seed=2)
        history = train(model, ds, cfg)
        path = tmp_path / "trained.ckpt"
        save_checkpoint(path, model, train_config=cfg,
                        trained_epochs=len(history))
        rec = load_checkpoint(path)
        assert rec.train_config == cfg
        assert rec.trained_epochs == 4
        assert_same_model(model, rec.model, setup)

    def test_mass_rule_round_trip(self, tmp_path):
        basis = SineBasis1d(4)
        rule = gauss_legendre(60)
        model = PgVarmion(basis, gauss_legendre(20), (6,), cutoff_p=None,
                          seed=5, mass=mass_matrix(basis, rule))
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        rec = load_checkpoint(path)
        np.testing.assert_array_equal(rec.model.mass.matrix,
                                      model.mass.matrix)
        pts = np.linspace(0.2, 0.8, 9)
        np.testing.assert_array_equal(rec.model.weighting_table(pts),
                                      model.weighting_table(pts))

    def test_boundary_rule_round_trip(self, tmp_path):
        setup = get_problem("diffusion1d")
        model = PgVarmion(setup.basis, setup.sensor_rule, setup.hidden_dims,
                          setup.cutoff_p, seed=1,
                          boundary_sensor_rule=boundary_rule_1d())
        path = tmp_path / "bd.ckpt"
        save_checkpoint(path, model)
        rec = load_checkpoint(path)
        np.testing.assert_array_equal(rec.model.boundary_sensor_rule.nodes,
                                      model.boundary_sensor_rule.nodes)

    def test_parameter_count_preserved(self, tmp_path):
        model = get_problem("diffusion1d").make_model("pg-varmion")
        path = tmp_path / "p.ckpt"
        save_checkpoint(path, model)
        assert load_checkpoint(path).model.n_parameters == 1180


def saved_path(tmp_path, name="x.ckpt"):
    model = get_problem("diffusion1d").make_model("bnet")
    path = tmp_path / name
    save_checkpoint(path, model)
    return path


class TestValidation:
    def test_bad_magic(self, tmp_path):
        path = saved_path(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[:8] = b"NOTMAGIC"
        path.write_bytes(bytes(raw))
        with pytest.raises(DataFormatError, match="magic"):
            load_checkpoint(path)

    def test_unknown_version(self, tmp_path):
        path = saved_path(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[8:12] = struct.pack("<I", FORMAT_VERSION + 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(DataFormatError, match="version"):
            load_checkpoint(path)

    def test_truncated_header(self, tmp_path):
        path = saved_path(tmp_path)
        path.write_bytes(path.read_bytes()[:24])
        with pytest.raises(DataFormatError, match="truncated"):
            load_checkpoint(path)

    def test_truncated_block(self, tmp_path):
        path = saved_path(tmp_path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataFormatError, match="truncated inside block"):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path):
        path = saved_path(tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00" * 4)
        with pytest.raises(DataFormatError, match="trailing"):
            load_checkpoint(path)

    def test_nonfinite_block(self, tmp_path):
        path = saved_path(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[-8:] = struct.pack("<d", float("nan"))
        path.write_bytes(bytes(raw))
        with pytest.raises(DataFormatError, match="non-finite"):
            load_checkpoint(path)

    def test_unknown_kind(self, tmp_path):
        header = json.dumps({"model": {"kind": "mystery"}, "blocks": [],
                             "train_config": None, "trained_epochs": None},
                            sort_keys=True, separators=(",", ":")).encode()
        path = tmp_path / "k.ckpt"
        path.write_bytes(struct.pack("<8sIQ", MAGIC, FORMAT_VERSION,
                                     len(header)) + header)
        with pytest.raises(DataFormatError, match="kind"):
            load_checkpoint(path)

    def test_block_shape_mismatch(self, tmp_path):
        path = saved_path(tmp_path)
        raw = path.read_bytes()
        magic, version, hlen = struct.unpack_from("<8sIQ", raw)
        header = json.loads(raw[20:20 + hlen])
        header["blocks"][0][1] = [4, 100]
        payload = json.dumps(header, sort_keys=True,
                             separators=(",", ":")).encode()
        path.write_bytes(struct.pack("<8sIQ", magic, version, len(payload))
                         + payload + raw[20 + hlen:])
        with pytest.raises(DataFormatError, match="shape"):
            load_checkpoint(path)

    def test_unsupported_object_rejected(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            save_checkpoint(tmp_path / "o.ckpt", object())

    def test_header_is_compact_sorted_json(self, tmp_path):
        path = saved_path(tmp_path)
        raw = path.read_bytes()
        _, _, hlen = struct.unpack_from("<8sIQ", raw)
        text = raw[20:20 + hlen].decode("utf-8")
        header = json.loads(text)
        assert text == json.dumps(header, sort_keys=True,
                                  separators=(",", ":"))
        assert [b[0] for b in header["blocks"]] == ["basis_transform", "B"] \
            or [b[0] for b in header["blocks"]] == ["B"]
