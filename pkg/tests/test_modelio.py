import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from rbigad import detectors as det
from rbigad import rbig
from rbigad.errors import BadMagicError, ModelFormatError, TruncatedPayloadError, UnsupportedVersionError
from rbigad.modelio import load_model, save_model
from rbigad.toys import make_ring


@pytest.fixture(scope="module")
def ring():
    X, _ = make_ring(n=1500, anomaly_rate=0.01, seed=5)
    return X


@pytest.fixture(scope="module")
def probe(ring):
    return np.r_[ring[:200], [[3.0, -3.0], [0.0, 0.0]]]


@pytest.mark.parametrize("method", ["rbig", "rx", "krx", "kde", "hybrid"])
def test_round_trip_scores_bit_exact(tmp_path, ring, probe, method):
    model = det.fit_detector(ring, method)
    path = tmp_path / "m.bin"
    save_model(model, path)
    loaded = load_model(path)
    assert det.detector_kind(loaded) == method
    assert_array_equal(det.score(loaded, probe).scores, det.score(model, probe).scores)
    # saving the loaded model reproduces the file
    save_model(loaded, tmp_path / "again.bin")
    assert (tmp_path / "again.bin").read_bytes() == path.read_bytes()


def test_rbig_fields_survive(tmp_path, ring):
    X = np.c_[ring, np.full(len(ring), 2.0)]
    model = rbig.fit(X, max_layers=7, rotation="random", seed=3, bins=30)
    save_model(model, tmp_path / "m.bin")
    loaded = load_model(tmp_path / "m.bin")
    assert loaded.config == model.config
    assert loaded.dropped_bands == [2] and loaded.dropped_values == [2.0]
    assert_array_equal(loaded.trace, model.trace)
    meta = json.loads((tmp_path / "m.bin.json").read_text())
    assert meta["kind"] == "rbig"
    assert meta["fit"]["layers_used"] == model.n_layers
    assert meta["fit"]["bins"] == 30
    assert meta["rbig_config"]["rotation"] == "random"


def test_same_seed_same_bytes(tmp_path, ring):
    save_model(rbig.fit(ring, seed=7), tmp_path / "a.bin")
    save_model(rbig.fit(ring, seed=7), tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert (tmp_path / "a.bin.json").read_bytes() == (tmp_path / "b.bin.json").read_bytes()


def test_sidecar_is_optional_for_scoring(tmp_path, ring, probe):
    model = det.fit_rx(ring)
    save_model(model, tmp_path / "rx.bin")
    (tmp_path / "rx.bin.json").unlink()
    assert_array_equal(det.score(load_model(tmp_path / "rx.bin"), probe).scores,
                       det.score(model, probe).scores)


def test_corrupt_files(tmp_path, ring):
    save_model(det.fit_rx(ring), tmp_path / "rx.bin")
    good = (tmp_path / "rx.bin").read_bytes()
    bad = tmp_path / "bad.bin"

    bad.write_bytes(b"NOPE" + good[4:])
    with pytest.raises(BadMagicError):
        load_model(bad)
    bad.write_bytes(good[:4] + b"\x09\x00" + good[6:])
    with pytest.raises(UnsupportedVersionError):
        load_model(bad)
    bad.write_bytes(good[:6] + b"\x63" + good[7:])
    with pytest.raises(ModelFormatError):
        load_model(bad)
    bad.write_bytes(good[:-5])
    with pytest.raises(TruncatedPayloadError):
        load_model(bad)
    bad.write_bytes(good[:8])
    with pytest.raises(TruncatedPayloadError):
        load_model(bad)
    bad.write_bytes(good + b"\x00")
    with pytest.raises(ModelFormatError):
        load_model(bad)
