import json
import logging

import numpy as np
import pytest

from baselines import BpnConfig
from methods import fit_method, load_fitted, parse_method, parse_methods
from pwla import ReductionPolicy
from utils import ConfigError


FAST_BPN = BpnConfig(max_epochs=300, seed=3)


class TestParseMethod:
    def test_plain_smffnn_uses_given_policy(self):
        spec = parse_method("pwla-smffnn", policy=ReductionPolicy.parse("top-k:14"))
        assert spec.policy == ReductionPolicy(kind="top-k", k=14)
        assert spec.name == "pwla-smffnn"

    def test_reduced_defaults_to_above_mean(self):
        spec = parse_method("pwla-smffnn-reduced")
        assert spec.policy.kind == "above-mean"
        assert spec.name == "pwla-smffnn-reduced:above-mean"

    def test_reduced_suffix(self):
        spec = parse_method("pwla-smffnn-reduced:top-k:11")
        assert spec.policy == ReductionPolicy(kind="top-k", k=11)
        assert spec.name == "pwla-smffnn-reduced:top-k:11"

    def test_pca_dimensions(self):
        assert parse_method("pca-bpn:10").pca_dims == 10
        assert parse_method("pca-bpn", pca_dims=3).name == "pca-bpn:3"

    def test_scawi_forces_scawi_init(self):
        assert parse_method("scawi-bpn", bpn=BpnConfig(learning_rate=0.2)).bpn.init.kind == "scawi"
        assert parse_method("sbpn").bpn.init.kind == "uniform-range"

    @pytest.mark.parametrize("text", ["svm", "sbpn:3", "pca-bpn:x", "pwla-smffnn-reduced:top-k:0"])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_method(text)

    def test_list(self):
        specs = parse_methods("pwla-smffnn, sbpn ,pca-bpn:4")
        assert [s.name for s in specs] == ["pwla-smffnn", "sbpn", "pca-bpn:4"]

    def test_empty_list(self):
        with pytest.raises(ConfigError):
            parse_methods(" , ")


def test_smffnn_on_xor_is_one_epoch(xor):
    fitted = fit_method(parse_method("pwla-smffnn"), xor)
    assert fitted.epochs == 1
    assert fitted.kept_count == 2
    assert fitted.predict_many(xor.features).tolist() == [0, 1, 1, 0]


def test_on_visit_reaches_the_training_pass(two_blobs):
    visits = []
    fit_method(parse_method("pwla-smffnn"), two_blobs, on_visit=visits.append)
    assert len(visits) == two_blobs.n_instances


def test_pca_dimension_clamped_to_width(two_blobs, caplog):
    with caplog.at_level(logging.WARNING):
        fitted = fit_method(parse_method("pca-bpn:10", bpn=FAST_BPN), two_blobs)
    assert fitted.pca.n_components == two_blobs.n_attributes
    assert "exceeds" in caplog.text


@pytest.mark.parametrize("tag", ["pwla-smffnn-reduced:top-k:2", "pca-bpn:2", "sbpn"])
def test_saved_model_predicts_the_same(two_blobs, tag):
    fitted = fit_method(parse_method(tag, rule="interval", bpn=FAST_BPN), two_blobs)
    restored = load_fitted(json.loads(json.dumps(fitted.to_dict())))
    assert restored.spec == fitted.spec
    np.testing.assert_array_equal(restored.predict_many(two_blobs.features), fitted.predict_many(two_blobs.features))


def test_malformed_model_file():
    with pytest.raises(ConfigError, match="invalid model file"):
        load_fitted({"method": {"tag": "sbpn"}})


def test_wrong_width_rejected(xor):
    fitted = fit_method(parse_method("pwla-smffnn"), xor)
    with pytest.raises(ConfigError):
        fitted.predict_many(np.ones((2, 3)))
