import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from mobmeta.characterize import (
    CharacterizeParams,
    characterize,
    per_user_attribute_matrix,
    report_from_dict,
)
from mobmeta.core import DataError
from mobmeta.synth import SourceSpec, generate
from conftest import make_dataset

SCHEMA = json.loads(
    (
        Path(__file__).resolve().parents[1]
        / "src"
        / "mobmeta"
        / "schemas"
        / "report.schema.json"
    ).read_text()
)


def zero_diag_uniform(n):
    t = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(t, 0.0)
    return t


@pytest.fixture(scope="module")
def markov_report():
    spec = SourceSpec(
        kind="markov_order_k",
        n_symbols=10_000,
        n_users=10,
        seed=11,
        transition=zero_diag_uniform(8),
    )
    ds, gt = generate(spec)
    return ds, gt, characterize(ds, CharacterizeParams(d_max=6))


def test_markov_dataset_example(markov_report):
    _, gt, rep = markov_report
    analytic = math.log2(7)
    assert gt["entropy_rate_bits"] == pytest.approx(analytic)
    assert rep.n_pois == 8
    assert rep.entropy_bits_mean == pytest.approx(analytic, rel=0.05)
    assert rep.ldd_depth == 1
    # I(1) for this chain is H(stationary) - rate = 3 - log2(7)
    assert rep.mi_curve[0][1] == pytest.approx(3.0 - analytic, abs=0.01)
    assert rep.n_users == 10
    assert rep.symbol_count_total == 100_000
    assert rep.pois_per_user_mean == pytest.approx(8.0)
    assert 0.0 < rep.predictability_mean < 1.0


def test_constant_source_rejected():
    with pytest.raises(DataError, match="constant"):
        generate(
            SourceSpec(
                kind="iid", n_symbols=50, dist=(1.0, 0.0), seed=1
            )
        )


def test_report_matches_schema(markov_report):
    _, _, rep = markov_report
    jsonschema.validate(rep.to_dict(), SCHEMA)


def test_report_round_trips(markov_report):
    _, _, rep = markov_report
    assert report_from_dict(rep.to_dict()) == rep


def test_report_from_dict_rejects_malformed():
    with pytest.raises(DataError, match="malformed"):
        report_from_dict({"dataset_name": "x"})


def test_characterize_deterministic(markov_report):
    ds, _, rep = markov_report
    again = characterize(ds, CharacterizeParams(d_max=6))
    assert again == rep


def test_threads_bit_identical(markov_report):
    ds, _, rep = markov_report
    threaded = characterize(ds, CharacterizeParams(d_max=6, threads=4))
    assert threaded == rep


def test_dataset_entropy_scope(markov_report):
    ds, _, _ = markov_report
    rep = characterize(
        ds, CharacterizeParams(d_max=3, entropy_scope="dataset")
    )
    # one long stream, same dynamics: still near the analytic rate
    assert rep.entropy_bits_mean == pytest.approx(math.log2(7), rel=0.05)
    assert any("entropy_scope=dataset" in w for w in rep.warnings)


def test_per_user_mi_scope(markov_report):
    ds, _, _ = markov_report
    rep = characterize(ds, CharacterizeParams(d_max=3, mi_scope="per_user"))
    assert rep.mi_curve[0][1] == pytest.approx(3.0 - math.log2(7), abs=0.01)
    assert any("mi_scope=per_user" in w for w in rep.warnings)


def test_short_sequences_skipped():
    ds = make_dataset(
        {"a": [0, 1, 2, 0, 1, 2, 0, 1], "b": [3]}, n_pois=4
    )
    rep = characterize(ds, CharacterizeParams(d_max=1))
    assert rep.n_users == 1
    assert any("skipped short" in w for w in rep.warnings)
    with pytest.raises(DataError, match=">= 2 symbols"):
        characterize(make_dataset({"b": [3]}, n_pois=4))


def test_dmax_capped_for_short_streams():
    ds = make_dataset({"a": [0, 1, 2, 3] * 15}, n_pois=4)
    rep = characterize(ds, CharacterizeParams(d_max=100))
    assert max(d for d, _ in rep.mi_curve) == 5  # (60-1)//10
    assert any("capped" in w for w in rep.warnings)


def test_mi_curve_clamped_nonnegative(markov_report):
    _, _, rep = markov_report
    assert all(i >= 0.0 for _, i in rep.mi_curve)


def test_pmi_top_sorted_and_finite(markov_report):
    _, _, rep = markov_report
    vals = [v for _, v in rep.pmi_top]
    assert len(vals) == 10
    assert vals == sorted(vals, reverse=True)
    assert all(math.isfinite(v) for v in vals)
    # zero diagonal: a symbol never follows itself, so the top pairs
    # (which beat independence) are all off-diagonal
    assert all(a != b for (a, b, _), _ in rep.pmi_top)


def test_attribute_matrix_shape(markov_report):
    _, _, rep = markov_report
    names, m = per_user_attribute_matrix(rep)
    assert names == ["n_symbols", "n_pois", "entropy_bits", "predictability"]
    assert m.shape == (4, 10)
    assert np.all(m[0] > 0)


def test_params_validation():
    with pytest.raises(ValueError):
        CharacterizeParams(d_max=0)
    with pytest.raises(ValueError):
        CharacterizeParams(entropy_scope="global")
    with pytest.raises(ValueError):
        CharacterizeParams(mi_scope="both")
    with pytest.raises(ValueError):
        CharacterizeParams(threads=0)
