import json

import numpy as np
import pytest

from bchaos.report import RESULTS, SCHEMA, Report, bundle, dumps, results_table


def make(suite="s", result="linearity", witness=None, passed=True, residual=0.0):
    return Report(suite, result, passed, residual, witness=witness)


def test_unknown_tag_rejected():
    with pytest.raises(KeyError):
        make(result="no-such-result")


def test_bundle_is_order_independent():
    reports = [make("b", witness={"i": 2}), make("a"), make("b", witness={"i": 1}, passed=False)]
    one = dumps(bundle(reports, {"seed": 1}))
    two = dumps(bundle(list(reversed(reports)), {"seed": 1}))
    assert one == two
    doc = json.loads(one)
    assert doc["schema"] == SCHEMA and doc["passed"] is False
    assert [r["suite"] for r in doc["reports"]] == ["a", "b", "b"]


def test_timing_only_on_request():
    r = make()
    r.timing = 1.5
    assert "timing_s" not in r.to_dict()
    assert r.to_dict(timing=True)["timing_s"] == 1.5


def test_numpy_values_serialize():
    r = Report("s", "linearity", np.bool_(True), np.float64(1e-3),
               witness={"sigma": np.int64(3)}, details={"v": np.array([1.0, -0.0]), "z": 1 + 2j,
                                                        "inf": float("inf")})
    text = dumps(bundle([r], {}))
    doc = json.loads(text)["reports"][0]
    assert doc["witness"] == {"sigma": 3}
    assert doc["details"] == {"v": [1.0, 0.0], "z": [1.0, 2.0], "inf": "inf"}
    assert text.endswith("\n")


def test_line_and_bool():
    assert bool(make()) and not bool(make(passed=False))
    assert make(passed=False, residual=2.0).line().startswith("[FAIL]")


def test_results_table_lists_every_tag():
    table = results_table()
    for tag in RESULTS:
        assert f"`{tag}`" in table
