import json

import numpy as np
import pytest

from painleve_xx.errors import UsageError
from painleve_xx.integrator import ToleranceConfig
from painleve_xx.models import Model
from painleve_xx.paths import DensePath
from painleve_xx.verify import SUITES, THEOREM_TAGS, Case, ensemble_cases, residual, run_suite


@pytest.fixture(scope="module")
def report_all():
    return run_suite("all")


def test_all_suite_passes(report_all):
    failed = [(c.id, c.measured, c.threshold) for c in report_all.failed]
    assert report_all.overall, failed


def test_every_theorem_is_covered(report_all):
    assert {c.theorem for c in report_all.cases} == THEOREM_TAGS


def test_cases_sorted_and_unique(report_all):
    ids = [c.id for c in report_all.cases]
    assert ids == sorted(set(ids))


def test_all_is_union_of_suites(report_all):
    union = set()
    for name in SUITES:
        rep = run_suite(name)
        assert rep.overall and rep.cases
        union |= {c.id for c in rep.cases}
    assert union == {c.id for c in report_all.cases}


def test_report_is_deterministic(report_all):
    again = run_suite("all")
    a, b = report_all.to_dict(), again.to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_schema(report_all):
    doc = json.loads(json.dumps(report_all.to_dict()))
    assert doc["format_version"] == 1 and doc["suite"] == "all" and doc["overall"] is True
    for case in doc["cases"]:
        assert {"id", "theorem", "measured", "threshold", "pass"} <= set(case)
    assert doc["tolerances"]["integrator"]["rtol"] == 1e-10


def test_unknown_suite():
    with pytest.raises(UsageError):
        run_suite("nonsense")


def test_loose_tolerance_degrades_derivative_estimates():
    rep = run_suite("theorems", ToleranceConfig(rtol=1e-4, atol=1e-4))
    assert not rep.overall
    assert any(c.theorem in ("X'", "root", "sigma") for c in rep.failed)


def test_case_relations():
    assert Case("x", "ne", 2.0, 1.0, True, ">=").to_dict()["pass"] is True
    with pytest.raises(ValueError):
        Case("x", "bogus", 0.0, 1.0, True)


def test_residual_detects_a_non_solution():
    exact = DensePath.from_function(Model.PII0, (0, 1), lambda t: np.stack([0 * t, 0 * t], axis=-1))
    wrong = DensePath.from_function(Model.PII0, (0, 1), lambda t: np.stack([t * t, 2 * t], axis=-1))
    assert residual(exact) == 0.0
    assert residual(wrong) > 0.1
    with pytest.raises(UsageError):
        residual(exact, samples=4)
    with pytest.raises(UsageError):
        residual(exact, model="xxprime")


def test_ensemble_is_seeded():
    a = ensemble_cases(3, seed=7)
    b = ensemble_cases(3, seed=7)
    assert [c.to_dict() for c in a] == [c.to_dict() for c in b]
    assert all(c.passed for c in a)
