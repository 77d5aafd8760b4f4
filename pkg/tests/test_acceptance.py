"""Acceptance gate: every criterion runs at its stated tolerance and must
pass; each test prints its verdict line."""

import pytest

from sobtrace import acceptance

LABELS = [label for label, _ in acceptance._CRITERIA]


@pytest.fixture(scope="module")
def artifact_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.parametrize(
    "number", range(1, len(LABELS) + 1), ids=[l.replace(" ", "-") for l in LABELS]
)
def test_criterion(number, artifact_dir):
    result = acceptance.run(number, seed=0, out_dir=artifact_dir)
    verdict = "pass" if result.passed else "FAIL"
    print(f"{result.label}: {verdict}  {result.detail}  [{result.seconds:.1f}s]")
    assert result.passed, f"{result.label}: {result.detail}"
