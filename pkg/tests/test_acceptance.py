"""Acceptance battery at the stated tolerances; one PASS/FAIL line per criterion.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import pytest

from confsym import acceptance


def _detail(res) -> str:
    parts = [f"{k}={c['value']:.3g} ({'<=' if c['relation'] == 'le' else '>='} {c['tolerance']:g})"
             for k, c in res.checks.items()]
    return "; ".join(parts)


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    res = acceptance.CRITERIA[number]()
    with capsys.disabled():
        print(f"\n{res.line()}\n    {_detail(res)}")
    failed = [k for k, c in res.checks.items() if not c["passed"]]
    assert res.passed, f"criterion {number} failed checks: {failed}"
    assert res.runtime <= res.budget, f"criterion {number} took {res.runtime:.1f}s over {res.budget}s"


if __name__ == "__main__":
    results = acceptance.run(echo=print)
    raise SystemExit(0 if all(r.passed for r in results) else 1)
