import importlib

import pytest
from hypothesis import HealthCheck, settings

from distdelay import _kernels_py

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def _backends():
    out = [pytest.param(_kernels_py, id="python")]
    try:
        out.append(pytest.param(importlib.import_module("distdelay._kernels"), id="cython"))
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))
    return out


@pytest.fixture(params=_backends())
def kernels(request):
    return request.param


# acceptance results, printed once at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
