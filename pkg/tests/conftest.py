import pytest


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # stash the call-phase report so fixtures can see pass/fail after the test
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
