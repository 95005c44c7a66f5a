import pytest

import retrobell as rb


@pytest.fixture(scope="session")
def bell_model():
    return rb.bell_backward_model()


@pytest.fixture(scope="session")
def ghz_model():
    return rb.ghz_backward_model()


@pytest.fixture(scope="session")
def pr_model():
    return rb.pr_backward_model()


@pytest.fixture(scope="session")
def counterexample_model():
    return rb.signalling_counterexample_model()


@pytest.fixture(scope="session")
def bell_grid(bell_model):
    return rb.default_grid(bell_model, 16)
