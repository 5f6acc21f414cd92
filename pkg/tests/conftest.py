import json
import os
import sys

import numpy as np
import pytest

# no run ledger during tests
os.environ["PSLAB_DATABASE_URL"] = ""
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size acceptance runs")


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def write_json_file(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture
def matrix_file(write_json_file):
    def write(name, A):
        A = np.asarray(A, dtype=complex)
        return write_json_file(name, {
            "rows": A.shape[0],
            "cols": A.shape[1],
            "data": [[v.real, v.imag] for v in A.ravel()],
        })

    return write
