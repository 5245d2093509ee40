import importlib.util
from pathlib import Path

import pytest

from isardip.neural import NUMBA_AVAILABLE

BENCH = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"


def load():
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_numpy_backend_runs():
    res = load().run_backend(True, size=8, repeats=1)
    assert res["backend"] == "numpy" and res["train_step_s"] > 0


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not importable")
def test_numba_backend_runs():
    assert load().run_backend(False, size=8, repeats=1)["backend"] == "numba"
