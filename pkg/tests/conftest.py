import json

import numpy as np
import pytest

from framesel.data import SyntheticSpec, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_planted():
    return generate_synthetic(SyntheticSpec(n_samples=200, n_features=20, n_informative=4,
                                            class_sep=3.0, seed=7))


def tiny_config(n_datasets=2, models=("logistic", "gbt"), selectors=None):
    """A quick synthetic bench config as a JSON-ready dict."""
    datasets = [{"name": f"ds{i}",
                 "synthetic": {"n_samples": 120, "n_features": 25, "n_informative": 4,
                               "class_sep": 2.0, "seed": 50 + i}}
                for i in range(n_datasets)]
    if selectors is None:
        selectors = [{"name": "KBest", "method": "select_k_best", "k": 5},
                     {"name": "Fwd", "method": "forward", "k": 3,
                      "estimator": {"algorithm": "gbt", "params": {"n_rounds": 10}}}]
    return {"name": "tiny", "master_seed": 7, "datasets": datasets, "selectors": selectors,
            "models": [{"name": m, "algorithm": m,
                        **({"params": {"n_rounds": 10}} if m == "gbt" else {})}
                       for m in models]}


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config()), encoding="utf-8")
    return path


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL/SKIP line for an acceptance criterion."""
    def log(number, ok, detail):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"AC{number:<2d} {status}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[2:4])):
            terminalreporter.write_line(line)
