"""Shared fixtures; acceptance results are summarized at the end of the run."""
import math

import pytest

from bec_impurity import pipeline
from bec_impurity.params import RunConfig, default_config

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def report(criterion: str, ok: bool, detail: str) -> None:
    """Record one acceptance check; printed in the terminal summary."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
        checks = ACCEPTANCE[key]
        verdict = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        details = "; ".join(d for _, d in checks)
        terminalreporter.write_line(f"criterion {key}: {verdict}  {details}")


@pytest.fixture(scope="session")
def production(tmp_path_factory):
    """Reference configuration propagated to two returns, for N and 4N.

    Runs the real pipeline stages once per session; every acceptance test
    reads the files it leaves behind.
    """
    base = default_config()
    settings = dict(base.settings, t_final=2.0 * math.sqrt(2.0) * math.pi)
    config = RunConfig(base.params, settings)
    root = tmp_path_factory.mktemp("production")
    stages = {}
    for n_atoms, cfg in pipeline.two_n_configs(config):
        stages[n_atoms] = pipeline.ensure_series(cfg, root / f"N{n_atoms}")
    return config, root, stages
