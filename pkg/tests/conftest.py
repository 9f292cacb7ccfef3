from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest

from specwalk import spectra

_criteria: dict[int, dict] = {}


@lru_cache(maxsize=None)
def xxz_eigenvalues(L: int, Delta: float, alpha: float) -> np.ndarray:
    ev = spectra.diagonalize(spectra.build_xxz_nnn(L, Delta, alpha))
    ev.flags.writeable = False
    return ev


def xxz_spectrum(L, Delta, alpha, beta=0.0, energy_ref=0.0):
    meta = {"name": "xxz-nnn", "L": L, "Delta": Delta, "alpha": alpha}
    return spectra.make_weighted_spectrum(
        xxz_eigenvalues(L, Delta, alpha), beta, energy_ref=energy_ref, model_meta=meta
    )


@lru_cache(maxsize=None)
def syk_eigenvalues(n_majorana: int, k: int, seed: int) -> np.ndarray:
    ev = spectra.diagonalize(spectra.build_syk(n_majorana, k, 1.0, seed))
    ev.flags.writeable = False
    return ev


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            number, text = m.args
            _criteria.setdefault(number, {"text": text, "outcomes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _criteria[m.args[0]]["outcomes"].append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        c = _criteria[number]
        outs = c["outcomes"]
        if not outs:
            status = "NOT RUN"
        elif all(o == "passed" for o in outs):
            status = "PASS"
        elif any(o == "failed" for o in outs):
            status = "FAIL"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number:>2}: {status:<7} {c['text']}")
