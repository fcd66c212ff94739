import re

import numpy as np
import pytest

from slarm.corpus import DialoguePair
from slarm.synth import make_synthetic_corpus

_CRITERION_RE = re.compile(r"test_criterion_(\d+)_(\w+)")
_criterion_results: dict[int, tuple[str, str]] = {}


def toy_pairs(seed=1, n=10, responses_per_post=1):
    raw = make_synthetic_corpus(seed, n, responses_per_post=responses_per_post)
    return [DialoguePair(tuple(p.split()), tuple(r.split())) for p, r in raw]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def relative_error(analytic, numeric):
    """Norm-based relative error; both vectors ~0 counts as agreement."""
    a, n = np.ravel(analytic), np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale < 1e-10:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def check_gradients(loss_fn, arrays, grads, eps=1e-5, max_entries=16, seed=0):
    """Central finite differences against analytic gradients.

    ``arrays``/``grads`` map names to parameter arrays (perturbed in place)
    and to the gradient buffers filled by one ``loss_fn().backward()``.
    Checks the largest-gradient entries plus a few random ones per array and
    returns ``{name: relative_error}``.
    """
    for g in grads.values():
        g.fill(0.0)
    loss_fn().backward()
    analytic_all = {k: g.copy() for k, g in grads.items()}
    rng = np.random.default_rng(seed)
    errors = {}
    for name, arr in arrays.items():
        flat = arr.reshape(-1)
        g = analytic_all[name].reshape(-1)
        top = np.argsort(-np.abs(g))[: max_entries // 2]
        rand = rng.choice(flat.size, size=min(flat.size, max_entries // 2), replace=False)
        idx = np.unique(np.concatenate([top, rand]))
        numeric = np.empty(idx.size)
        for j, i in enumerate(idx):
            old = flat[i]
            flat[i] = old + eps
            up = float(loss_fn().data)
            flat[i] = old - eps
            down = float(loss_fn().data)
            flat[i] = old
            numeric[j] = (up - down) / (2 * eps)
        errors[name] = relative_error(g[idx], numeric)
    return errors


def pytest_runtest_logreport(report):
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _criterion_results[n] = (status, m.group(2).replace("_", " "))


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criterion_results):
        status, title = _criterion_results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
