import numpy as np
import pytest

from dimerqed.config import fixture_path, list_fixtures, load_config
from dimerqed.liouville import steady_state
from dimerqed.sweep import build_model, evaluate_model

SCALARS = ["concurrence", "populations", "intensity"]


@pytest.mark.parametrize("name", list_fixtures())
def test_steady_state_residual_is_small(name):
    spec = load_config(fixture_path(name))
    ms = build_model(spec.base, spec.models[0])
    rho = steady_state(ms.L)
    L = ms.L.matrix
    assert np.linalg.norm(L @ rho.reshape(-1)) < 1e-10 * np.linalg.norm(L, 2)


@pytest.mark.parametrize("name", [n for n in list_fixtures()
                                  if "full" in load_config(fixture_path(n)).models])
def test_cavity_cutoff_is_converged(name):
    p = load_config(fixture_path(name)).base
    a = evaluate_model(p.with_(n_max=3), "full", SCALARS)
    b = evaluate_model(p.with_(n_max=4), "full", SCALARS)
    diff = max(abs(a[k] - b[k]) for k in a if not k.endswith(".error"))
    assert diff < 1e-4
