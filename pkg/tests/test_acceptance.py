"""Numbered acceptance criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
value, the target and the tolerance, then asserts the verdict. Run with
``pytest tests/test_acceptance.py -s`` to see the lines.
"""
import pytest

from dimerqed import validation as v
from dimerqed.model import dipole_coupling

pytestmark = pytest.mark.slow


def _report(res):
    print()
    print(res.line())
    assert res.passed, res.line()


def test_01_dipole_couplings():
    _report(v.check_dipole_fixtures())


def test_01_negative_control_flipped_gamma12_sign_fails():
    def flipped(geom):
        J, g12 = dipole_coupling(geom)
        return J, -g12
    res = v.check_dipole_fixtures(flipped)
    print()
    print("negative control:", res.line())
    assert not res.passed


def test_02_two_photon_rabi_frequency():
    _report(v.check_two_photon_frequency())


def test_03_three_resonance_structure():
    _report(v.check_three_resonances(threads=4))


def test_04_effective_model_concordance():
    _report(v.check_effective_models(threads=4))


def test_05_mechanism1_timescales():
    _report(v.check_mechanism1_timescales())


def test_06_mechanism2_analytics():
    _report(v.check_mechanism2())


def test_07_waveguide_concurrence():
    _report(v.check_waveguide())


def test_08_mechanism3_closed_form():
    _report(v.check_mechanism3())


def test_09_metastable_plateau():
    _report(v.check_metastability())


def test_10_decoherence_robustness():
    _report(v.check_decoherence())


def test_11_oracle_identities():
    _report(v.check_oracles())


def test_report_carries_wall_clock_per_criterion(capsys):
    res = v.validate_paper_fixtures(only=[1, 2])
    assert all(r.seconds >= 0 for r in res)
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and out[0].endswith("s")
