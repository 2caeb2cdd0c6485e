import pytest

from diskembed import verify
from diskembed.errors import InvalidArgumentError


def test_all_suites_pass_small():
    results = verify.run_all(trials=60, seed=1)
    failing = [r.line() for r in results if not r.passed]
    assert not failing
    names = [r.name for r in results]
    assert len(names) == len(set(names))


def test_threads_do_not_change_results():
    a = verify.run_all(trials=30, seed=5, threads=1)
    b = verify.run_all(trials=30, seed=5, threads=4)
    assert a == b


def test_fault_injection_breaks_only_gradients():
    results = verify.run_all(trials=20, seed=0, fault="gradient-sign")
    failing = {r.name for r in results if not r.passed}
    assert failing == {f"{k}: gradient finite difference" for k in ("euclidean", "polyhedral", "sphere", "lorentz")}


def test_argument_checks():
    with pytest.raises(InvalidArgumentError):
        verify.run_all(trials=0)
    with pytest.raises(InvalidArgumentError):
        verify.run_all(trials=5, fault="nonsense")


def test_nan_residual_fails():
    assert not verify.PropertyResult("x", float("nan"), 1.0).passed
    assert verify.PropertyResult("x", 0.0, 0.0).passed
    assert verify.PropertyResult("x", 0.0, 0.0).line().startswith("PASS")


def test_planar_oracle_hand_case():
    # D = r_x - r_y is the containment boundary, where psi = Xi
    assert verify.planar_cone_oracle(0.8, 0.3, 0.5, 0.2) == pytest.approx(0.0, abs=1e-14)
