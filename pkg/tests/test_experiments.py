# tests/test_experiments.py
import pytest

from app.services import experiments
from app.services.experiments import ExperimentRow, format_table, run_experiment_row
from app.utils.errors import ConfigError, InsufficientTorsion, NotAnOrder, SearchExhausted


def _row(p, avg, errors=0):
    return ExperimentRow(p=p, ell=2, iterations=10, orders=9, bass_orders=7, avg_n_lambda=avg,
                         coprime_fraction=0.5, strategy="fp", seed=0, errors=errors)


def test_format_table():
    text = format_table([_row(30011, 2.25), _row(50021, None, errors=1)])
    lines = text.splitlines()
    assert "Bass orders" in lines[0] and "average N(Lambda)" in lines[0]
    assert lines[0].rstrip().endswith("errors")
    assert set(lines[1]) == {"-"}
    assert "30011" in lines[2] and "2.25" in lines[2]
    cells = [c.strip() for c in lines[3].split("|")]
    assert cells[3] == "-" and cells[4] == "1"


def test_rejects_bad_parameters(settings):
    with pytest.raises(ConfigError):
        run_experiment_row(103, 0, settings)
    with pytest.raises(ConfigError):
        run_experiment_row(7, 1, settings)


def test_resource_failures_are_not_counted_as_non_orders(settings, monkeypatch):
    failures = [NotAnOrder("conmutan"), SearchExhausted("sin ciclos"), InsufficientTorsion("sin niveles"),
                NotAnOrder("rango 3")]
    calls = iter(failures)

    def fake_suborder(*args, **kwargs):
        raise next(calls)

    monkeypatch.setattr(experiments, "compute_bass_suborder", fake_suborder)
    monkeypatch.setattr(experiments, "random_supersingular_j", lambda g, rng, outside_Fp=True: g.F(1728))
    row = run_experiment_row(103, len(failures), settings)
    assert row.orders == 0 and row.bass_orders == 0
    assert row.errors == 2
    assert row.to_json()["errors"] == 2


@pytest.mark.slow
def test_small_row_is_consistent(settings):
    row = run_experiment_row(103, 3, settings, strategy="fp")
    assert row.iterations == 3
    assert 0 <= row.bass_orders <= row.orders <= 3 - row.errors
    if row.bass_orders:
        assert row.avg_n_lambda >= 1
    again = run_experiment_row(103, 3, settings, strategy="fp")
    assert again.to_json() == row.to_json()
