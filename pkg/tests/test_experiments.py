import math

import pytest

from chainmatch.chains import ChainPool, enumerate_chains
from chainmatch.errors import ValidationError
from chainmatch.experiments import (
    ServedRow, SweepResult, SweepSpec, chain_length_breakdown, emit_report, read_report,
    read_table, relative_gains, run_sweep, served_summary, table_rows,
)
from chainmatch.ingestion import IngestConfig, generate_synthetic
from chainmatch.matcher import Objective, ObjectiveKind, Solution, solve
from chainmatch.model import Chain
from support import trip

MS, MP, PR = ObjectiveKind.MAX_SERVICE, ObjectiveKind.MAX_PROFIT, ObjectiveKind.MAX_EXPECTED_PROFIT


@pytest.fixture(scope="module")
def small():
    return generate_synthetic(120, 6, IngestConfig(rng_seed=8))


@pytest.fixture(scope="module")
def small_sweep(small):
    spec = SweepSpec(seed=3, alpha_grid=(0.2, 0.6, 1.0), cf_grid=(0.2, 1.0), n_samples=200)
    return run_sweep(spec, small)


def test_single_cell_equals_direct_solve(small):
    spec = SweepSpec(seed=1, alpha_grid=(0.4,), cf_grid=(0.6,), models=(PR,), n_samples=50)
    (rec,) = run_sweep(spec, small).records
    sol = solve(enumerate_chains(small.with_cost_factor(0.6), 5), Objective(PR, 0.4))
    assert rec.expected_profit == sol.expected_profit
    assert rec.served == sol.served_user_count and rec.status == "optimal"


def test_cf_one_profit_models_are_zero(small_sweep):
    for a in small_sweep.spec.alpha_grid:
        assert small_sweep.get(MP, a, 1.0).expected_profit == 0.0
        assert small_sweep.get(PR, a, 1.0).expected_profit == 0.0


def test_record_order_is_grid_order(small_sweep):
    keys = [(r.cost_factor, r.model, r.alpha) for r in small_sweep.records]
    assert len(keys) == 2 * 3 * 3 and len(set(keys)) == len(keys)


def test_spec_validation():
    with pytest.raises(ValidationError):
        SweepSpec(seed=None)
    with pytest.raises(ValidationError):
        SweepSpec(seed=1, alpha_grid=(0.0,))
    with pytest.raises(ValidationError):
        SweepSpec(seed=1, cf_grid=())
    with pytest.raises(ValidationError):
        run_sweep(SweepSpec(seed=1))


def test_breakdown_single_three_chain():
    c = Chain((trip("a", 0, 1, 1, 2, cf=0.2), trip("b", 1, 2, 2, 3, cf=0.2), trip("c", 2, 0, 3, 4, cf=0.2)))
    sol = solve(ChainPool((c,), 3), Objective(PR, 0.5))
    out = chain_length_breakdown(sol, 3)
    assert out[3] == {"profit_share": 100.0, "served_share": 100.0}
    assert out[2] == {"profit_share": 0.0, "served_share": 0.0}


def test_breakdown_empty_solution():
    empty = Solution(Objective(PR), (), (), 0.0)
    assert all(v == {"profit_share": 0.0, "served_share": 0.0}
               for v in chain_length_breakdown(empty, 4).values())


def test_breakdown_independent_recount():
    inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
    sol = solve(enumerate_chains(inst, 5), Objective(PR, 0.5))
    out = chain_length_breakdown(sol, 5)
    total = sum(e.expected_profit for e in sol.per_chain)
    for d in range(2, 6):
        share = sum(e.expected_profit for c, e in zip(sol.chains, sol.per_chain) if len(c) == d)
        assert out[d]["profit_share"] == pytest.approx(100 * share / total, abs=1e-9)
        users = sum(len(c) for c in sol.chains if len(c) == d)
        assert out[d]["served_share"] == pytest.approx(100 * users / sol.served_user_count)
    assert sum(v["served_share"] for v in out.values()) == pytest.approx(100.0)


def test_served_summary_baseline_arithmetic():
    rows = served_summary({"Proposed": 965, "Empty": 0}, 2413, 110)
    assert rows[0] == ServedRow("Round-trip baseline", 110, 100 * 110 / 2413)
    assert rows[0].display == "4.56%"
    assert rows[1].display == "39.99%" and round(rows[1].percent) == 40
    assert rows[2].served == 0
    with pytest.raises(ValidationError):
        served_summary({}, 0, 0)


def test_table_shape_and_parse(tmp_path, small_sweep):
    paths = emit_report(small_sweep, tmp_path)
    header, rows = read_table(paths["table"])
    assert (header, rows) == tuple(map(list, table_rows(small_sweep)))
    assert len(rows) == 2 * 3 and all(len(r) == 2 + 2 * 3 for r in rows)
    assert read_report(paths["json"]) == small_sweep


def test_empty_report_writes_nothing(tmp_path, small_sweep):
    empty = SweepResult(small_sweep.spec, ())
    with pytest.raises(ValidationError):
        emit_report(empty, tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_relative_gains_keys(small_sweep):
    g = relative_gains(small_sweep)
    assert set(g) == {(k, m) for k in ("vs_alpha", "vs_cost_factor", "service_vs_alpha") for m in (MP, MS)}
    for v in g.values():
        assert math.isfinite(v["artifact"]) and v["reference"] > 0


def test_sweep_is_deterministic(small):
    spec = SweepSpec(seed=5, alpha_grid=(0.3, 0.7), cf_grid=(0.4,), n_samples=300)
    assert run_sweep(spec, small, workers=1) == run_sweep(spec, small, workers=3)
