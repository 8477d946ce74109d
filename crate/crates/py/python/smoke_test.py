"""Smoke test of the Python extension.

    pip install --no-build-isolation ./crates/py   # or: maturin develop -m crates/py/Cargo.toml
    python crates/py/python/smoke_test.py
"""
import json
import math

import aoi_outage as ao


def main():
    assert ao.q_function(0.0) == 0.5
    assert abs(ao.q_function(1.96) - 0.024997895148220435) < 1e-15
    assert ao.block_error_rate(0, 16, 0.06) == 1.0

    s = ao.Scenario.preset("scenario_b")
    assert s.state_count == 100 and s.blocklength == 1000
    assert s.states()[0] == (1, 1, 0, 0)
    assert ao.state_to_index((5, 5, 1, 1), 5) == 100
    assert ao.index_to_state(1, 5) == (1, 1, 0, 0)
    assert s.is_outage((4, 1, 0, 0)) and not s.is_outage((3, 3, 1, 1))

    naive = ao.naive_policy(s)
    assert naive == [500] * 100
    p = ao.transition_matrix(s, naive)
    assert all(abs(sum(row) - 1.0) < 1e-12 for row in p)
    pi = ao.steady_state(s, naive)
    assert abs(sum(pi) - 1.0) < 1e-12
    p_out = ao.outage_probability(s, naive)
    assert 0.0 < p_out < 0.05

    bursts = ao.burst_stats(s, naive)
    assert bursts["status"] == "defined"
    assert abs(bursts["p_out"] - bursts["xi_res_out_1"] * bursts["mean_outage_duration"]) < 1e-9

    report = ao.optimize(s, "exp-peak-aoi", seed=3)
    assert report["terminated_by"] == "converged"
    assert report["final_p_out"] <= ao.outage_probability(s, ao.min_error_policy(s))

    run = ao.simulate(s, naive, 20000, 7)
    assert run == ao.simulate(s, naive, 20000, 7)
    assert abs(run["outage_rate"] - p_out) < 0.01

    reaches = s.with_outage_rule("reaches")
    assert ao.outage_probability(reaches, naive) > p_out
    assert json.loads(reaches.to_json())["state"]["outage_rule"] == "reaches"

    custom = ao.Scenario.from_json(s.to_json())
    assert custom.name == "scenario_b"
    for bad in (lambda: ao.Scenario.preset("nope"), lambda: ao.steady_state(s, [1001] * 100)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print(f"ok: scenario_b naive P_out = {100 * p_out:.3f}%, "
          f"mean burst = {bursts['mean_outage_duration']:.3f}, "
          f"optimized = {100 * report['final_p_out']:.4f}%")
    assert not math.isnan(p_out)


if __name__ == "__main__":
    main()
