"""Smoke test for the nrf_py extension: grid5 end to end."""

import csv
import io
import json

import nrf_py


def main():
    plant = nrf_py.grid5_plant()
    assert plant.order == 9, plant

    dcf = nrf_py.grid5_dcf()
    assert dcf.bezout_residual() < 1e-8

    q = nrf_py.grid5_q()
    nrf = nrf_py.NrfPair.from_dcf(dcf, q)
    assert nrf.phi.shape == (5, 5) and nrf.gamma.shape == (5, 5)
    assert nrf.conforms(nrf_py.grid5_patterns_json())
    again = nrf_py.NrfPair.from_json(nrf.to_json())
    assert again.phi.max_coeff_diff(nrf.phi) == 0.0

    orders, bundle = nrf_py.realize(nrf)
    assert orders == [2, 3, 4, 3, 3], orders
    assert len(json.loads(bundle)["rows"]) == 5

    eigs = nrf_py.closed_loop_eigenvalues(plant, nrf)
    assert len(eigs) == 24 and max(abs(e) for e in eigs) < 1.0

    mr3 = nrf_py.certificate_poles(dcf, q, "mr3")
    assert len(mr3) == 5 and all(abs(p - 1) < 1e-6 for p in mr3), mr3

    text = nrf_py.simulate(nrf_py.grid5_scenario_json(seed=42, horizon=100))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 100
    ys = [k for k in rows[0] if k.startswith("y")]
    assert max(abs(float(r[k])) for r in rows for k in ys) <= 3.0
    assert text == nrf_py.simulate(nrf_py.grid5_scenario_json(seed=42, horizon=100))

    try:
        nrf_py.certificate_poles(dcf, q, "mr9")
    except nrf_py.NrfException:
        pass
    else:
        raise AssertionError("bad mode accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
