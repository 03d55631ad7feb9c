"""Smoke test for the crossimpact_py extension module.

Build and install it first:
    pip install --no-build-isolation -e crates/python
"""

import math
import tempfile
from pathlib import Path

import crossimpact_py as ci

SPEC = """\
mu = [0.4, 0.25]
sizes = [1.0, 1.0]

[phi]
aa = [[[[0.24, 0.8]], [[0.1, 0.5]]], [[[0.1, 0.5]], [[0.2, 0.8]]]]
ab = [[[], []], [[], []]]
ba = [[[], []], [[], []]]
bb = [[[[0.24, 0.8]], [[0.1, 0.5]]], [[[0.1, 0.5]], [[0.2, 0.8]]]]

[price]
lambda = [[0.02, 0.01], [0.01, 0.03]]
p0 = [100.0, 50.0]
"""


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def check_kyle():
    sigma = [[2.0, 0.6], [0.6, 1.0]]
    c = [[1.5, 0.2], [0.2, 0.8]]
    m = ci.kyle_matrix(sigma, c)
    mcm = [[sum(m[i][k] * c[k][l] * m[l][j] for k in range(2) for l in range(2)) for j in range(2)] for i in range(2)]
    assert all(close(mcm[i][j], 0.5 * sigma[i][j], 1e-10) for i in range(2) for j in range(2)), mcm


def check_arbitrage():
    m = [[1.0, 0.35], [0.25, 2.0]]
    k = ci.Kernel([m] * 5, m)
    got = ci.pair_trading_cost(k, 0, 1, 1.5, 0.8, 9.0)
    expect = 81.0 / 18.0 * 0.1 * 1.5 * 0.8
    assert close(got, expect, 1e-8), (got, expect)
    assert ci.min_roundtrip_cost(k, 8, 6.0)["arbitrage"]
    sym = ci.Kernel([[[1.0, 0.3], [0.3, 2.0]]] * 5, [[1.0, 0.3], [0.3, 2.0]])
    assert not ci.min_roundtrip_cost(sym, 8, 6.0)["arbitrage"]


def check_clipping():
    dip = ci.Kernel([[[1.5]], [[1.4]]] + [[[0.5]]] * 6, [[0.5]])
    assert not dip.nsa_check()["verdict"]
    clipped, report = dip.regularize()
    assert report["min_eig_before"] < 0.0
    assert clipped.nsa_check()["verdict"]
    assert clipped.provenance == "k2"


def check_calibration(tmp):
    (tmp / "spec.toml").write_text(SPEC)
    (tmp / "config.toml").write_text(
        'spec = "spec.toml"\nhorizon = 3000.0\ndays = 2\ntau_max = 16\ngrid = 256\nseed = 1\n'
    )
    days = ci.simulate(str(tmp / "config.toml"))
    assert len(days) == 2 and len(days[0]) > 1000
    obs = ci.estimate(str(tmp / "config.toml"))
    assert len(obs["omega"]) == 17
    k1, k2, report = ci.calibrate(str(tmp / "config.toml"))
    assert report["factor"]["residual"] < 1e-6, report["factor"]
    assert report["admissibility_k2"]["verdict"]
    assert ci.check(k2)["admissibility"]["label"] == "necessary-conditions pass"
    k2.write(str(tmp / "k2"))
    back = ci.Kernel.read(str(tmp / "k2"))
    assert back.values == k2.values
    flat = ci.predict(k2, [[0.0, 0.0]] * 10, [100.0, 50.0])
    assert all(row == [100.0, 50.0] for row in flat)
    moved = ci.predict(k1, [[1.0, 0.0]] + [[0.0, 0.0]] * 9, [0.0, 0.0])
    assert math.isclose(moved[1][0], k1.values[1][0][0])
    return k1, k2


def main():
    check_kyle()
    check_arbitrage()
    check_clipping()
    with tempfile.TemporaryDirectory() as d:
        k1, k2 = check_calibration(Path(d))
    print(f"ok: {k1!r}, {k2!r}")


if __name__ == "__main__":
    main()
