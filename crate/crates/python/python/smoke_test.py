"""Smoke test for the proxsampler extension: build with `maturin develop`
or `pip install .` inside crates/python, then run this file."""

import math

import proxsampler as ps


def mean(rows):
    n = len(rows)
    return [sum(r[i] for r in rows) / n for i in range(len(rows[0]))]


def main():
    # Gaussian on [-1, 1]^2: coordinate variance is about 0.2912.
    t = ps.Target.gaussian_box(2, 1.0)
    out = ps.sample(t, outer_iters=20000, h=0.5, inner_steps=24, seed=1)
    xs = out["iterates"][2000:]
    assert len(out["iterates"]) == 20001
    assert all(abs(c) <= 1.0 for x in xs for c in x)
    var = sum(x[0] ** 2 for x in xs) / len(xs)
    assert abs(var - 0.2912) < 0.02, var
    assert out["grad_evals"][-1] == 25 * 20000

    # Oracle draws and prox.
    g = ps.Rgo.l1(3, 2.0)
    assert g.prox(0.5, [2.0, -0.3, 0.0]) == [1.0, 0.0, 0.0]
    draws = g.draw(0.5, [0.0, 0.0, 0.0], n=2000, seed=3)
    assert len(draws) == 2000 and all(len(d) == 3 for d in draws)
    m = mean(draws)
    assert all(abs(c) < 0.1 for c in m), m

    # Logistic target and the two baselines.
    lt = ps.Target.logistic_l1(seed=0)
    assert lt.dim == 36 and lt.beta > lt.alpha > 0
    h = 1.0 / lt.beta
    mala = ps.run_baseline(lt, "prox-mala", h, 2000, seed=4)
    pgla = ps.run_baseline(lt, "pgla", h, 2000, seed=4)
    assert 0.0 < mala["acceptance_rate"] <= 1.0
    assert pgla["acceptance_rate"] == 1.0
    rmse = ps.running_rmse(mala["iterates"], lt.x_star)
    assert len(rmse) == 2001 and all(math.isfinite(r) for r in rmse)

    assert ps.sliced_w2(xs[:500], xs[:500]) == 0.0
    try:
        ps.sample(t, outer_iters=10, h=5.0)
    except ValueError:
        pass
    else:
        raise AssertionError("step above 1/beta must be rejected")
    print("proxsampler smoke test passed")


if __name__ == "__main__":
    main()
