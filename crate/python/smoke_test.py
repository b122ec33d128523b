"""Smoke test for the hermite_lab extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/hermite_lab-*.whl
"""

import cmath
import json
import math

import hermite_lab as hl


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # h_0(x) = π^{-1/4} e^{-x²/2}
    assert close(hl.eval_hermite(0, 0.3), math.pi ** -0.25 * math.exp(-0.045), 1e-14)

    # Mehler kernel against a truncated spectral sum
    t, x, y = 0.7, 0.4, -1.1
    spectral = sum(math.exp(-(2 * k + 1) * t) * hl.eval_hermite(k, x) * hl.eval_hermite(k, y) for k in range(60))
    assert close(hl.mehler_kernel(t, [x], [y]), spectral, 1e-12)

    # ∂_t^α e^{-tμ} = e^{iπα} μ^α e^{-tμ}
    alpha, mu, t = 0.5, 5.0, 1.0
    want = cmath.exp(1j * math.pi * alpha) * mu ** alpha * math.exp(-t * mu)
    assert abs(hl.fractional_derivative(mu, alpha, t) - want) <= 1e-6 * abs(want)

    f = hl.Expansion.random(1, 6, seed=3)
    assert len(f) == 7
    g = f.heat(0.5)
    assert close(g[[2]], f[[2]] * math.exp(-5 * 0.5), 1e-14)
    assert close(f.imaginary_power([0.8]).l2_norm(), f.l2_norm(), 1e-12)
    assert close(f.lp_norm(2.0), f.l2_norm(), 1e-10)

    # the raising operator sends h_0 to √2 h_1
    h0 = hl.Expansion(1, 0)
    h0[[0]] = 1.0
    assert close(h0.ladder(-1)[[1]], math.sqrt(2.0), 1e-14)
    assert len(h0.ladder(1)) == 0

    s = hl.parse_symbol("sqrt(z1/(z1+1))")
    assert close(s([3.0]).real, math.sqrt(0.75), 1e-15)
    try:
        hl.parse_symbol("z1^")
    except ValueError as e:
        assert "offset 3" in str(e)
    else:
        raise AssertionError("expected a syntax error")

    one = hl.catalog_symbol("identity", 1)
    u = 2.0
    got = hl.mellin(one, [1], [1.0], [u])
    # |Γ(1 − iu)|² = πu / sinh(πu)
    assert close(abs(got), 2 * math.sqrt(math.pi * u / math.sinh(math.pi * u)), 1e-6)

    report = json.loads(hl.run_experiment("experiment = meda\nseries_step = 5"))
    assert report["experiment"] == "meda"
    assert report["summary"]["finite"] == "1.0"
    assert len(report["content_hash"]) == 64

    print("hermite_lab smoke test passed")


if __name__ == "__main__":
    main()
