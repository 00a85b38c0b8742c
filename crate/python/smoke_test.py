"""Smoke test for the complex_ad Python extension.

Build and install first:

    pip install --no-build-isolation -e crates/py
"""

import cmath
import json
import math

import complex_ad as cad


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def test_squared_modulus():
    # F = |z|^2 at z = 1 + 2i has gradient 2z
    t = cad.Tape()
    z = t.leaf(cad.Tensor([1 + 2j]))
    zc = t.apply("conj", z)
    p = t.apply("mul", z, zc)
    s = t.apply("sum", p)
    f = t.apply("re", s)
    assert close(t.value(f).data[0], 5.0)
    assert close(t.backward(f)[z].data[0], 2 + 4j)


def test_inner_product_slots():
    # F = Re<z, w> = Re sum conj(z) w
    t = cad.Tape()
    z = t.leaf(cad.Tensor([1j, 2.0]))
    w = t.leaf(cad.Tensor([3.0, 1 - 1j]))
    f = t.apply("re", t.apply("inner", z, w))
    g = t.backward(f)
    assert all(close(a, b) for a, b in zip(g[z].data, [3.0, 1 - 1j]))
    assert all(close(a, b) for a, b in zip(g[w].data, [1j, 2.0]))


def test_real_leaf_gets_real_gradient():
    t = cad.Tape()
    x = t.leaf(cad.Tensor.real([0.5]))
    z = t.leaf(cad.Tensor([0.3 - 0.2j]))
    e = t.apply("exp", t.apply("mul", x, z))
    f = t.apply("abs", t.apply("sum", e))
    g = t.backward(f)
    assert g[x].is_real
    expected = abs(cmath.exp(0.5 * (0.3 - 0.2j))) * 0.3
    assert close(g[x].data[0], expected)


def test_bad_input_raises():
    t = cad.Tape()
    z = t.leaf(cad.Tensor([1j]))
    try:
        t.backward(z)
    except ValueError:
        pass
    else:
        raise AssertionError("complex-valued loss accepted")
    try:
        t.apply("log", t.constant(cad.Tensor([0j])))
    except ValueError:
        pass
    else:
        raise AssertionError("log(0) accepted")


def test_unitary_parametrization_and_cayley():
    n = 4
    w = cad.build_w(
        [0.1, 0.2, 0.3, 0.4],
        [0.0, -1.0, 2.0, 0.5],
        [1.0, 1.0, -0.3, 0.0],
        [1 + 1j, 0.5, -1j, 2.0],
        [0.2, 1j, 1.0, -1.0],
        [2, 0, 3, 1],
    )
    assert w.shape == [n, n]
    assert cad.unitarity_defect(w) <= 1e-12
    grad = cad.Tensor([complex(math.sin(k), math.cos(k)) for k in range(n * n)], [n, n])
    for _ in range(20):
        w = cad.cayley_update(w, grad, 0.1)
    assert cad.unitarity_defect(w) <= 1e-12


def test_gd_step():
    p = cad.gd_step(cad.Tensor([1 + 1j]), cad.Tensor([2 + 2j]), 0.25)
    assert close(p.data[0], 0.5 + 0.5j)


def test_reports():
    table = json.loads(cad.verify_table(trials=3))
    assert table["summary"] == {"total": 14, "passed": 14}
    check = json.loads(cad.gradcheck("urnn_unrolled", dims=3, trials=2))
    assert all(c["pass"] for c in check["cases"])
    gd = json.loads(cad.demo_gd("abs2", lr=0.1))
    assert all(c["pass"] for c in gd["cases"])
    try:
        cad.gradcheck("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown loss accepted")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok  {test.__name__}")
    print(f"{len(tests)} passed")
