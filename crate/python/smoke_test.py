"""Smoke test for the mtensor Python extension.

Build first:  pip install --no-build-isolation -e crates/py
Run:          python python/smoke_test.py   (or pytest python/)
"""

import math
import os
import tempfile

import mtensor


def example():
    # faces [[1,1],[1,4]] and [[0,0],[0,-3]]
    return mtensor.Tensor([[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [4.0, -3.0]]])


def test_tensor_basics():
    a = example()
    assert a.dims == [2, 2, 2]
    assert math.isclose(a.norm(), math.sqrt(28.0))
    assert a[1, 1, 1] == -3.0
    assert mtensor.Tensor(a.tolist()).distance(a) == 0.0
    b = mtensor.Tensor.from_flat([2, 2, 2], a.flat())
    assert b.distance(a) == 0.0
    assert a.permute_321().permute_321().distance(a) == 0.0


def test_product_and_tsvdm():
    a = mtensor.gen("random_dense", [5, 4, 3], seed=1)
    for kind in ["identity", "dct", "haar", "randorth"]:
        t = mtensor.Transform(kind, 3, seed=2)
        assert t.inverse(t.forward(a)).distance(a) < 1e-12
        i = mtensor.identity_tensor(4, t)
        assert mtensor.mprod(a, i, t).distance(a) < 1e-12
        h = mtensor.conj_transpose(a, t)
        assert h.dims == [4, 5, 3]
        f = mtensor.tsvdm(a, t)
        assert f.trank == 4
        assert f.reconstruct().distance(a) < 1e-10
        errs = [a.distance(f.reconstruct(k)) for k in range(1, 5)]
        assert all(x >= y - 1e-12 for x, y in zip(errs, errs[1:]))
        usv = mtensor.mprod(mtensor.mprod(f.u(), f.s(), t), mtensor.conj_transpose(f.v(), t), t)
        assert usv.distance(a) < 1e-10


def test_face_singular_values():
    t = mtensor.Transform("identity", 2)
    f = mtensor.tsvdm(example(), t)
    s0 = f.singular_values(0)
    assert math.isclose(s0[0], (5 + math.sqrt(13)) / 2, abs_tol=1e-12)
    assert math.isclose(s0[1], (5 - math.sqrt(13)) / 2, abs_tol=1e-12)
    assert math.isclose(f.singular_values(1)[0], 3.0, abs_tol=1e-12)
    assert f.multirank == [2, 1]


def test_compress_and_container():
    a = mtensor.gen("circulant_slices", [8, 4, 8], seed=3)
    c = mtensor.compress(a, "tsvdm", transform="dft", k=1)
    assert c.method == "tsvdm" and c.parameter == "k=1"
    assert c.storage(conjsym=True) == (96, 0)
    r = c.report(a, conjsym=True)
    assert r["re"] < 1e-10
    assert math.isclose(r["cr"], 256 / 96)

    cases = [
        dict(method="tsvdm2", gamma=0.9),
        dict(method="matrix", k=2),
        dict(method="hosvd", triple=[2, 2, 2]),
        dict(method="sequential", k=2, q=2),
        dict(method="convex", k=2, alpha=0.3),
        dict(method="fourd", gamma=0.95),
    ]
    with tempfile.TemporaryDirectory() as d:
        for case in cases:
            c = mtensor.compress(a, transform="dct", **case)
            path = os.path.join(d, "x.ttcr")
            c.save(path)
            back = mtensor.Compressed.load(path)
            assert back.method == case["method"]
            assert back.storage() == c.storage()
            assert back.reconstruct().distance(c.reconstruct()) < 1e-9
            assert mtensor.Compressed.from_bytes(c.to_bytes()).dims == c.dims
        a.save(os.path.join(d, "a.ten"))
        assert mtensor.Tensor.load(os.path.join(d, "a.ten")).distance(a) == 0.0


def test_errors():
    a = mtensor.gen("random_dense", [3, 3, 3])
    for bad in [
        lambda: mtensor.compress(a, "tsvdm2"),
        lambda: mtensor.compress(a, "nope", k=1),
        lambda: mtensor.compress(a, "tsvdm2", gamma=0.0),
        lambda: mtensor.Compressed.from_bytes(b"XXXXjunk"),
        lambda: mtensor.Transform("dft", 4),
    ]:
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print("ok", name)
