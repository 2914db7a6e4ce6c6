"""Smoke test for the extension module.

    maturin build --release -m crates/python/Cargo.toml && pip install target/wheels/pydeltasketch-*.whl
    python3 python/smoke_test.py
"""
import random

import pydeltasketch as ds


def main():
    assert ds.exact_delta(b"banana") == (3, 1, 1)
    assert ds.exact_dk(b"abab") == [2, 2, 2, 1]

    params = ds.SketchParams(0.1, 10_000)
    assert abs(params.alpha - 1.025) < 1e-12
    banana = ds.DeltaSketch.build(params, b"banana")
    assert 2.7 <= banana.estimate() <= 3.3, banana.estimate()
    assert ds.DeltaSketch.deserialize(banana.serialize()) == banana

    rng = random.Random(7)
    data = bytes(rng.choice(b"acgt") for _ in range(10_000))
    est = ds.StreamEstimator(params, window=len(data))
    for i in range(0, len(data), 1000):
        est.push(data[i : i + 1000])
    streamed = est.finalize()
    assert streamed == ds.DeltaSketch.build(params, data)

    tm = bytes(b"ab"[bin(i).count("1") % 2] for i in range(4096))
    est = ds.StreamEstimator(ds.SketchParams(0.25, len(tm)), window=64, rlbwt=True)
    est.push(tm)
    num, den, _ = ds.exact_delta(tm)
    assert abs(est.estimate() - num / den) <= 0.25 * num / den

    ncd_params = ds.SketchParams.for_ncd(0.5, 10_000)
    other = bytes(rng.choice(b"acgt") for _ in range(10_000))
    a = ds.DeltaSketch.build(ncd_params, data)
    b = ds.DeltaSketch.build(ncd_params, other)
    raw, clamped = ds.ncd_pair(a, b)
    assert abs(raw - ds.exact_ncd(data, other)) <= 0.5
    assert 0.0 <= clamped <= 1.0
    m = ds.ncd_matrix([a, b, a], ["a", "b", "a2"])
    assert m[0][0] == 0.0 and m[0][1] == m[1][0]
    assert ds.phylip([a, b], ["a", "b"]).startswith("2\n")

    try:
        a.merge(ds.DeltaSketch.build(ds.SketchParams.for_ncd(0.5, 10_000, seed=1), b"banana"))
    except ValueError as e:
        assert "differs" in str(e)
    else:
        raise AssertionError("mismatched merge accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
