"""The stacked-table fast path must agree with the per-family reference."""

import numpy as np

from setjoin.datasets import gen_uniform
from setjoin.prep import _UNIVERSE_CELL_CAP, families, preprocess


def _check_against_families(prep):
    sig_fam, sk_fam = families(prep)
    ds = prep.data
    for i in range(ds.n):
        rec = ds.record(i)
        assert np.array_equal(prep.sig[i], sig_fam.embed(rec))
        assert np.array_equal(prep.sketches[i], sk_fam.sketch(rec))


def test_universe_path_matches_reference_families():
    ds = gen_uniform(60, 10, 200, seed=0)
    prep = preprocess(ds, sig_len=32, sketch_words=2, seed=9)
    assert (32 + 128) * ds.d <= _UNIVERSE_CELL_CAP
    _check_against_families(prep)


def test_per_record_path_matches_reference_families():
    ds = gen_uniform(80, 600, 200000, seed=1)
    prep = preprocess(ds, sig_len=128, sketch_words=8, seed=9)
    assert (128 + 512) * ds.d > _UNIVERSE_CELL_CAP
    _check_against_families(prep)


def test_prepared_shapes_and_metadata():
    ds = gen_uniform(25, 8, 50, seed=2)
    prep = preprocess(ds, sig_len=64, sketch_words=4, seed=3)
    assert prep.sig.shape == (25, 64) and prep.sig.dtype == np.uint32
    assert prep.sketches.shape == (25, 4) and prep.sketches.dtype == np.uint64
    assert prep.sketch_bits == 256
    assert prep.elapsed_s >= 0.0
    assert prep.data is ds
