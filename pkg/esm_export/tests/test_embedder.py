import numpy as np
import pytest

from esm_export.embedder import (STUB_D_E, StubEmbedder, make_embedder,
                                 strip_boundary_rows)
from esm_export.errors import InputError


def test_stub_shapes_and_dtype():
    emb = StubEmbedder(d_e=16, seed=0)
    mats = emb.embed_batch(["ACDEF", "KL"])
    assert mats[0].shape == (5, 16)
    assert mats[1].shape == (2, 16)
    assert all(m.dtype == np.dtype("<f4") for m in mats)


def test_stub_deterministic_and_batch_invariant():
    emb = StubEmbedder(d_e=8, seed=3)
    together = emb.embed_batch(["ACDEF", "KLMNP"])
    alone = [emb.embed_batch(["ACDEF"])[0], emb.embed_batch(["KLMNP"])[0]]
    for a, b in zip(together, alone):
        assert np.array_equal(a, b)
    again = StubEmbedder(d_e=8, seed=3).embed_batch(["ACDEF"])
    assert np.array_equal(again[0], together[0])


def test_stub_rows_depend_on_position_and_residue():
    emb = StubEmbedder(d_e=8, seed=0)
    (mat,) = emb.embed_batch(["AAC"])
    assert not np.array_equal(mat[0], mat[1])  # same residue, new position
    assert not np.array_equal(mat[1], mat[2])
    # same (position, residue) key in a different sequence matches
    (other,) = emb.embed_batch(["ACD"])
    assert np.array_equal(mat[0], other[0])


def test_stub_seed_changes_output():
    a = StubEmbedder(d_e=8, seed=0).embed_batch(["ACDEF"])[0]
    b = StubEmbedder(d_e=8, seed=1).embed_batch(["ACDEF"])[0]
    assert not np.array_equal(a, b)


def test_strip_boundary_rows():
    hidden = np.arange(28, dtype=float).reshape(7, 4)  # cls + 4 + eos + pad
    out = strip_boundary_rows(hidden, 4)
    assert np.array_equal(out, hidden[1:5])


def test_strip_rejects_too_few_rows():
    with pytest.raises(InputError, match="token rows"):
        strip_boundary_rows(np.zeros((5, 4)), 4)


def test_factory_stub_grammar():
    assert isinstance(make_embedder("stub"), StubEmbedder)
    emb = make_embedder("stub:32:7")
    assert emb.d_e == 32 and emb.seed == 7
    assert make_embedder("stub").d_e == STUB_D_E
    with pytest.raises(InputError, match="bad stub spec"):
        make_embedder("stub:a")
    with pytest.raises(InputError, match="bad stub spec"):
        make_embedder("stub:1:2:3")


def test_stub_rejects_bad_width():
    with pytest.raises(InputError):
        StubEmbedder(d_e=0)
