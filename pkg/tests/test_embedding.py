import math

import numpy as np
import pytest

from nrpheno import (
    Lexicon,
    TrainConfig,
    TrainingPair,
    embed_phrase,
    load_lexicon,
    reference_embeddings,
    save_lexicon,
    sts_loss,
    train_lexicon,
)
from nrpheno.embedding import (
    DivergenceError,
    EmbeddingError,
    LexiconFormatError,
    ZeroNormError,
    build_training_pairs,
    initial_lexicon,
    loss_gradient,
    training_vocabulary,
)


def lex64(table):
    vecs = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
    dim = len(next(iter(vecs.values())))
    return Lexicon(dim, vecs)


def plain_cosine(u, v):
    """Independent cosine: pure-python fsum arithmetic."""
    dot = math.fsum(float(a) * float(b) for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(float(a) * float(a) for a in u))
    nv = math.sqrt(math.fsum(float(b) * float(b) for b in v))
    return dot / (nu * nv)


class TestEmbedPhrase:
    def test_single_token_identity(self):
        lex = lex64({"fever": [1.0, 2.0, 3.0]})
        assert np.array_equal(embed_phrase(lex, "fever"), [1.0, 2.0, 3.0])

    def test_two_token_mean(self):
        lex = lex64({"heart": [1.0, 0.0], "rate": [0.0, 1.0]})
        assert np.array_equal(embed_phrase(lex, "heart rate"), [0.5, 0.5])

    def test_permutation_invariance_bitwise(self):
        lex = lex64({
            "a": [0.31, -0.7, 0.11], "b": [1.4, 0.02, -0.5], "c": [-0.9, 0.33, 0.77],
        })
        v1 = embed_phrase(lex, "a b c")
        v2 = embed_phrase(lex, "c a b")
        v3 = embed_phrase(lex, "b c a")
        assert np.array_equal(v1, v2) and np.array_equal(v2, v3)

    def test_oov_token_deterministic_unit_vector(self):
        lex = lex64({"x": [1.0, 0.0, 0.0, 0.0]})
        v1 = embed_phrase(lex, "neverseen")
        v2 = embed_phrase(lex, "neverseen")
        assert np.array_equal(v1, v2)
        assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-12)

    def test_case_folded_lookup(self):
        lex = lex64({"fever": [1.0, 2.0]})
        assert np.array_equal(embed_phrase(lex, "FEVER"), [1.0, 2.0])


class TestStsLoss:
    def test_identical_vectors_positive_label(self):
        lex = lex64({"e": [1.0, 1.0], "s": [2.0, 2.0]})
        pairs = [TrainingPair(0, "e", "s", 1.0)]
        assert sts_loss(pairs, lex) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_vectors_negative_label(self):
        lex = lex64({"e": [1.0, 0.0], "s": [0.0, 1.0]})
        pairs = [TrainingPair(0, "e", "s", 0.0)]
        assert sts_loss(pairs, lex) == pytest.approx(0.0, abs=1e-12)

    def test_identical_vectors_negative_label(self):
        lex = lex64({"e": [1.0, 1.0], "s": [1.0, 1.0]})
        pairs = [TrainingPair(0, "e", "s", 0.0)]
        assert sts_loss(pairs, lex) == pytest.approx(1.0, abs=1e-12)

    def test_zero_norm_vector_named(self):
        lex = lex64({"e": [0.0, 0.0], "s": [1.0, 0.0]})
        with pytest.raises(ZeroNormError, match="e / s"):
            sts_loss([TrainingPair(0, "e", "s", 1.0)], lex)

    def test_nonnegative_and_scale_invariant(self):
        rng = np.random.default_rng(3)
        table = {f"t{i}": rng.standard_normal(5) for i in range(6)}
        pairs = [
            TrainingPair(0, "t0 t1", "t2", 1.0),
            TrainingPair(1, "t3", "t4 t5", 0.0),
            TrainingPair(0, "t0", "t5", 0.0),
        ]
        base = sts_loss(lex64(table), pairs=pairs) if False else sts_loss(pairs, lex64(table))
        assert base >= 0.0
        scaled = {k: 37.5 * v for k, v in table.items()}
        assert sts_loss(pairs, lex64(scaled)) == pytest.approx(base, rel=1e-12)


def finite_difference_gradient(pairs, lexicon, h=1e-5):
    """Central-difference oracle over every table coordinate."""
    grads = {}
    for key in lexicon.keys():
        base = np.asarray(lexicon.vector(key), dtype=np.float64)
        g = np.zeros_like(base)
        for i in range(len(base)):
            for sign in (+1, -1):
                bumped = {k: np.asarray(lexicon.vector(k), dtype=np.float64)
                          for k in lexicon.keys()}
                bumped[key] = bumped[key].copy()
                bumped[key][i] += sign * h
                val = sts_loss(pairs, Lexicon(lexicon.dim, bumped))
                if sign > 0:
                    f_plus = val
                else:
                    f_minus = val
            g[i] = (f_plus - f_minus) / (2 * h)
        grads[key] = g
    return grads


def max_relative_error(analytic, numeric):
    worst = 0.0
    for key in analytic:
        a, f = analytic[key], numeric[key]
        for ai, fi in zip(a, f):
            denom = max(abs(ai), abs(fi), 1e-6)
            worst = max(worst, abs(ai - fi) / denom)
    return worst


class TestGradient:
    def test_two_token_dim3_table(self):
        lex = lex64({"e": [0.4, -1.2, 0.7], "s": [0.9, 0.3, -0.5]})
        pairs = [TrainingPair(0, "e", "s", 1.0)]
        analytic = loss_gradient(pairs, lex)
        numeric = finite_difference_gradient(pairs, lex)
        assert max_relative_error(analytic, numeric) <= 1e-4

    def test_ten_random_points(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            dim = int(rng.integers(2, 9))
            n_tokens = int(rng.integers(2, 5))
            table = {f"t{i}": rng.standard_normal(dim) for i in range(n_tokens)}
            lex = lex64(table)
            pairs = [
                TrainingPair(0, "t0", f"t{n_tokens - 1}", float(rng.integers(0, 2))),
                TrainingPair(1, "t1 t0", "t1", float(rng.integers(0, 2))),
            ]
            analytic = loss_gradient(pairs, lex)
            numeric = finite_difference_gradient(pairs, lex)
            assert max_relative_error(analytic, numeric) <= 1e-4, f"trial {trial}"

    def test_shared_token_across_both_sides(self):
        # "rate" appears in the entity phrase and the synonym phrase
        lex = lex64({"heart": [1.0, 0.2, -0.3], "rate": [0.1, 0.8, 0.4],
                     "cardiac": [-0.5, 0.6, 0.9]})
        pairs = [TrainingPair(0, "heart rate", "cardiac rate", 1.0)]
        analytic = loss_gradient(pairs, lex)
        numeric = finite_difference_gradient(pairs, lex)
        assert max_relative_error(analytic, numeric) <= 1e-4


class TestTraining:
    def test_toy_training_loss_and_accuracy(self, toy_kb):
        cfg = TrainConfig(dim=16, epochs=200, learning_rate=0.5, batch_size=16, seed=7)
        pairs = build_training_pairs(toy_kb, cfg)
        init = initial_lexicon(training_vocabulary(toy_kb), cfg)
        lex = train_lexicon(toy_kb, cfg)
        initial, final = sts_loss(pairs, init), sts_loss(pairs, lex)
        assert final < initial
        assert final < 0.1 * initial
        # exhaustive nearest-entity oracle with independent cosine arithmetic
        refs = {e.entity_id: embed_phrase(lex, e.name) for e in toy_kb.entities}
        for e in toy_kb.entities:
            for syn in toy_kb.synonyms_for(e.entity_id):
                v = embed_phrase(lex, syn)
                ranked = sorted(refs, key=lambda eid: -plain_cosine(v, refs[eid]))
                assert ranked[0] == e.entity_id, syn

    def test_single_positive_pair_converges(self):
        table = {"alpha": np.array([1.0, 0.0, 0.0, 0.0]),
                 "beta": np.array([0.0, 1.0, 0.0, 0.0])}
        pairs = [TrainingPair(0, "alpha", "beta", 1.0)]
        vecs = {k: v.copy() for k, v in table.items()}
        from nrpheno.embedding import _loss_and_grad

        for _ in range(500):
            _, grads = _loss_and_grad(pairs, vecs, 4)
            for k, g in grads.items():
                vecs[k] -= 0.5 * g
        final, _ = _loss_and_grad(pairs, vecs, 4)
        assert final < 1e-4

    def test_bit_reproducible(self, toy_kb):
        cfg = TrainConfig(dim=8, epochs=20, learning_rate=0.5, batch_size=8, seed=123)
        a = train_lexicon(toy_kb, cfg)
        b = train_lexicon(toy_kb, cfg)
        assert a == b

    def test_needs_two_entities(self, toy_kb):
        import dataclasses

        solo = dataclasses.replace(
            toy_kb,
            entities=toy_kb.entities[:1],
            ranges=toy_kb.ranges_for(0),
            triples=(toy_kb.triple_for(0),),
            granular_bands=(),
            synonym_sets={0: toy_kb.synonyms_for(0)},
        )
        with pytest.raises(EmbeddingError, match="at least 2 entities"):
            train_lexicon(solo, TrainConfig(epochs=1))

    @pytest.mark.parametrize("rate", [1e100, 1e300])
    def test_divergence_advises_smaller_rate(self, toy_kb, rate):
        cfg = TrainConfig(dim=4, epochs=5, learning_rate=rate, batch_size=4, seed=1)
        with pytest.raises(DivergenceError, match="smaller learning rate"):
            train_lexicon(toy_kb, cfg)

    def test_negative_sampling_path(self, toy_kb):
        import nrpheno.embedding as emb

        cfg = TrainConfig(dim=4, epochs=1, seed=5, negative_ratio=2)
        old = emb.FULL_GRID_LIMIT
        emb.FULL_GRID_LIMIT = 1  # force the sampled branch
        try:
            pairs = build_training_pairs(toy_kb, cfg)
        finally:
            emb.FULL_GRID_LIMIT = old
        positives = [p for p in pairs if p.label == 1.0]
        negatives = [p for p in pairs if p.label == 0.0]
        assert len(negatives) == 2 * len(positives)
        for p in negatives:
            assert p.phrase not in toy_kb.synonyms_for(p.entity_id)


class TestReferenceEmbeddings:
    def test_shapes_and_determinism(self, sample_kb, shipped_lexicon):
        refs1 = reference_embeddings(shipped_lexicon, sample_kb)
        refs2 = reference_embeddings(shipped_lexicon, sample_kb)
        assert set(refs1) == set(sample_kb.entity_ids())
        dims = {v.shape for v in refs1.values()}
        assert dims == {(shipped_lexicon.dim,)}
        for eid in refs1:
            assert np.array_equal(refs1[eid], refs2[eid])

    def test_trained_synonym_closer_than_foreign_token(self, toy_kb):
        lex = train_lexicon(toy_kb, TrainConfig(dim=16, epochs=200, seed=7))
        refs = reference_embeddings(lex, toy_kb)
        temp = refs[0]
        close = plain_cosine(embed_phrase(lex, "pyrexia"), temp)
        far = plain_cosine(embed_phrase(lex, "pulse"), temp)
        assert close > far


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path, shipped_lexicon):
        out = tmp_path / "lex.nremb"
        save_lexicon(shipped_lexicon, out)
        assert load_lexicon(out) == shipped_lexicon

    def test_round_trip_fresh_training(self, tmp_path, toy_kb):
        lex = train_lexicon(toy_kb, TrainConfig(dim=5, epochs=3, seed=2))
        out = tmp_path / "lex.nremb"
        save_lexicon(lex, out)
        loaded = load_lexicon(out)
        assert loaded == lex
        # vectors compare equal as exact bits, not approximately
        for key in lex.keys():
            assert loaded.vector(key).tobytes() == lex.vector(key).tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.nremb"
        path.write_bytes(b"NOPE!!" + b"\x00" * 32)
        with pytest.raises(LexiconFormatError, match="not a lexicon file"):
            load_lexicon(path)

    def test_truncation_names_entry(self, tmp_path, shipped_lexicon):
        out = tmp_path / "lex.nremb"
        save_lexicon(shipped_lexicon, out)
        data = out.read_bytes()
        clipped = tmp_path / "clipped.nremb"
        clipped.write_bytes(data[:-4])
        with pytest.raises(LexiconFormatError, match=r"truncated at entry \d+"):
            load_lexicon(clipped)

    def test_dim_mismatch(self, tmp_path, shipped_lexicon):
        out = tmp_path / "lex.nremb"
        save_lexicon(shipped_lexicon, out)
        with pytest.raises(LexiconFormatError, match="dim mismatch"):
            load_lexicon(out, expected_dim=shipped_lexicon.dim + 1)

    def test_trailing_data_rejected(self, tmp_path, shipped_lexicon):
        out = tmp_path / "lex.nremb"
        save_lexicon(shipped_lexicon, out)
        padded = tmp_path / "padded.nremb"
        padded.write_bytes(out.read_bytes() + b"\x00\x00")
        with pytest.raises(LexiconFormatError, match="trailing data"):
            load_lexicon(padded)

    def test_empty_key_rejected(self, tmp_path):
        import struct

        data = b"NREMB1" + struct.pack("<I", 2) + struct.pack("<I", 1)
        data += struct.pack("<H", 0) + b"\x00" * 8
        path = tmp_path / "emptykey.nremb"
        path.write_bytes(data)
        with pytest.raises(LexiconFormatError, match="empty key"):
            load_lexicon(path)

    def test_zero_dim_rejected(self, tmp_path):
        import struct

        path = tmp_path / "zerodim.nremb"
        path.write_bytes(b"NREMB1" + struct.pack("<I", 0) + struct.pack("<I", 0))
        with pytest.raises(LexiconFormatError, match="dim must be positive"):
            load_lexicon(path)
