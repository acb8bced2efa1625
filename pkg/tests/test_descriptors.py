"""Descriptor tests: brute-force formula oracles, invariants, hand values.

Oracles re-derive every formula with plain loops and independently
transcribed constant tables, so implementation and test share no code.
"""

import math
import time

import numpy as np
import pytest

from pepfuse import tables
from pepfuse.descriptors import (DescriptorConfig, aac, binary, cksaagp,
                                 dde, distance_pair, dpc, encode_all,
                                 encode_dataset, encode_dim, gtpc, paac,
                                 qsorder, zscale)
from pepfuse.errors import SequenceError
from pepfuse.sequences import ALPHABET, Peptide

# independent transcriptions for the oracles
CODONS = {"A": 4, "C": 2, "D": 2, "E": 2, "F": 2, "G": 4, "H": 2, "I": 3,
          "K": 2, "L": 6, "M": 1, "N": 2, "P": 4, "Q": 2, "R": 6, "S": 6,
          "T": 4, "V": 4, "W": 1, "Y": 2}
GROUP_OF = {}
for g, members in enumerate(["GAVLMI", "FYW", "KRH", "DE", "STCPNQ"]):
    for ch in members:
        GROUP_OF[ch] = g


def rnd_peptide(rng, lo=5, hi=25):
    n = int(rng.integers(lo, hi + 1))
    return Peptide("r", "".join(rng.choice(list(ALPHABET), size=n)))


# ------------------------------------------------------------- oracles

def oracle_aac(seq):
    return np.array([seq.count(r) / len(seq) for r in ALPHABET])


def oracle_dpc(seq):
    out = np.zeros(400)
    for i in range(len(seq) - 1):
        a, b = ALPHABET.index(seq[i]), ALPHABET.index(seq[i + 1])
        out[a * 20 + b] += 1
    return out / (len(seq) - 1)


def oracle_dde(seq):
    dc = oracle_dpc(seq)
    out = np.zeros(400)
    for i, a in enumerate(ALPHABET):
        for j, b in enumerate(ALPHABET):
            tm = (CODONS[a] / 61) * (CODONS[b] / 61)
            tv = tm * (1 - tm) / (len(seq) - 1)
            out[i * 20 + j] = (dc[i * 20 + j] - tm) / math.sqrt(tv)
    return out


def oracle_cksaagp(seq, k):
    blocks = []
    for g in range(k + 1):
        block = np.zeros(25)
        denom = len(seq) - g - 1
        if denom > 0:
            for i in range(denom):
                g1 = GROUP_OF[seq[i]]
                g2 = GROUP_OF[seq[i + g + 1]]
                block[g1 * 5 + g2] += 1
            block /= denom
        blocks.append(block)
    return np.concatenate(blocks)


def oracle_gtpc(seq):
    out = np.zeros(125)
    for i in range(len(seq) - 2):
        a, b, c = (GROUP_OF[seq[i]], GROUP_OF[seq[i + 1]],
                   GROUP_OF[seq[i + 2]])
        out[a * 25 + b * 5 + c] += 1
    return out / (len(seq) - 2)


def oracle_paac(seq, lam, w):
    raw = tables.paac_properties()
    props = (raw - raw.mean(axis=1, keepdims=True)) / raw.std(axis=1,
                                                              keepdims=True)

    def theta_pair(a, b):
        ia, ib = ALPHABET.index(a), ALPHABET.index(b)
        return sum((props[k, ia] - props[k, ib]) ** 2 for k in range(3)) / 3

    thetas = []
    for j in range(1, lam + 1):
        total = sum(theta_pair(seq[i], seq[i + j])
                    for i in range(len(seq) - j))
        thetas.append(total / (len(seq) - j))
    freqs = [seq.count(r) / len(seq) for r in ALPHABET]
    denom = sum(freqs) + w * sum(thetas)
    return np.array([f / denom for f in freqs]
                    + [w * t / denom for t in thetas])


def oracle_qsorder(seq, nlag, w):
    d = tables.sequence_distance_matrix()
    taus = []
    for lag in range(1, nlag + 1):
        total = 0.0
        for i in range(len(seq) - lag):
            total += d[ALPHABET.index(seq[i]),
                       ALPHABET.index(seq[i + lag])] ** 2
        taus.append(total)
    freqs = [seq.count(r) / len(seq) for r in ALPHABET]
    denom = sum(freqs) + w * sum(taus)
    return np.array([f / denom for f in freqs]
                    + [w * t / denom for t in taus])


def oracle_distance_pair(seq, max_d):
    parts = [oracle_aac(seq)]
    for d in range(1, max_d + 1):
        block = np.zeros(400)
        for i in range(max(len(seq) - d, 0)):
            a, b = ALPHABET.index(seq[i]), ALPHABET.index(seq[i + d])
            block[a * 20 + b] += 1
        parts.append(block / max(len(seq) - d, 1))
    return np.concatenate(parts)


# ---------------------------------------------------------------- tests

def test_aac_hand_values():
    assert np.allclose(aac(Peptide("p", "AAAA")).values,
                       oracle_aac("AAAA"))
    v = aac(Peptide("p", "ACDE")).values
    assert v[ALPHABET.index("A")] == 0.25
    assert v.sum() == pytest.approx(1.0)
    # the attention-example peptide, counted by hand
    v = aac(Peptide("p", "ILPWKWPWWPWR")).values
    assert v[ALPHABET.index("W")] == pytest.approx(5 / 12)
    assert v[ALPHABET.index("P")] == pytest.approx(3 / 12)
    for r in "ILKR":
        assert v[ALPHABET.index(r)] == pytest.approx(1 / 12)


def test_dpc_hand_values():
    v = dpc(Peptide("p", "ACA")).values
    assert v[ALPHABET.index("A") * 20 + ALPHABET.index("C")] == 0.5
    assert v[ALPHABET.index("C") * 20 + ALPHABET.index("A")] == 0.5
    assert dpc(Peptide("p", "AAAA")).values[0] == 1.0
    assert not np.allclose(dpc(Peptide("p", "AC")).values,
                           dpc(Peptide("p", "CA")).values)


def test_dde_hand_value_mw():
    v = dde(Peptide("p", "MW")).values
    tm = (1 / 61) ** 2
    expected = math.sqrt((1 - tm) / tm)
    i = ALPHABET.index("M") * 20 + ALPHABET.index("W")
    assert v[i] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(61.0, abs=0.5)
    assert v[0] < 0  # absent AA dipeptide deviates negatively


def test_dde_mean_zero_under_codon_usage():
    # residues drawn with codon-usage probabilities make E[Dc] = Tm, so
    # per-component means shrink as 1/sqrt(n) (components are scaled to
    # roughly unit variance); uniform-residue draws are biased and stay large
    rng = np.random.default_rng(5)
    n, length = 200, 90
    bound = 6.0 / math.sqrt(n)

    def mean_dde(probs):
        means = np.zeros(400)
        for _ in range(n):
            seq = "".join(rng.choice(list(ALPHABET), size=length, p=probs))
            means += dde(Peptide("p", seq)).values
        return means / n

    codon = mean_dde(np.array([CODONS[r] / 61 for r in ALPHABET]))
    assert np.abs(codon).max() < bound
    uniform = mean_dde(np.full(20, 1 / 20))
    assert np.abs(uniform).max() > bound


def test_cksaagp_group_examples():
    v = cksaagp(Peptide("p", "GG"), 0).values
    assert v[0] == 1.0 and v.sum() == 1.0
    v = cksaagp(Peptide("p", "GF"), 0).values
    assert v[1] == 1.0  # aliphatic -> aromatic
    v = cksaagp(Peptide("p", "GF"), 3).values
    assert np.all(v[25:] == 0.0)


def test_gtpc_examples():
    assert gtpc(Peptide("p", "GGG")).values[0] == 1.0
    v = gtpc(Peptide("p", "GFK")).values
    assert v[0 * 25 + 1 * 5 + 2] == 1.0
    with pytest.raises(SequenceError):
        gtpc(Peptide("p", "GG"))


def test_paac_identity_and_limit():
    v = paac(Peptide("p", "AAAAA"), lam=2, weight=0.05).values
    assert v[ALPHABET.index("A")] == pytest.approx(1.0)
    assert np.allclose(v[20:], 0.0)
    # w -> 0 limit reduces to composition
    v = paac(Peptide("p", "ACDE"), lam=1, weight=1e-12).values
    assert np.allclose(v[:20], oracle_aac("ACDE"), atol=1e-9)


def test_qsorder_identity_and_limit():
    v = qsorder(Peptide("p", "AAAAA"), nlag=2, weight=0.1).values
    assert np.allclose(v[:20], oracle_aac("AAAAA"))
    assert np.allclose(v[20:], 0.0)
    v = qsorder(Peptide("p", "ACDE"), nlag=1, weight=1e-12).values
    assert np.allclose(v[:20], oracle_aac("ACDE"), atol=1e-9)


def test_paac_qsorder_brute_force_oracles():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = rnd_peptide(rng)
        lam = int(rng.integers(1, 4))
        nlag = int(rng.integers(1, 4))
        assert np.allclose(paac(p, lam, 0.05).values,
                           oracle_paac(p.residues, lam, 0.05), atol=1e-9)
        assert np.allclose(qsorder(p, nlag, 0.1).values,
                           oracle_qsorder(p.residues, nlag, 0.1), atol=1e-9)


def test_all_encoders_match_oracles():
    rng = np.random.default_rng(13)
    for _ in range(25):
        p = rnd_peptide(rng)
        s = p.residues
        assert np.allclose(aac(p).values, oracle_aac(s), atol=1e-12)
        assert np.allclose(dpc(p).values, oracle_dpc(s), atol=1e-12)
        assert np.allclose(dde(p).values, oracle_dde(s), atol=1e-9)
        assert np.allclose(cksaagp(p, 3).values, oracle_cksaagp(s, 3),
                           atol=1e-12)
        assert np.allclose(gtpc(p).values, oracle_gtpc(s), atol=1e-12)
        assert np.allclose(distance_pair(p, 2).values,
                           oracle_distance_pair(s, 2), atol=1e-12)


def test_zscale_mean_of_rows():
    z = tables.zscales()
    assert np.allclose(zscale(Peptide("p", "A")).values, z[0])
    assert np.allclose(zscale(Peptide("p", "AA")).values, z[0])
    assert np.allclose(zscale(Peptide("p", "AC")).values,
                       (z[0] + z[1]) / 2)


def test_binary_one_hot():
    v = binary(Peptide("p", "A"), pad_len=3).values
    assert v[0] == 1.0 and v[1:].sum() == 0.0 and len(v) == 60
    p = Peptide("p", "ACDE")
    assert binary(p, pad_len=4).values.sum() == 4.0
    with pytest.raises(SequenceError):
        binary(Peptide("p", "ACDEF"), pad_len=4)


def test_sum_to_one_invariants():
    rng = np.random.default_rng(21)
    for _ in range(20):
        p = rnd_peptide(rng)
        for fv in (aac(p), dpc(p), gtpc(p)):
            assert abs(fv.values.sum() - 1.0) < 1e-9
        assert abs(paac(p, 2, 0.05).values.sum() - 1.0) < 1e-9
        assert abs(qsorder(p, 2, 0.1).values.sum() - 1.0) < 1e-9


def test_preconditions():
    one = Peptide("p", "A")
    for fn in (dpc, dde, lambda q: cksaagp(q, 1),
               lambda q: distance_pair(q, 1)):
        with pytest.raises(SequenceError):
            fn(one)
    with pytest.raises(SequenceError):
        paac(Peptide("p", "AC"), lam=2, weight=0.05)
    with pytest.raises(SequenceError):
        qsorder(Peptide("p", "AC"), nlag=2, weight=0.1)


def test_encode_all_default_dim_and_order():
    p = Peptide("p", "ILPWKWPWWPWR")
    fv = encode_all(p)
    assert len(fv.values) == 3914
    assert encode_dim(DescriptorConfig()) == 3914
    prefixes = []
    for name in fv.schema:
        head = name.split(":")[0]
        if not prefixes or prefixes[-1] != head:
            prefixes.append(head)
    assert prefixes == ["aac", "dpc", "cksaagp", "dpair", "paac",
                        "qso", "zscale", "gtpc", "binary", "dde"]


def test_encode_all_dims_across_configs():
    p = Peptide("p", "ACDEFGHIKLMNPQRS")
    for k in (0, 2):
        for d in (1, 3):
            cfg = DescriptorConfig(cksaagp_max_gap=k,
                                   distancepair_max_distance=d,
                                   paac_lambda=1, qso_nlag=1,
                                   binary_pad_len=20)
            assert len(encode_all(p, cfg).values) == encode_dim(cfg)


def test_encode_all_order_sensitivity():
    a = encode_all(Peptide("p", "ACDE"), DescriptorConfig(
        paac_lambda=1, qso_nlag=1, binary_pad_len=8))
    b = encode_all(Peptide("p", "DCAE"), DescriptorConfig(
        paac_lambda=1, qso_nlag=1, binary_pad_len=8))

    def block(fv, head):
        idx = [i for i, n in enumerate(fv.schema)
               if n.split(":")[0] == head]
        return fv.values[idx]

    assert np.allclose(block(a, "aac"), block(b, "aac"))
    assert np.allclose(block(a, "zscale"), block(b, "zscale"))
    assert not np.allclose(block(a, "binary"), block(b, "binary"))


def test_encode_all_deterministic_and_error_naming():
    p = Peptide("p", "ACDEFGH")
    cfg = DescriptorConfig(paac_lambda=1, qso_nlag=1, binary_pad_len=8)
    assert np.array_equal(encode_all(p, cfg).values,
                          encode_all(p, cfg).values)
    with pytest.raises(SequenceError, match="paac"):
        encode_all(Peptide("p", "AC"), DescriptorConfig(
            paac_lambda=5, qso_nlag=1, binary_pad_len=8))


def test_encode_dataset_threads_match_serial():
    rng = np.random.default_rng(3)
    peps = [rnd_peptide(rng, 8, 16) for _ in range(70)]
    peps = [Peptide(f"p{i}", q.residues) for i, q in enumerate(peps)]
    cfg = DescriptorConfig(binary_pad_len=20)
    serial, schema = encode_dataset(peps, cfg, threads=1)
    threaded, schema2 = encode_dataset(peps, cfg, threads=4)
    assert schema == schema2
    assert np.array_equal(serial, threaded)


def test_descriptor_suite_speed():
    rng = np.random.default_rng(1)
    peps = [Peptide(f"p{i}", "".join(rng.choice(list(ALPHABET), 30)))
            for i in range(50)]
    t0 = time.monotonic()
    for p in peps:
        encode_all(p)
    assert time.monotonic() - t0 < 10.0
