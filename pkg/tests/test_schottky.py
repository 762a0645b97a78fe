import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoscatter.moebius import MoebiusMap, classify, complex_length
from isoscatter.schottky import (
    CirclesOverlap,
    InvalidPairing,
    NoBracket,
    PrimitiveClass,
    ReducedWord,
    SchottkyData,
    alphabet,
    canonical_class,
    cyclic_reduce,
    delta_drift,
    delta_estimate,
    enumerate_primitive_classes,
    enumerate_reduced_words,
    example_rank1,
    example_rank2,
    free_reduce,
    fundamental_domain_samples,
    limit_set_sample,
    primitive_blocks,
    primitive_class_tuples,
    validate,
    word_to_map,
)
from oracles import primitive_class_count_bruteforce


def test_validate_example(rank2):
    rep = validate(rank2)
    assert rep.ok
    assert min(rep.margins.values()) == pytest.approx(3 * math.sqrt(2) - 2)
    assert max(rep.residuals) < 1e-9 and all(rep.orientation_ok)


def test_validate_overlap():
    with pytest.raises(CirclesOverlap) as exc:
        validate(example_rank2(radius=2.5))
    assert exc.value.depth > 0


def test_validate_identity_generator(rank2):
    bad = SchottkyData(2, rank2.circles, [MoebiusMap.identity(), rank2.generators[1]])
    with pytest.raises(InvalidPairing) as exc:
        validate(bad)
    assert exc.value.index == 1
    rep = validate(bad, strict=False)
    assert not rep.ok and len(rep.failures) == 1


def test_validate_orientation_preserving_pairing(rank2):
    # z -> z + 6 maps the circle at -3 onto the one at 3, interior to interior
    bad = SchottkyData(2, rank2.circles, [MoebiusMap(1, 6, 0, 1), rank2.generators[1]])
    with pytest.raises(InvalidPairing):
        validate(bad)


def test_json_roundtrip(rank2, tmp_path):
    obj = rank2.to_json()
    assert set(obj) == {"g", "circles", "generators"}
    assert set(obj["circles"][0]) == {"cx", "cy", "r"}
    assert set(obj["generators"][0]) == set("abcd")
    path = tmp_path / "s.json"
    path.write_text(json.dumps(obj))
    back = SchottkyData.load(path)
    assert all(m1.is_close(m2, 1e-15) for m1, m2 in zip(back.generators, rank2.generators))


@pytest.mark.parametrize("n,count", [(1, 4), (2, 12), (5, 324)])
def test_reduced_word_counts(n, count):
    words = [w.letters for w in enumerate_reduced_words(2, n)]
    assert len(words) == count == 4 * 3 ** (n - 1)
    assert len(set(words)) == count


def test_reduced_words_match_bruteforce():
    brute = [w for w in itertools.product(alphabet(2), repeat=4) if free_reduce(w) == w]
    assert sorted(brute) == sorted(w.letters for w in enumerate_reduced_words(2, 4))


def test_reduced_word_invariant():
    with pytest.raises(ValueError):
        ReducedWord((1, -1))
    assert not ReducedWord((1, 2, -1)).cyclically_reduced
    assert ReducedWord((1, 2)).cyclically_reduced
    assert str(ReducedWord((1, -2))) == "aB"


def test_primitive_counts_against_bruteforce(frozen):
    counts = [sum(1 for c in enumerate_primitive_classes(2, n) if c.length == n) for n in range(1, 9)]
    assert counts[:6] == frozen["primitive_counts_g2"]
    assert counts == frozen["primitive_counts_g2_formula"]
    assert primitive_class_count_bruteforce(2, 2) == counts[1]


def test_primitive_classes_canonical_and_unique():
    seen = set()
    for c in enumerate_primitive_classes(2, 6):
        w = c.letters
        root, power = canonical_class(w)
        assert root == w and power == 1
        assert w not in seen
        seen.add(w)
    assert isinstance(c, PrimitiveClass)


@given(st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=8), st.integers(1, 3))
def test_canonical_class_handles_powers_and_rotations(w, k):
    cls = canonical_class(w)
    if cls is None:
        assert cyclic_reduce(w) == ()
        return
    root, power = cls
    cls_k = canonical_class(tuple(w) * k)
    assert cls_k == (root, power * k)
    r = cyclic_reduce(w)
    rotated = r[1:] + r[:1]
    assert canonical_class(rotated) == cls


@pytest.mark.parametrize("threads", [1, 3])
def test_primitive_blocks_match_serial(threads):
    serial = list(primitive_class_tuples(2, 6))
    assert primitive_blocks(2, 6, threads) == serial


def test_word_to_map(rank2):
    assert word_to_map(rank2, ()).is_close(MoebiusMap.identity())
    A = rank2.generators[0]
    assert word_to_map(rank2, ReducedWord((1,))).is_close(A)
    cl = complex_length(A)
    assert cl.ell == pytest.approx(2 * math.log(3 + math.sqrt(10)), abs=1e-12)
    # B = [[3i, -8], [1, 3i]] has normalized trace 6
    cl_b = complex_length(rank2.generators[1])
    assert cl_b.ell == pytest.approx(2 * math.log(3 + 2 * math.sqrt(2)), abs=1e-12)


def test_words_are_loxodromic_and_distinct(rank2):
    words = [()] + [w.letters for n in range(1, 7) for w in enumerate_reduced_words(2, n)]
    mats = np.array([word_to_map(rank2, w).as_array().ravel() for w in words])
    for w, m in zip(words[1:], mats[1:]):
        assert classify(MoebiusMap(*m)).kind == "loxodromic"
    # freeness: pairwise gap up to sign, on a sorted sweep of |entries|
    key = np.abs(mats)
    order = np.lexsort(key.T[::-1])
    key = key[order]
    close = np.all(np.abs(np.diff(key, axis=0)) < 1e-6, axis=1)
    for i in np.flatnonzero(close):
        a, b = mats[order[i]], mats[order[i + 1]]
        assert min(np.abs(a - b).max(), np.abs(a + b).max()) > 1e-6


def test_ping_pong(rank2):
    pts = fundamental_domain_samples(rank2, 64)
    for x in alphabet(2):
        m, target = rank2.letter_map(x), rank2.target_circle(x)
        assert all(target.contains(m(z)) for z in pts)


def test_limit_set_sample(rank2):
    s = limit_set_sample(rank2, 6)
    c1, r1 = s.level(1)
    assert len(r1) == 4 and np.allclose(r1, 1)
    areas = [s.area(d) for d in range(1, 7)]
    assert all(a > b for a, b in zip(areas, areas[1:]))
    # nesting: every disk of word w y lies in the disk of w
    index = {w: i for i, w in enumerate(s.words)}
    for i, w in enumerate(s.words):
        if len(w) > 1:
            j = index[w[:-1]]
            assert abs(s.centers[i] - s.centers[j]) + s.radii[i] <= s.radii[j] + 1e-12


def test_delta_estimate(rank2):
    d5, d6 = delta_drift(rank2, [5, 6])
    assert 0 < d6 < 1 and abs(d5 - d6) <= 0.02
    assert delta_estimate(example_rank2(radius=0.5), 6) < d6
    assert delta_estimate(example_rank1(), 8) < 1e-6
    with pytest.raises(ValueError):
        delta_estimate(rank2, 1)


def test_delta_rejects_overlapping_configuration():
    # radii grow under the non-contracting maps, so the level sums never cross
    with pytest.raises(NoBracket):
        delta_estimate(example_rank2(radius=2.5), 3)
