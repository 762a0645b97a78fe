"""End-to-end acceptance criteria.

Each test prints one PASS/FAIL line with its runtime and fails if the
check or the time budget fails.  All tolerances are pinned below.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from isoscatter import groups, homology, transplant, zeta
from isoscatter.groups import SubgroupHandle
from oracles import rank1_zero_lattice

SPECTRUM_TOL = 1e-12
ZETA_TOL = 1e-12
COVER_TOL = 1e-8
ZERO_POSITION_TOL = 1e-6
WINDING_TOL = 1e-3
BASE_WORD_LENGTH = 8
N_SAMPLES = 20
COVER_CUTOFF = 6
RANK1_RECT = zeta.Rect(-2.5, 0.5, -1.0, 3.0)
RANK1_TRUNC = zeta.ZetaTruncation(n_max=1, k_max=12)

BUDGET = {1: 1.0, 2: 5.0, 3: 1.0, 4: 120.0, 5: 300.0, 6: 30.0, 7: 1.0, 8: 60.0}
TITLES = {
    1: "Gassmann verification for PSL(3,2) point and line stabilizers",
    2: "conjugacy: not in G, conjugate in the extension by (e, 1)",
    3: "transplantation: invertible integer intertwiner and equal char polys",
    4: "lifted length spectra and zeta values agree, rank-2 fixture, length 8",
    5: "cycle-type lifting matches direct enumeration in the cover group",
    6: "rank-1 zero lattice recovered by scan_zeros",
    7: "homological curve criteria for the genus-5 fixture",
    8: "negative controls flip the verdicts",
}


@contextmanager
def criterion(n, capsys):
    t0 = time.perf_counter()
    status, err = "FAIL", None
    try:
        yield
        status = "PASS"
    except BaseException as exc:
        err = exc
    elapsed = time.perf_counter() - t0
    if status == "PASS" and elapsed > BUDGET[n]:
        status = "FAIL"
        err = AssertionError(f"runtime {elapsed:.2f}s exceeds {BUDGET[n]}s")
    with capsys.disabled():
        print(f"\nCRITERION {n}: {status} ({elapsed:.2f}s / {BUDGET[n]:g}s) {TITLES[n]}"
              + ("" if err is None else f" -- {type(err).__name__}: {err}"))
    if err is not None:
        raise err


def test_criterion_1_gassmann(capsys, frozen):
    with criterion(1, capsys):
        # built inside the timed block so construction counts against the budget
        psl32 = groups.build_psl3(2)
        k1 = groups.stabilizer(psl32, point=[1, 0, 0])
        k2 = groups.stabilizer(psl32, hyperplane=[1, 0, 0])
        assert psl32.order == frozen["psl32_order"]
        classes = groups.conjugacy_classes(psl32)
        assert sorted(len(c) for c in classes) == frozen["psl32_class_sizes"]
        for cls in classes:
            assert k1.mask[cls].sum() == k2.mask[cls].sum()
        assert np.array_equal(groups.fixed_point_counts(k1), groups.fixed_point_counts(k2))
        for g in range(psl32.order):
            assert groups.cycle_type(k1.left_translation(g)) == groups.cycle_type(k2.left_translation(g))
        t = groups.sunada_check(psl32, k1, k2)
        assert t.sunada_ok and t.perm_char_ok and t.cycle_types_ok


def test_criterion_2_conjugacy(capsys, psl32, k1, k2):
    with criterion(2, capsys):
        assert groups.find_conjugator(psl32, k1, k2) is None
        Gp = groups.semidirect_extension(psl32, psl32.inverse_transpose())
        assert Gp.order == 336
        w = Gp.pair(psl32.identity, 1)
        moved = k1.in_parent(Gp).conjugate(w)
        assert moved.same_elements(k2.in_parent(Gp))
        assert groups.find_conjugator(Gp, k1.in_parent(Gp), k2.in_parent(Gp)) is not None


def test_criterion_3_transplantation(capsys, psl32, k1, k2, gens, frozen):
    with criterion(3, capsys):
        it = transplant.build_intertwiner(psl32, k1, k2)
        T = it.T
        assert set(np.unique(T)) == {0, 1}
        assert (T.sum(axis=0) == 3).all() and (T.sum(axis=1) == 3).all()
        assert abs(transplant.bareiss_det(T)) == 24
        rep = transplant.verify_isoscattering_discrete(psl32, k1, k2, gens, T)
        assert rep.intertwines and rep.intertwines_adjacency and rep.invertible
        assert rep.charpoly == rep.charpoly_other == frozen["charpoly_points_lines"][0]


def test_criterion_4_spectra(capsys, rank2, hom2, k1, k2, frozen):
    with criterion(4, capsys):
        base = zeta.length_spectrum(rank2, BASE_WORD_LENGTH)
        assert len(base) == sum(frozen["primitive_counts_g2_formula"][:BASE_WORD_LENGTH])
        l1, l2 = zeta.lift_spectrum(base, hom2, k1), zeta.lift_spectrum(base, hom2, k2)
        assert zeta.spectrum_discrepancy(l1, l2, SPECTRUM_TOL) is None
        for s in zeta.sample_points(N_SAMPLES):
            assert abs(zeta.zeta_eval(l1, s) - zeta.zeta_eval(l2, s)) <= ZETA_TOL


def test_criterion_5_cover_cross_check(capsys, rank2, hom2, k1):
    with criterion(5, capsys):
        base = zeta.length_spectrum(rank2, COVER_CUTOFF)
        lifted = [e for e in zeta.lift_spectrum(base, hom2, k1) if e.period * len(e.word) <= COVER_CUTOFF]
        direct = zeta.cover_spectrum_direct(rank2, hom2, k1, COVER_CUTOFF)
        assert direct.cover_rank == 7 * (2 - 1) + 1
        assert len(direct.lengths) == sum(e.weight for e in lifted)
        assert zeta.multiset_discrepancy(direct.lengths, zeta.expand_weights(lifted), COVER_TOL) is None


def test_criterion_6_zero_lattice(capsys, rank1):
    with criterion(6, capsys):
        spec = zeta.length_spectrum(rank1, 1)
        assert len(spec) == 2 and spec[0].ell == spec[1].ell and spec[0].theta == spec[1].theta
        e = spec[0]
        expected = rank1_zero_lattice(e.ell, e.theta, 2, RANK1_TRUNC.k_max,
                                      (RANK1_RECT.re_min, RANK1_RECT.re_max, RANK1_RECT.im_min, RANK1_RECT.im_max))
        cells = zeta.scan_zeros(spec, RANK1_RECT, RANK1_TRUNC, resolution=ZERO_POSITION_TOL)
        assert len(cells) == len(expected)
        for cell, (z, mult) in zip(cells, expected):
            assert abs(cell.center - z) < ZERO_POSITION_TOL
            assert cell.multiplicity == mult
            assert cell.residual < WINDING_TOL
        total = zeta.count_zeros(spec, RANK1_RECT, RANK1_TRUNC)
        assert total.count == sum(m for _, m in expected) and total.residual < WINDING_TOL


def test_criterion_7_curves(capsys):
    with criterion(7, capsys):
        for k in (1, 2, 3):
            rep = homology.verify_sunada_curve_config(homology.CurveConfig.from_json(homology.default_curve_config(k)))
            assert rep.ok, rep.failures
            assert rep.values["tau_gamma1_dot_gamma5"] == k
        J = homology.symplectic_form(5)
        rng = np.random.default_rng(0)
        for _ in range(50):
            d = rng.integers(-4, 5, size=10)
            if math.gcd(*map(int, d)) != 1:
                continue
            M = homology.dehn_twist(d, int(rng.integers(-5, 6)))
            assert np.array_equal(M.T @ J @ M, J)
        assert homology.cover_genus(2, 3) == 5


def test_criterion_8_negative_controls(capsys, psl32, rank2, hom2, k1, k2, gens):
    with criterion(8, capsys):
        base = zeta.length_spectrum(rank2, 5)
        l1, l2 = zeta.lift_spectrum(base, hom2, k1), zeta.lift_spectrum(base, hom2, k2)
        assert zeta.spectrum_discrepancy(l1, l2, SPECTRUM_TOL) is None
        for i, e in enumerate(l2):
            bad = list(l2)
            bad[i] = zeta.SpectrumEntry(e.ell, e.theta, e.weight + 1, e.word, e.period)
            assert zeta.spectrum_discrepancy(l1, bad, SPECTRUM_TOL) is not None

        T = transplant.build_intertwiner(psl32, k1, k2).T
        for i in range(7):
            for j in range(7):
                bad = T.copy()
                bad[i, j] += 1
                assert transplant.intertwining_witness(psl32, k1, k2, bad) is not None

        # every order-24 subgroup is Gassmann-equivalent to K1, so the search
        # finds no non-Gassmann replacement; fall back to a different order
        non_gassmann = [h for h in groups.subgroups_of_order(psl32, 24)
                        if not groups.sunada_check(psl32, k1, h).sunada_ok]
        if non_gassmann:
            assert not groups.sunada_check(psl32, k1, non_gassmann[0]).sunada_ok
        else:
            c4 = SubgroupHandle(psl32, psl32.closure([int(np.flatnonzero(psl32.element_orders == 4)[0])]))
            with pytest.raises(groups.OrderMismatch):
                groups.sunada_check(psl32, k1, c4)
            fours = groups.subgroups_of_order(psl32, 4)
            cyclic = next(h for h in fours if psl32.element_orders[h.members].max() == 4)
            klein = next(h for h in fours if psl32.element_orders[h.members].max() == 2)
            t = groups.sunada_check(psl32, cyclic, klein)
            assert not t.sunada_ok and not t.perm_char_ok
