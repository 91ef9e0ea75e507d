"""Tests for the overfitting potential and the proof chain built on it."""

import numpy as np
import pytest

from genbound import potential
from genbound.divergences import make_divergence
from genbound.errors import IndexRangeError
from genbound.ghost import HullPoint, hull_H
from genbound.potential import (
    PotentialResult,
    bregman_phi,
    dv_conjugate_closed_form,
    ftrl_trajectory,
    hull_pairing,
    phi_eval,
    phi_grid_oracle,
    simplex_grid,
    verify_lemma3,
    verify_lemma6,
    verify_theorem2,
)
from genbound.probability import partial_average_loss

CHAIN_TOL = 1e-7


def full_loss(inst, eta=1.0):
    return eta * partial_average_loss(inst.centered, inst.n)


class TestPhi:
    def test_zero_function(self, gibbs2):
        spec = make_divergence("kl", gibbs2.base)
        result = phi_eval(gibbs2.family, spec, np.zeros_like(gibbs2.joint.table))
        assert result.value == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("name", ["kl", "chi2"])
    @pytest.mark.parametrize("eta", [-3.2, 0.4, 6.4])
    def test_dominates_every_member(self, gibbs_skewed3, name, eta):
        family = gibbs_skewed3.family
        spec = make_divergence(name, gibbs_skewed3.base)
        f = full_loss(gibbs_skewed3, eta)
        result = phi_eval(family, spec, f)
        for k in range(family.n + 1):
            vertex = np.eye(family.n + 1)[k]
            assert result.value >= hull_pairing(family, vertex, f) - hull_H(family, spec, vertex) - 1e-12

    def test_below_donsker_varadhan(self, gibbs_skewed3):
        spec = make_divergence("kl", gibbs_skewed3.base)
        P0 = gibbs_skewed3.family.members[0]
        rng = np.random.default_rng(4)
        for f in (full_loss(gibbs_skewed3, 3.2), rng.normal(size=gibbs_skewed3.joint.table.shape)):
            value = phi_eval(gibbs_skewed3.family, spec, f).value
            assert value <= dv_conjugate_closed_form(P0, f) + 1e-9

    def test_grid_oracle_at_one_sample(self, build):
        inst = build("skewed", "gibbs:2", 1)
        spec = make_divergence("kl", inst.base)
        f = full_loss(inst, 4.0)
        value = phi_eval(inst.family, spec, f).value
        grid = phi_grid_oracle(inst.family, spec, f, resolution=400)
        assert grid <= value + 1e-8
        assert value - grid <= 1e-4

    def test_constant_algorithm(self, constant2):
        spec = make_divergence("chi2", constant2.base)
        assert phi_eval(constant2.family, spec, full_loss(constant2, 2.0)).value == pytest.approx(0.0, abs=1e-9)

    def test_sub_hull(self, gibbs2):
        spec = make_divergence("kl", gibbs2.base)
        f = full_loss(gibbs2, 1.6)
        full = phi_eval(gibbs2.family, spec, f)
        lower = phi_eval(gibbs2.family, spec, f, top=1)
        assert lower.maximizer.alpha[2] == 0.0
        assert lower.value <= full.value + 1e-12
        with pytest.raises(IndexRangeError):
            phi_eval(gibbs2.family, spec, f, top=3)

    @pytest.mark.parametrize("name", ["kl", "chi2"])
    def test_bregman_is_nonnegative(self, gibbs2, name):
        spec = make_divergence(name, gibbs2.base)
        rng = np.random.default_rng(8)
        pairs = rng.uniform(-10.0, 10.0, size=(200, 2) + gibbs2.joint.table.shape)
        worst = min(bregman_phi(gibbs2.family, spec, f, f_prime) for f, f_prime in pairs)
        assert worst >= -CHAIN_TOL


class TestSimplexGrid:
    def test_small_grid(self):
        grid = simplex_grid(3, 2)
        assert grid.shape == (6, 3)
        np.testing.assert_allclose(grid.sum(axis=1), 1.0)
        assert {tuple(row) for row in grid} == {
            (0.0, 0.0, 1.0), (0.0, 0.5, 0.5), (0.0, 1.0, 0.0),
            (0.5, 0.0, 0.5), (0.5, 0.5, 0.0), (1.0, 0.0, 0.0),
        }


class TestProofChain:
    @pytest.mark.parametrize("name", ["kl", "chi2"])
    def test_telescoping(self, gibbs2, name):
        spec = make_divergence(name, gibbs2.base)
        for eta in (-1.6, 0.2, 3.2):
            report = verify_theorem2(gibbs2.family, spec, gibbs2.centered, eta)
            assert report.slack >= -CHAIN_TOL
            assert len(report.terms) == 2

    @pytest.mark.parametrize("name", ["kl", "chi2"])
    def test_telescoping_at_three_samples(self, build, name):
        inst = build("binary", "gibbs:1", 3)
        spec = make_divergence(name, inst.base)
        for eta in (-2.0, -0.5, 0.5, 2.0):
            report = verify_theorem2(inst.family, spec, inst.centered, eta)
            assert report.slack >= -CHAIN_TOL, (eta, report)
            assert len(report.terms) == 3

    @pytest.mark.parametrize("name", ["kl", "chi2", "pnormp:3"])
    def test_step_smoothness(self, gibbs2, name):
        spec = make_divergence(name, gibbs2.base)
        for eta in (-0.8, 1.6):
            for i in (1, 2):
                report = verify_lemma3(gibbs2.family, spec, gibbs2.centered, eta, i)
                assert report.slack >= -CHAIN_TOL, (eta, i, report)

    def test_step_index(self, gibbs2):
        spec = make_divergence("kl", gibbs2.base)
        with pytest.raises(IndexRangeError):
            verify_lemma3(gibbs2.family, spec, gibbs2.centered, 1.0, 3)

    @pytest.mark.parametrize("name", ["kl", "chi2"])
    def test_smoothness_and_stability(self, gibbs2, name):
        spec = make_divergence(name, gibbs2.base)
        f = full_loss(gibbs2, 3.2)
        f_prime = 3.2 * partial_average_loss(gibbs2.centered, 1)
        report = verify_lemma6(gibbs2.family, spec, f, f_prime)
        assert report.slack >= -CHAIN_TOL
        assert report.distance_slack >= -report.distance_tol

    def test_smoothness_on_random_pairs(self, gibbs2):
        spec = make_divergence("kl", gibbs2.base)
        rng = np.random.default_rng(6)
        pairs = rng.uniform(-10.0, 10.0, size=(100, 2) + gibbs2.joint.table.shape)
        reports = [verify_lemma6(gibbs2.family, spec, f, f_prime) for f, f_prime in pairs]
        assert min(r.slack for r in reports) >= -CHAIN_TOL
        assert min(r.bregman for r in reports) >= -CHAIN_TOL
        assert all(r.distance_slack >= -r.distance_tol for r in reports)

    @pytest.mark.parametrize("eta", [-1.6, 0.2, 12.8])
    def test_ftrl_predictions_pair_to_zero(self, gibbs_skewed3, eta):
        spec = make_divergence("kl", gibbs_skewed3.base)
        report = ftrl_trajectory(gibbs_skewed3.family, spec, gibbs_skewed3.centered, eta)
        assert len(report.steps) == 3
        assert report.max_pairing <= 1e-8
        assert report.decomposition_defect <= 1e-8
        assert report.max_face_deficit <= 1e-8
        assert report.gen == pytest.approx(gibbs_skewed3.gen)

    def test_ftrl_detects_predictions_off_the_face(self, gibbs_skewed3, monkeypatch):
        n = gibbs_skewed3.n

        def last_vertex(family, spec, f, tol=None, **kwargs):
            corner = HullPoint.vertex(n, n)
            return PotentialResult(0.0, corner, (corner,), 0, 0.0, True)

        monkeypatch.setattr(potential, "phi_eval", last_vertex)
        spec = make_divergence("kl", gibbs_skewed3.base)
        report = ftrl_trajectory(gibbs_skewed3.family, spec, gibbs_skewed3.centered, 3.2)
        assert report.max_pairing > 1e-3
        assert report.decomposition_defect > 1e-3
        assert report.gen == pytest.approx(gibbs_skewed3.gen)
