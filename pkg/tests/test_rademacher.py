import itertools

import numpy as np
import pytest

from genbound.bounds import massart_bound_disc
from genbound.classes import ClassSpec, ContractError, FiniteClass, enumerate_finite_class, finite_class_cardinality
from genbound.dist import SourceSpec, sample
from genbound.optim import OptConfig
from genbound.rademacher import (
    all_sign_vectors,
    empirical_rademacher,
    empirical_rademacher_composition,
    exact_rademacher,
    rademacher_signs,
)

CUBE1 = SourceSpec("uniform_cube", 1, 2)


def constant_pair_class(c=1.0):
    """The class {f, -f} with f identically c (constant through the second bias)."""
    return FiniteClass(np.zeros((2, 1, 1)), np.zeros((2, 1)), np.zeros((2, 1)), np.array([c, -c]), abs(c))


def brute_force(values):
    """(2/n) E_tau max_k sum_i tau_i F[k, i] by an explicit double loop."""
    K, n = values.shape
    total = 0.0
    for tau in itertools.product((-1, 1), repeat=n):
        total += max(sum(t * v for t, v in zip(tau, row)) for row in values)
    return 2.0 * total / (n * 2**n)


class TestExact:
    def test_pair_example(self):
        est = exact_rademacher(constant_pair_class(), "clamp01", np.zeros((2, 1)))
        assert est.mean == 1.0 and est.std_error == 0.0 and est.mode == "exact_enumeration"

    def test_zero_class(self):
        fc = enumerate_finite_class(ClassSpec(2, 2, "clamp01", 0.0), 3)
        assert exact_rademacher(fc, "clamp01", sample(SourceSpec("uniform_cube", 2, 0), 5, 0)).mean == 0.0

    @pytest.mark.parametrize("d,w,g,n", [(1, 1, 3, 4), (2, 1, 3, 3), (1, 2, 3, 3)])
    def test_matches_brute_force_loop(self, d, w, g, n):
        fc = enumerate_finite_class(ClassSpec(d, w, "clamp01", 1.0), g)
        S = sample(SourceSpec("uniform_cube", d, 4), n, 0)
        assert exact_rademacher(fc, "clamp01", S).mean == pytest.approx(brute_force(fc.values("clamp01", S)), abs=1e-12)

    def test_nonnegative_for_symmetric_classes(self):
        for d, w, g, n in [(1, 1, 3, 5), (2, 1, 5, 4), (1, 2, 3, 6)]:
            fc = enumerate_finite_class(ClassSpec(d, w, "logistic", 1.0), g)
            assert exact_rademacher(fc, "logistic", sample(SourceSpec("uniform_cube", d, 1), n, 0)).mean >= 0

    def test_refusal_reports_cost(self):
        fc = enumerate_finite_class(ClassSpec(1, 1, "clamp01", 1.0), 5)
        S = sample(CUBE1, 12, 0)
        with pytest.raises(ContractError, match=str(fc.cardinality * 2**12)):
            exact_rademacher(fc, "clamp01", S)
        with pytest.raises(ContractError, match="n <= 20"):
            exact_rademacher(constant_pair_class(), "clamp01", np.zeros((21, 1)))

    def test_sign_vectors(self):
        T = all_sign_vectors(3)
        assert T.shape == (8, 3) and len({tuple(t) for t in T}) == 8

    def test_nested_grids_non_decreasing(self):
        S = sample(SourceSpec("uniform_cube", 1, 5), 6, 0)
        spec = ClassSpec(1, 1, "clamp01", 1.0)
        vals = [exact_rademacher(enumerate_finite_class(spec, g), "clamp01", S).mean for g in (3, 5, 9)]
        assert vals[0] <= vals[1] <= vals[2]
        S2 = sample(SourceSpec("uniform_cube", 2, 5), 5, 0)
        spec2 = ClassSpec(2, 1, "logistic", 1.0)
        v3, v5 = (exact_rademacher(enumerate_finite_class(spec2, g), "logistic", S2).mean for g in (3, 5))
        assert v3 <= v5

    def test_second_layer_homogeneity(self):
        S = sample(SourceSpec("uniform_cube", 2, 6), 6, 0)
        fc = enumerate_finite_class(ClassSpec(2, 1, "clamp01", 1.0), 5)
        base = exact_rademacher(fc, "clamp01", S).mean
        for c in (1.0, 2.0, 3.5):
            scaled = FiniteClass(fc.first_weights, fc.first_bias, c * fc.second_weights, c * fc.second_bias, fc.budget_V)
            assert exact_rademacher(scaled, "clamp01", S).mean == pytest.approx(c * base, rel=1e-12)

    @pytest.mark.parametrize(
        "d,w,V,g,n",
        [(1, 1, 1.0, 3, 4), (1, 1, 2.0, 5, 8), (2, 1, 1.0, 5, 6), (2, 2, 1.0, 3, 8), (1, 2, 2.0, 3, 6), (2, 1, 2.0, 3, 8)],
    )
    def test_massart_dominance(self, d, w, V, g, n):
        spec = ClassSpec(d, w, "clamp01", V)
        fc = enumerate_finite_class(spec, g)
        S = sample(SourceSpec("uniform_cube", d, 5), n, 0)
        assert exact_rademacher(fc, "clamp01", S).mean <= massart_bound_disc(V, n, finite_class_cardinality(spec, g))


class TestMonteCarlo:
    def test_zero_class(self):
        est = empirical_rademacher(ClassSpec(1, 2, "clamp01", 0.0), sample(CUBE1, 5, 0), 10, 2, OptConfig(steps=5))
        assert est.mean == 0.0

    def test_single_point(self):
        # n = 1: sup_f tau f(x) = max |f(x)| = 2V whatever tau is, so the estimate is 2 * 2V
        est = empirical_rademacher(ClassSpec(1, 1, "clamp01", 1.0), [[0.4]], 20, 20, OptConfig(steps=100))
        assert est.mean == pytest.approx(4.0, abs=1e-9) and est.std_error == pytest.approx(0.0, abs=1e-9)
        exact = exact_rademacher(enumerate_finite_class(ClassSpec(1, 1, "clamp01", 1.0), 3), "clamp01", [[0.4]])
        assert exact.mean == pytest.approx(4.0)

    def test_signs_deterministic_and_balanced(self):
        assert np.array_equal(rademacher_signs(3, 5, 10), rademacher_signs(3, 5, 10))
        t = rademacher_signs(0, 0, 100_000)
        assert set(np.unique(t)) == {-1.0, 1.0} and abs(t.mean()) < 0.02

    def test_converges_to_exact(self):
        S = sample(CUBE1, 6, 0)
        spec = ClassSpec(1, 1, "clamp01", 1.0)
        exact = exact_rademacher(enumerate_finite_class(spec, 13), "clamp01", S).mean
        est = empirical_rademacher(spec, S, 1000, 10, OptConfig(steps=100, seed=1))
        assert abs(est.mean - exact) <= 3 * est.std_error
        assert est.tau_draws == 1000 and len(est.restart_spread) == 1000 and min(est.restart_spread) >= 0

    def test_more_restarts_never_lower(self):
        S = sample(SourceSpec("uniform_cube", 2, 1), 10, 0)
        spec = ClassSpec(2, 3, "clamp01", 1.0)
        a = empirical_rademacher(spec, S, 20, 2, OptConfig(steps=30))
        b = empirical_rademacher(spec, S, 20, 4, OptConfig(steps=30))
        assert b.mean >= a.mean

    def test_dimension_contract(self):
        with pytest.raises(ContractError):
            empirical_rademacher(ClassSpec(2, 1), np.ones((3, 1)), 2, 1, OptConfig(steps=2))


class TestComposition:
    def test_zero_classes(self):
        Z = sample(CUBE1, 6, 0)
        cfg = OptConfig(steps=10)
        d0, g0 = ClassSpec(1, 1, "clamp01", 0.0), ClassSpec(1, 1, "clamp01", 0.0, 1)
        d1, g1 = ClassSpec(1, 1, "clamp01", 1.0), ClassSpec(1, 1, "clamp01", 1.0, 1)
        assert empirical_rademacher_composition(d0, g1, Z, 5, 2, cfg).mean == 0.0
        # a zero generator leaves D evaluated at 0: a constant, sup = (2/m) |sum tau| * max|D(0)|
        est = empirical_rademacher_composition(d1, g0, Z, 5, 2, cfg)
        assert est.mean >= 0.0

    def test_reduces_to_discriminator_on_identity_images(self):
        # with d_z = d_x = 1 the generator class contains the pass-through z -> z on [0, 1]
        Z = sample(CUBE1, 6, 0)
        d, g = ClassSpec(1, 1, "clamp01", 1.0), ClassSpec(1, 1, "clamp01", 1.0, 1)
        cfg = OptConfig(step_size=0.2, steps=100, seed=0)
        comp = empirical_rademacher_composition(d, g, Z, 40, 6, cfg)
        disc = empirical_rademacher(d, Z, 40, 6, cfg)
        assert comp.mean >= 0.0
        assert abs(comp.mean - disc.mean) <= max(0.05 * disc.mean, 3 * comp.std_error)

    def test_dimension_contract(self):
        with pytest.raises(ContractError):
            empirical_rademacher_composition(ClassSpec(2, 1), ClassSpec(1, 1, output_dim=1), np.ones((3, 1)), 2, 1, OptConfig())
