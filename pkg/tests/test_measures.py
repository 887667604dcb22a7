import math

import numpy as np
import pytest

from measura.algebra import FunctionFamily, TestFunction
from measura.measures import (
    AtomicMeasure,
    integrate,
    integrates_family,
    mf_measure_metric,
    prohorov_distance,
    prohorov_distance_bruteforce,
    weak_sharp_report,
)
from measura.metric_core import point_removal_metric, real_line

SPACE = real_line()


def measure(*atoms):
    return AtomicMeasure.from_atoms(SPACE, atoms)


def random_measure(rng, max_atoms=4):
    k = int(rng.integers(1, max_atoms + 1))
    return measure(*[(float(rng.uniform(-2, 2)), float(rng.uniform(0.05, 2.0))) for _ in range(k)])


class TestIntegrate:
    def test_dirac_identity(self):
        mu = AtomicMeasure.dirac(SPACE, 0.7)
        assert integrate(mu, lambda x: x**3 + 1j * x) == pytest.approx(0.7**3 + 0.7j)

    def test_two_half_atoms(self):
        mu = measure((0.5, 1.0), (0.5, 1.0))
        assert integrate(mu, lambda x: x**2).real == pytest.approx(0.5, abs=1e-15)

    def test_fragmentation_mass_identity(self):
        # sum s_i through the embedding: s = (1/2, 1/3)
        from measura.fragmentation import FragmentationSequence, phi

        mu = phi(FragmentationSequence((0.5, 1 / 3)))
        assert integrate(mu, lambda x: x).real == pytest.approx(5 / 6, abs=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            mu = random_measure(rng)
            a, b = rng.standard_normal(2)
            f = lambda x: math.sin(x) + 1j * x
            g = lambda x: x**2
            lhs = integrate(mu, lambda x: a * f(x) + b * g(x))
            rhs = a * integrate(mu, f) + b * integrate(mu, g)
            assert abs(lhs - rhs) < 1e-12

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            measure((0.0, -1.0))


class TestIntegratesFamily:
    def family(self, *fns):
        return FunctionFamily(
            tuple(TestFunction(f"f{i}", fn, 10.0) for i, fn in enumerate(fns)), SPACE
        )

    def test_bounded_family(self):
        mu = measure((0.2, 1.0), (1.5, 0.5))
        assert integrates_family(mu, self.family(lambda x: math.sin(x), lambda x: 1.0))

    def test_power_family_on_embedded_state(self):
        from measura.fragmentation import FragmentationSequence, phi

        mu = phi(FragmentationSequence((0.4, 0.3, 0.2)))
        fam = self.family(*(lambda x, _p=p: x**_p for p in range(1, 6)))
        assert integrates_family(mu, fam)
        for p in range(1, 6):
            assert integrate(mu, lambda x: x**p).real <= 1.0 + 1e-12

    def test_empty_measure(self):
        mu = AtomicMeasure.empty(SPACE)
        fam = self.family(lambda x: 1.0 / x)
        assert integrates_family(mu, fam)
        assert integrate(mu, lambda x: 1.0 / x) == 0.0

    def test_evaluation_failure_means_false(self):
        mu = AtomicMeasure.dirac(SPACE, 0.0)
        assert not integrates_family(mu, self.family(lambda x: 1.0 / x))


class TestProhorov:
    def test_identical_measures(self):
        mu = measure((0.1, 1.0), (0.9, 0.3))
        assert prohorov_distance(mu, mu) == 0.0

    def test_shifted_diracs(self):
        assert prohorov_distance(
            AtomicMeasure.dirac(SPACE, 0.0), AtomicMeasure.dirac(SPACE, 0.3)
        ) == pytest.approx(0.3, abs=1e-12)

    def test_mass_gap_same_atom(self):
        d = prohorov_distance(
            AtomicMeasure.dirac(SPACE, 0.0, 1.0), AtomicMeasure.dirac(SPACE, 0.0, 1.4)
        )
        assert d == pytest.approx(0.4, abs=1e-12)

    def test_empty_versus_mass(self):
        assert prohorov_distance(AtomicMeasure.empty(SPACE), measure((1.0, 0.7))) == pytest.approx(0.7)

    def test_mismatched_spaces_raise(self):
        other = point_removal_metric(real_line(), 0.0, reference_point=1.0)
        with pytest.raises(ValueError, match="mismatched"):
            prohorov_distance(AtomicMeasure.dirac(SPACE, 1.0), AtomicMeasure.dirac(other, 1.0))

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(150):
            nu1, nu2 = random_measure(rng), random_measure(rng)
            worst = max(worst, abs(prohorov_distance(nu1, nu2) - prohorov_distance_bruteforce(nu1, nu2)))
        assert worst < 1e-4

    def test_metric_axioms_on_sampled_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            a, b, c = (random_measure(rng) for _ in range(3))
            dab = prohorov_distance(a, b)
            dbc = prohorov_distance(b, c)
            dac = prohorov_distance(a, c)
            assert dab == pytest.approx(prohorov_distance(b, a), abs=1e-12)
            assert dac <= dab + dbc + 1e-10
            assert dab >= 0.0


class TestMfMetric:
    def test_identical(self):
        mu = measure((0.3, 1.2))
        assert mf_measure_metric(mu, mu) == 0.0

    def test_mass_two_versus_one(self):
        d = mf_measure_metric(
            AtomicMeasure.dirac(SPACE, 0.0, 1.0), AtomicMeasure.dirac(SPACE, 0.0, 2.0)
        )
        assert d == pytest.approx(1.5, abs=1e-12)  # prohorov 1 plus |1 - 1/2|

    def test_equal_masses_separated_atoms(self):
        d = mf_measure_metric(AtomicMeasure.dirac(SPACE, 0.0), AtomicMeasure.dirac(SPACE, 0.3))
        assert d == pytest.approx(0.3, abs=1e-12)

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError, match="M_f"):
            mf_measure_metric(AtomicMeasure.empty(SPACE), AtomicMeasure.dirac(SPACE, 1.0))


class TestWeakSharpReport:
    def _family(self):
        from measura.levy import levy_family

        rng = np.random.default_rng(2)
        return levy_family(1, [(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1)) for _ in range(10)])

    def test_dirac_sequence_converges(self):
        fam = self._family()
        ns = [10, 100, 1000, 10_000]
        seq = [AtomicMeasure.dirac(fam.space, 1.0 + 1.0 / n) for n in ns]
        report = weak_sharp_report(seq, AtomicMeasure.dirac(fam.space, 1.0), fam, tol=1e-3)
        assert report.converged
        for _, gaps in report.member_gaps:
            assert all(b <= a + 1e-15 for a, b in zip(gaps, gaps[1:]))  # monotone decay
            assert all(g >= 0.0 for g in gaps)

    def test_constant_sequence_trivially_converges(self):
        fam = self._family()
        mu = AtomicMeasure.dirac(fam.space, 2.0)
        report = weak_sharp_report([mu, mu, mu], mu, fam, tol=1e-12)
        assert report.converged
        assert all(g == 0.0 for _, gaps in report.member_gaps for g in gaps)

    def test_escaping_mass_not_converged(self):
        space = SPACE
        fam = FunctionFamily(
            (TestFunction("one-on-(0,1]", lambda x: 1.0 if 0 < x <= 1 else 0.0, 1.0),), space
        )
        ns = [2, 4, 8, 16]
        seq = [AtomicMeasure.dirac(space, 1.0 / n, float(n)) for n in ns]
        report = weak_sharp_report(seq, AtomicMeasure.empty(space), fam, tol=1e-3)
        assert not report.converged
        assert report.member_gaps[0][1][-1] >= 16.0  # gap = n * f(1/n)
