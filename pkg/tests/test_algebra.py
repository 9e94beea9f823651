import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson
from scipy.stats import norm

from asqgsk.algebra import (
    Constellation,
    CsrQuantizer,
    Pmf,
    RingElement,
    circular_shift,
    induce_pmf,
    induce_pmf_complex,
    make_quantizer,
    marginal,
    phi,
    phi_inv,
    point_mass,
    quantize,
    ring_add,
    ring_add_qam,
    ring_sub,
    ring_sub_qam,
    shift_rows,
)
from asqgsk.errors import DomainError

C2, C4, C6 = Constellation(2), Constellation(4), Constellation(6)


def ring(c):
    M = c.levels
    return [RingElement(a, b, M) for a in range(M) for b in range(M)]


class TestConstellation:
    @pytest.mark.parametrize("m", [2, 4, 6, 8, 10])
    def test_grid_and_energy(self, m):
        c = Constellation(m)
        p = c.pam_points
        assert p.size == 2 ** (m // 2)
        assert np.all(np.diff(p) == 2.0) and np.allclose(p, -p[::-1])
        assert c.qam_points.size == 2 ** m
        assert c.e_avg == pytest.approx(2 / 3 * (2 ** m - 1), rel=1e-12)

    def test_16qam_energy_is_ten(self):
        assert C4.e_avg == pytest.approx(10.0)

    @pytest.mark.parametrize("m", [0, 3, 5, -2])
    def test_rejects_bad_m(self, m):
        with pytest.raises(DomainError):
            Constellation(m)


class TestPhi:
    @pytest.mark.parametrize("alpha,expected", [(-3 - 3j, (0, 0)), (3 + 3j, (3, 3)), (1 - 1j, (2, 1))])
    def test_examples_m4(self, alpha, expected):
        r = phi(alpha, C4)
        assert (r.re, r.im) == expected

    def test_inverse_examples(self):
        assert phi_inv(RingElement(0, 0, 4), C4) == -3 - 3j
        assert phi_inv(RingElement(3, 3, 4), C4) == 3 + 3j
        assert phi_inv(RingElement(1, 0, 2), C2) == 1 - 1j

    @pytest.mark.parametrize("c", [C2, C4, C6])
    def test_bijection_exhaustive(self, c):
        images = set()
        for x in c.qam_points:
            r = phi(x, c)
            assert phi_inv(r, c) == x
            images.add((r.re, r.im))
        assert len(images) == c.qam_points.size

    @pytest.mark.parametrize("bad", [0 + 0j, 5 + 1j, 1.5 - 1j, complex("nan")])
    def test_off_grid(self, bad):
        with pytest.raises(DomainError):
            phi(bad, C4)

    def test_modulus_mismatch(self):
        with pytest.raises(DomainError):
            phi_inv(RingElement(1, 1, 2), C4)


class TestRing:
    def test_examples(self):
        s = ring_add(RingElement(3, 2, 4), RingElement(2, 3, 4))
        assert (s.re, s.im) == (1, 1)
        d = ring_sub(RingElement(0, 0, 4), RingElement(1, 1, 4))
        assert (d.re, d.im) == (3, 3)
        a = RingElement(2, 3, 4)
        assert a - a == RingElement(0, 0, 4)

    @pytest.mark.parametrize("c", [C2, C4])
    def test_abelian_group_exhaustive(self, c):
        els = ring(c)
        zero = RingElement(0, 0, c.levels)
        for a, b in itertools.product(els, repeat=2):
            assert a + b == b + a
            assert (a + b) - b == a
        for a, b, d in itertools.product(els, repeat=3):
            assert (a + b) + d == a + (b + d)
        for a in els:
            assert a + zero == a
            assert a + (zero - a) == zero

    def test_mismatched_modulus(self):
        with pytest.raises(DomainError):
            ring_add(RingElement(1, 1, 2), RingElement(1, 1, 4))
        with pytest.raises(DomainError):
            ring_sub(RingElement(1, 1, 2), RingElement(1, 1, 4))

    @pytest.mark.parametrize("c", [C2, C4])
    def test_vector_ops_match_scalar(self, c):
        pts = c.qam_points
        x, y = np.meshgrid(pts, pts)
        got = ring_add_qam(x.ravel(), y.ravel(), c)
        want = [phi_inv(phi(a, c) + phi(b, c), c) for a, b in zip(x.ravel(), y.ravel())]
        assert np.array_equal(got, want)
        got = ring_sub_qam(x.ravel(), y.ravel(), c)
        want = [phi_inv(phi(a, c) - phi(b, c), c) for a, b in zip(x.ravel(), y.ravel())]
        assert np.array_equal(got, want)


class TestQuantize:
    def test_examples(self):
        assert quantize(0.9 - 2.6j, C4) == 1 - 3j
        assert quantize(100 + 100j, C4) == 3 + 3j
        for x in C4.qam_points:
            assert quantize(x, C4) == x

    def test_non_finite(self):
        with pytest.raises(DomainError):
            quantize(complex("inf"), C4)

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_nearest_and_idempotent(self, a, b):
        q = quantize(complex(a, b), C6)
        d = np.abs(C6.qam_points - complex(a, b))
        assert abs(q - complex(a, b)) <= d.min() + 1e-12
        assert quantize(q, C6) == q

    @given(st.lists(st.floats(-20, 20), min_size=2, max_size=30))
    def test_monotone(self, xs):
        xs = np.sort(xs)
        q = quantize(xs + 0j, C4).real
        assert np.all(np.diff(q) >= 0)


class TestInducePmf:
    def test_m2_half(self):
        assert np.allclose(induce_pmf(0.0, 1.0, C2).mass, [0.5, 0.5])

    def test_symmetry(self):
        p = induce_pmf(0.0, 2.3, C6).mass
        assert np.allclose(p, p[::-1], atol=1e-15)

    def test_degenerate_limit(self):
        p = induce_pmf(1.0, 1e-8, C4)
        assert point_mass(p, 1.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("var", [0.0, -1.0])
    def test_bad_var(self, var):
        with pytest.raises(DomainError):
            induce_pmf(0.0, var, C4)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-10, 10), st.floats(0.01, 30))
    def test_sums_to_one(self, mu, var):
        assert abs(induce_pmf(mu, var, C6).mass.sum() - 1) < 1e-12

    @pytest.mark.parametrize("mu,var", [(0.3, 0.7), (-2.2, 4.0), (5.0, 0.2)])
    def test_riemann_oracle(self, mu, var):
        # Simpson's rule cell by cell, outer cells truncated at +-14 sd
        c = C4
        sd = np.sqrt(var)
        edges = np.r_[mu - 14 * sd, c.decision_boundaries, mu + 14 * sd]
        want = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                want.append(0.0)
                continue
            x = np.linspace(a, b, 20_001)
            want.append(simpson(norm.pdf(x, mu, sd), x=x))
        assert np.allclose(induce_pmf(mu, var, c).mass, want, atol=1e-9)

    def test_complex_is_product(self):
        p = induce_pmf_complex(0.5 - 1.2j, 0.8, C4)
        pr = induce_pmf(0.5, 0.8, C4).mass
        pi = induce_pmf(-1.2, 0.8, C4).mass
        assert np.allclose(p.mass, np.outer(pr, pi).ravel())
        assert np.allclose(marginal(p, "re", C4).mass, pr)
        assert np.allclose(marginal(p, "im", C4).mass, pi)


class TestShift:
    def test_examples(self):
        p = Pmf(C4.pam_points, np.array([0.1, 0.2, 0.3, 0.4]))
        assert np.array_equal(circular_shift(p, 0).mass, p.mass)
        assert np.allclose(circular_shift(p, 2).mass, [0.3, 0.4, 0.1, 0.2])
        assert np.allclose(circular_shift(p, 6).mass, circular_shift(p, 2).mass)

    @given(st.integers(0, 50), st.integers(0, 50))
    def test_composition(self, s1, s2):
        p = Pmf(C6.pam_points, np.arange(1, 9) / 36)
        assert np.allclose(circular_shift(circular_shift(p, s1), s2).mass, circular_shift(p, s1 + s2).mass)

    @pytest.mark.parametrize("c", [C2, C4])
    def test_subtraction_is_shift_exhaustive(self, c):
        # PMF of X - a equals the PMF of X shifted left by a, for every a
        rng = np.random.default_rng(1)
        mass = rng.random(c.qam_points.size)
        p = Pmf(c.qam_points, mass / mass.sum(), c.levels)
        for a in ring(c):
            moved = np.zeros_like(p.mass)
            for x, w in zip(c.qam_points, p.mass):
                y = phi_inv(phi(x, c) - a, c)
                moved[np.flatnonzero(c.qam_points == y)[0]] += w
            # mass'(t) = mass(t + a): the PMF of X - a, evaluated at t
            assert np.allclose(circular_shift(p, a).mass, moved)

    def test_shift_rows(self):
        m = np.arange(12.0).reshape(3, 4)
        out = shift_rows(m, [0, 1, 3])
        assert np.array_equal(out[1], np.roll(m[1], -1))
        assert np.array_equal(out[2], np.roll(m[2], -3))


class TestPmfAndQuantizers:
    def test_point_mass(self):
        u = Pmf(C4.pam_points, np.full(4, 0.25))
        assert point_mass(u, 1.0) == 0.25
        ind = Pmf(C4.pam_points, np.array([0, 0, 1.0, 0]))
        assert point_mass(ind, 1.0) == 1.0 and point_mass(ind, -1.0) == 0.0
        with pytest.raises(DomainError):
            point_mass(u, 2.0)

    def test_invalid_mass(self):
        with pytest.raises(DomainError):
            Pmf(C4.pam_points, np.array([0.5, 0.5, 0.5, -0.5]))
        with pytest.raises(DomainError):
            Pmf(C4.pam_points, np.array([0.5, 0.5]))

    def test_nearest_matches_quantize(self):
        x = np.linspace(-5, 5, 101)
        assert np.array_equal(CsrQuantizer.nearest(C4).quantize(x + 1j * x), quantize(x + 1j * x, C4))

    def test_equiprobable_is_uniform(self):
        qz = make_quantizer("equiprobable", C4, gamma=0.1)
        assert np.allclose(qz.masses(0.0, 0.55), 0.25, atol=1e-12)

    def test_scaled_spread(self):
        qz = make_quantizer("scaled", Constellation(10), gamma=0.0, spread=0.25)
        rng = np.random.default_rng(0)
        v = qz.quantize_pam(rng.normal(0, np.sqrt(0.5), 200_000))
        assert np.std(v) == pytest.approx(0.25 * 32, rel=0.03)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            make_quantizer("lloyd", C4)
