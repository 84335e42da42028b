import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from brownian_atlas import densities as dn
from brownian_atlas.rng import stream


@pytest.mark.parametrize("which", dn.WHICH)
@pytest.mark.parametrize("t", [0.2, 0.5, 0.9])
def test_laws_match_scipy_maxwell(which, t):
    law = dn.EndpointLaw(which, t)
    xs = np.linspace(0.01, 3.0, 40)
    ref = stats.maxwell(scale=law.scale)
    assert np.allclose(law.pdf(xs), ref.pdf(xs), rtol=1e-12)
    assert np.allclose(law.cdf(xs), ref.cdf(xs), atol=1e-10)
    assert abs(law.total_mass() - 1.0) < 1e-10


def test_closed_form_values_at_half():
    x = np.linspace(0.0, 3.0, 31)
    fe = 8 * math.sqrt(2) / math.sqrt(math.pi) * x ** 2 * np.exp(-2 * x ** 2)
    fb = 4 / math.sqrt(math.pi) * x ** 2 * np.exp(-x ** 2)
    assert np.allclose(dn.excursion_endpoint_pdf(x, 0.5), fe, rtol=1e-13)
    assert np.allclose(dn.bessel_endpoint_pdf(x, 0.5), fb, rtol=1e-13)


@given(st.floats(0.01, 5.0))
@settings(max_examples=100)
def test_density_ratio_closed_form(x):
    assert dn.rn_derivative(x) == pytest.approx(dn.rn_closed_form(x), rel=1e-12)
    assert dn.rn_closed_form(x) * dn.excursion_endpoint_pdf(x, 0.5) == pytest.approx(
        dn.bessel_endpoint_pdf(x, 0.5), rel=1e-12)


def test_bessel_norm_of_a_3d_gaussian():
    # |W_t| for a 3d Brownian motion is the Bessel-3 endpoint
    g = np.linalg.norm(stream(0, "3d").standard_normal((20000, 3)) * math.sqrt(0.5), axis=1)
    assert stats.kstest(g, dn.EndpointLaw("bessel3", 0.5).cdf).pvalue > 0.01


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.75, 1.9])
def test_z_lp_norm_matches_closed_form(p):
    exact = (2 * math.sqrt(2)) ** (1 - p) * (2 - p) ** -1.5
    assert dn.z_lp_norm(p) == pytest.approx(exact, rel=1e-8)


def test_z_lp_norm_quadrature_oracle():
    # Z**1.5 f_exc written as one exponential so the tail never overflows
    c = 8 * math.sqrt(2 / math.pi) * (2 * math.sqrt(2)) ** -1.5
    val = integrate.quad(lambda x: c * x * x * math.exp(-0.5 * x * x), 0, np.inf)[0]
    assert dn.z_lp_norm(1.5) == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("p", [2.0, 2.25, 2.5, 3.0, 5.0])
def test_z_lp_norm_diverges_from_two(p):
    assert dn.z_lp_norm(p) == math.inf


def test_input_errors():
    with pytest.raises(ValueError):
        dn.excursion_endpoint_pdf(1.0, 1.0)
    with pytest.raises(ValueError):
        dn.bessel_endpoint_pdf(1.0, 0.0)
    with pytest.raises(ValueError):
        dn.bessel_endpoint_pdf(-1.0, 0.5)
    with pytest.raises(ValueError):
        dn.rn_derivative(0.0)
    with pytest.raises(ValueError):
        dn.z_lp_norm(0.5)
    with pytest.raises(ValueError):
        dn.EndpointLaw("levy", 0.5)
    with pytest.raises(ValueError):
        dn.endpoint_gof(np.ones(10), "excursion")


def test_null_gof_is_calibrated():
    p = dn.null_gof_pvalues("excursion", 2000, 20, 0)
    assert np.mean(np.array(p) > 0.01) >= 0.9


def test_inverse_cdf_sampler_roundtrip():
    law = dn.EndpointLaw("excursion", 0.5)
    inv = law.inverse_cdf_sampler()
    u = np.linspace(0.01, 0.99, 9)
    assert np.allclose(law.cdf(inv(u)), u, atol=1e-4)


@pytest.mark.parametrize("which", dn.WHICH)
def test_simulated_endpoints_small(which):
    samples, spacing = dn.endpoint_samples(which, 512, 2000, 1)
    assert spacing == pytest.approx(2 / math.sqrt(512))
    assert dn.endpoint_gof(samples, which, 0.5, spacing, 1).p_value > 0.001
