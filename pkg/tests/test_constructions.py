from __future__ import annotations

import math

import numpy as np
import pytest

from nctwistor import constructions as cons
from nctwistor.chart import ChartError, metric_at, metric_jet, sample_points
from nctwistor.curvature import Curvature
from nctwistor.exterior import form_field
from nctwistor.expr import parse_expr

S2_CONF = "(1+(x1^2+x2^2)/4)"


def _ricci_max(spec, n=5):
    cv = Curvature(metric_jet(spec, sample_points(spec, n), 2))
    return float(np.max(np.abs(cv.ricci.value)))


def test_flat_and_signature():
    f = cons.flat(4, (2, 2))
    assert np.allclose(metric_at(f, [0, 0, 0, 0]).g, np.diag([-1, -1, 1, 1]))
    with pytest.raises(ChartError):
        cons.flat(3, (1, 1))
    with pytest.raises(ChartError):
        cons.flat(9)


@pytest.mark.parametrize("kappa,n", [(1.0, 3), (-1.0, 3), (0.25, 4), (-2.0, 2)])
def test_space_form_scalar_curvature(kappa, n):
    spec = cons.space_form(kappa, n)
    cv = Curvature(metric_jet(spec, sample_points(spec, 5), 2))
    assert np.allclose(cv.scal.value, kappa * n * (n - 1))
    assert cons.einstein_check(spec, sample_points(spec, 5)).einstein


def test_hyperbolic_guard():
    spec = cons.space_form(-1.0, 3)
    assert not spec.admissible([2.5, 0, 0])
    assert all(spec.admissible(x) for x in sample_points(spec, 20))


def test_product_blocks_and_names():
    s2 = cons.sphere_chart(2)
    pr = cons.product(s2, cons.space_form(-1.0, 2))
    assert pr.n == 4 and pr.names == ("x1", "x2", "x3", "x4")
    g = metric_at(pr, [0.1, 0.2, 0.3, -0.1]).g
    assert np.allclose(g[:2, 2:], 0)
    assert np.allclose(g[:2, :2], metric_at(s2, [0.1, 0.2]).g)
    pp = cons.product(cons.pp_wave(), cons.flat(2))
    assert pp.signature == (1, 5)


def test_scaled_metric():
    sp = cons.scaled(cons.sphere_chart(3), 4.0)
    cv = Curvature(metric_jet(sp, sample_points(sp, 3), 2))
    assert np.allclose(cv.scal.value, 6.0 / 4.0)
    with pytest.raises(ChartError):
        cons.scaled(sp, -1.0)


@pytest.mark.parametrize("base", ["sphere2", "sphere3", "s2xs2"])
def test_cone_over_einstein_is_ricci_flat(gallery, base):
    spec = cons.sphere_chart(2) if base == "sphere2" else (cons.sphere_chart(3) if base == "sphere3" else gallery["s2xs2"].spec)
    b = cons.einstein_b(spec, sample_points(spec, 5)) if spec.n > 2 else 1.0
    assert _ricci_max(cons.cone(spec, b)) < 1e-10
    if spec.n > 2:
        assert _ricci_max(cons.ambient(spec, b)) < 1e-10
        # any other scaling is not Ricci-flat
        assert _ricci_max(cons.cone(spec, 2 * b)) > 1e-2


def test_negative_cone_over_hyperbolic_space():
    h3 = cons.space_form(-1.0, 3)
    b = cons.einstein_b(h3, sample_points(h3, 5))
    assert b == pytest.approx(-1.0)
    c = cons.cone(h3, b)
    assert c.signature == (1, 3)
    assert _ricci_max(c) < 1e-10


def test_warped_product_of_spheres_is_round():
    w = cons.warped(cons.sphere_chart(2), cons.sphere_chart(2))
    cv = Curvature(metric_jet(w, sample_points(w, 5), 2))
    assert np.allclose(cv.scal.value, 20.0)
    assert np.max(np.abs(cv.weyl.value)) < 1e-10
    assert not w.admissible([0.05, 0, 0, 0, 0])


def test_einstein_b_rejects_non_einstein(gallery):
    with pytest.raises(ValueError):
        cons.einstein_b(gallery["generic4"].spec, sample_points(gallery["generic4"].spec, 3))
    with pytest.raises(ValueError):
        cons.einstein_b(cons.flat(3), sample_points(cons.flat(3), 3))


def test_construct_dispatch():
    assert cons.construct("flat", {"n": 3}).n == 3
    assert cons.construct("sphere", {"n": 3, "radius": 2.0}).n == 3
    assert cons.construct("cone", {"base": cons.sphere_chart(3), "b": 1.0}).n == 4
    with pytest.raises(ChartError):
        cons.construct("torus", {})
    with pytest.raises(ChartError):
        cons.construct("space_form", {"n": 3})


def test_gallery_declared_facts(gallery):
    for name, entry in gallery.items():
        pts = sample_points(entry.spec, 5)
        cv = Curvature(metric_jet(entry.spec, pts, 3))
        if entry.scal is not None:
            assert np.allclose(cv.scal.value, entry.scal, atol=1e-9), name
        if entry.einstein is not None:
            assert cons.einstein_check(entry.spec, pts).einstein == entry.einstein, name
        if entry.conformally_flat is not None:
            flat = np.max(np.abs(cv.weyl.value)) < 1e-9 and np.max(np.abs(cv.cotton.value)) < 1e-9
            assert flat == entry.conformally_flat, name


# --- lifts ----------------------------------------------------------------------------------------


def test_killing_form_on_two_sphere_lifts_to_parallel_form():
    s2 = cons.sphere_chart(2)
    beta = form_field(1, s2, {"1": f"-x2/{S2_CONF}^2", "2": f"x1/{S2_CONF}^2"})
    assert np.max(cons.special_killing_residuals(beta, s2, sample_points(s2, 5))) < 1e-12
    lift = cons.lift_to_cone(beta, s2, 1.0)
    cn = cons.cone(s2, 1.0)
    assert np.max(cons.parallel_residual(lift, cn, sample_points(cn, 5))) < 1e-12
    with pytest.raises(ValueError):
        cons.lift_to_cone(beta, s2, 2.0)


def test_sphere_harmonic_lifts_but_constant_does_not(sphere3):
    cn = cons.cone(sphere3, 1.0)
    pts = sample_points(cn, 5)
    harm = form_field(0, sphere3, {"": "x1/(1+(x1^2+x2^2+x3^2)/4)"})
    assert np.max(cons.special_killing_residuals(harm, sphere3, sample_points(sphere3, 5))) < 1e-12
    assert np.max(cons.parallel_residual(cons.lift_to_cone(harm, sphere3, 1.0), cn, pts)) < 1e-12
    one = form_field(0, sphere3, {"": "1"})
    assert np.max(cons.special_killing_residuals(one, sphere3, sample_points(sphere3, 5))) > 0.1
    assert np.max(cons.parallel_residual(cons.lift_to_cone(one, sphere3, 1.0), cn, pts)) > 0.1


def test_volume_forms_on_warped_product():
    """sin^{p+1}(t) dvol_k and cos^{q+1}(t) dvol_h are special Killing on the warped S²,S² product."""
    s2 = cons.sphere_chart(2)
    w = cons.warped(s2, s2)
    pts = sample_points(w, 5)
    good = cons.volume_form(s2, 1, 5, factor=parse_expr("sin(x1)^3", 5, w.names))
    assert np.max(cons.special_killing_residuals(good, w, pts)) < 1e-10
    other = cons.volume_form(s2, 3, 5, factor=parse_expr("cos(x1)^3", 5, w.names))
    assert np.max(cons.special_killing_residuals(other, w, pts)) < 1e-10
    bad = cons.volume_form(s2, 1, 5, factor=parse_expr("sin(x1)^(-2)", 5, w.names))
    assert np.max(cons.special_killing_residuals(bad, w, pts)) > 1.0


def test_volume_form_values():
    s2 = cons.sphere_chart(2)
    v = cons.volume_form(s2)
    assert v.jet([0.0, 0.0], 0).value[0] == pytest.approx(1.0)
    emb = cons.volume_form(s2, 2, 4)
    val = emb.jet([0.5, 0.5, 0.0, 0.0], 0).value
    assert val.shape == (6,) and val[-1] == pytest.approx(1.0) and np.count_nonzero(val) == 1


# --- ambient comparison ---------------------------------------------------------------------------


def test_ambient_frame_map_is_isometry():
    for b in (1.0, -2.0, 0.5):
        n = 3
        Phi = cons.ambient_frame_map(n, b)
        eta = np.zeros((n + 2, n + 2))
        eta[0, n + 1] = eta[n + 1, 0] = 1.0
        eta[1:n + 1, 1:n + 1] = np.eye(n)
        big = np.diag([1.0, -1.0, 1.0, 1.0, 1.0]) * math.copysign(1.0, b)
        big[2:, 2:] = np.eye(n)
        assert np.allclose(Phi.T @ big @ Phi, eta)


def test_ambient_matches_tractor_connection(gallery):
    for name in ("sphere3", "s2xs2", "hyperbolic3"):
        spec = gallery[name].spec
        rep = cons.ambient_compare(spec, sample_points(spec, 4, seed=1))
        assert rep.max_deviation < 1e-12, name
    rep = cons.ambient_compare(gallery["s2xs2"].spec, sample_points(gallery["s2xs2"].spec, 6, seed=1), with_ranks=True)
    assert rep.tractor_rank == rep.ambient_rank == 10
