from __future__ import annotations

import numpy as np
import pytest

from nctwistor import constructions as cons
from nctwistor.chart import conformal_rescale, metric_at, metric_jet, sample_points
from nctwistor.curvature import Curvature
from nctwistor.exterior import DerivativeField, HodgeField, form_field
from nctwistor.expr import parse_expr
from nctwistor.jet import JetOrderError
from nctwistor.tractor import TractorField, nc_derivative
from nctwistor.twistor import (
    DEFAULT_TOL,
    ck_residual,
    companions,
    companions_jet,
    integrability_residuals,
    nc_residuals,
    ncfunction_residuals,
    plucker_residual,
    scaling_detect,
)

S3_CONF = "(1+(x1^2+x2^2+x3^2)/4)"


def _verdict(alpha, spec, n=8, seed=0):
    return nc_residuals(alpha, spec, sample_points(spec, n, seed=seed)).verdict()


class _Companion:
    """Field wrapper exposing one companion of ``α`` (0: α_0, 1: α_∓, 2: α_+)."""

    def __init__(self, alpha, spec, which):
        self.alpha, self.spec, self.which = alpha, spec, which
        p = alpha.degree
        self.degree = (p + 1, p - 1, p)[which]
        self.dim = spec.n

    def jet(self, points, order):
        cv = Curvature(metric_jet(self.spec, points, order + 4))
        return companions_jet(self.alpha.jet(points, order + 2), self.alpha.degree, cv)[self.which].truncate(order)


def _tractor(alpha, spec):
    p = alpha.degree
    return TractorField(p, spec.n, alpha, _Companion(alpha, spec, 0), _Companion(alpha, spec, 1) if p > 0 else None, _Companion(alpha, spec, 2))


# --- companions --------------------------------------------------------------------------------


def test_box_of_square_norm_on_flat_space(flat3):
    """Box_0 f = (∇*∇f - scal f/(2(n-1)))/n = -6/3 for f = |x|² on flat R³."""
    f = form_field(0, flat3, {"": "x1^2+x2^2+x3^2"})
    a0, amp, ap = companions(f, metric_at(flat3, [0.2, -0.1, 0.4], 3))
    assert ap[0] == pytest.approx(-2.0)
    assert np.allclose(a0, [0.4, -0.2, 0.8])
    assert amp.size == 0


def test_constant_on_unit_sphere_has_einstein_companion(sphere3):
    """For f = 1 the last companion is -scal/(2n(n-1)) = -1/2 on the unit 3-sphere."""
    one = form_field(0, sphere3, {"": "1"})
    for x in sample_points(sphere3, 4):
        ap = companions(one, metric_at(sphere3, x, 3))[2]
        assert ap[0] == pytest.approx(-0.5, abs=1e-12)
    assert _verdict(one, sphere3) == "normal"


def test_companions_need_third_order(flat3):
    f = form_field(0, flat3, {"": "x1"})
    with pytest.raises(JetOrderError):
        companions(f, metric_at(flat3, [0, 0, 0], 2))


def test_dimension_mismatch(flat3):
    with pytest.raises(ValueError):
        nc_residuals(form_field(0, cons.flat(4), {"": "1"}), flat3, [[0, 0, 0]])


# --- known examples -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "coeffs,p,expected",
    [
        ({"": "x1^2+x2^2+x3^2"}, 0, "normal"),
        ({"1": "-x2", "2": "x1"}, 1, "normal"),
        ({"1": "x1*x2"}, 1, "neither"),
        ({"1,2": "1"}, 2, "normal"),
        ({"2,3": "exp(x1)"}, 2, "neither"),
    ],
)
def test_flat_examples(flat3, coeffs, p, expected):
    assert _verdict(form_field(p, flat3, coeffs), flat3) == expected


def test_self_dual_form_in_four_dimensions():
    flat4 = cons.flat(4)
    sd = form_field(2, flat4, {"1,2": "1", "3,4": "1"})
    assert _verdict(sd, flat4) == "normal"
    assert plucker_residual(sd.at([0, 0, 0, 0]).coeffs, 2, 4) > 0.1


def test_sphere_harmonic_and_killing(sphere3):
    h = form_field(0, sphere3, {"": f"x1/{S3_CONF}"})
    assert _verdict(h, sphere3) == "normal"
    kil = form_field(1, sphere3, {"1": f"-x2/{S3_CONF}^2", "2": f"x1/{S3_CONF}^2"})
    assert _verdict(kil, sphere3) == "normal"
    # on an Einstein metric, dα of a normal form passes again
    assert _verdict(DerivativeField(kil), sphere3) == "normal"


def test_gallery_form_verdicts(gallery):
    for name, entry in gallery.items():
        for label, form, expected in entry.forms:
            assert _verdict(form, entry.spec, n=6) == expected, (name, label)


def test_conformal_only_witness_has_single_failing_equation(gallery):
    entry = gallery["s2xh2_scal-4"]
    res = nc_residuals(entry.forms[0][1], entry.spec, sample_points(entry.spec, 6))
    assert res.max[0] < DEFAULT_TOL
    assert res.max[1] > 1e-2


def test_ppwave_witnesses(gallery):
    pp = gallery["ppwave"].spec
    pts = sample_points(pp, 6)
    assert max(ncfunction_residuals(parse_expr("x", 4, pp.names), pp, pts)) < 1e-10
    assert _verdict(form_field(0, pp, {"": "x"}), pp) == "normal"
    # constants are not: the trace-free Schouten tensor does not vanish
    assert ncfunction_residuals(parse_expr("1", 4, pp.names), pp, pts)[0] > 1.0
    hess, _ = ncfunction_residuals(parse_expr("y", 4, pp.names), pp, pts)
    assert hess > 1.0
    assert _verdict(form_field(0, pp, {"": "y"}), pp) != "normal"


def test_function_equations_agree_with_form_equations(flat3, sphere3):
    pts = sample_points(sphere3, 5)
    for text in (f"x1/{S3_CONF}", "1"):
        assert max(ncfunction_residuals(parse_expr(text, 3), sphere3, pts)) < 1e-10
    assert max(ncfunction_residuals(parse_expr("x1*x2", 3), flat3, pts)) > 0.1
    with pytest.raises(ValueError):
        ncfunction_residuals(parse_expr("1", 2), cons.sphere_chart(2), [[0.0, 0.0]])


# --- covariance ------------------------------------------------------------------------------


def test_conformal_covariance(flat3):
    """Under ĝ = e^{-2φ} g a normal p-form rescales to e^{-(p+1)φ} α."""
    phi = "0.3*sin(x1)"
    spec = conformal_rescale(flat3, parse_expr(phi, 3))
    w = f"exp(-2*{phi})"
    moved = form_field(1, spec, {"1": f"-x2*{w}", "2": f"x1*{w}"})
    assert _verdict(moved, spec) == "normal"
    naive = form_field(1, spec, {"1": "-x2", "2": "x1"})
    assert ck_residual(naive, spec, sample_points(spec, 8)) > 1e-3


@pytest.mark.parametrize("name", ["s2xh2", "s2xh3", "ppwave"])
def test_hodge_covariance(gallery, name):
    entry = gallery[name]
    form = entry.forms[0][1]
    assert _verdict(HodgeField(form, entry.spec), entry.spec, n=5) == "normal"


def test_hodge_dual_of_rotation(flat3):
    rot = form_field(1, flat3, {"1": "-x2", "2": "x1"})
    assert _verdict(HodgeField(rot, flat3), flat3) == "normal"


# --- tractor picture -----------------------------------------------------------------------


@pytest.mark.parametrize("name", ["sphere3", "s2xh2", "ppwave", "s2xs2"])
def test_normal_forms_give_parallel_tractors(gallery, name):
    entry = gallery[name]
    form = entry.forms[0][1]
    tf = _tractor(form, entry.spec)
    rng = np.random.default_rng(0)
    for x in sample_points(entry.spec, 3):
        cp = metric_at(entry.spec, x, 3)
        assert nc_derivative(tf, rng.normal(size=entry.spec.n), cp).norm() < 1e-9


def test_non_normal_form_gives_non_parallel_tractor(gallery):
    entry = gallery["s2xh2_scal-4"]
    tf = _tractor(entry.forms[0][1], entry.spec)
    x = sample_points(entry.spec, 1)[0]
    worst = max(nc_derivative(tf, e, metric_at(entry.spec, x, 3)).norm() for e in np.eye(4))
    assert worst > 1e-3


def test_integrability_of_normal_forms(gallery, flat3):
    rot = form_field(1, flat3, {"1": "-x2", "2": "x1"})
    assert max(integrability_residuals(rot, flat3, sample_points(flat3, 4)).max.values()) < 1e-10
    for name in ("ppwave", "s2xh2"):
        entry = gallery[name]
        rep = integrability_residuals(entry.forms[0][1], entry.spec, sample_points(entry.spec, 4))
        assert max(rep.max.values()) < 1e-8, name


# --- scaling ------------------------------------------------------------------------------


def test_scaling_detection_on_exponential_form(flat3):
    e = form_field(2, flat3, {"2,3": "exp(x1)"})
    rep = scaling_detect(e, flat3, sample_points(flat3, 4))
    assert rep.decomposable and rep.causal_type() == "spacelike"
    assert np.allclose(rep.A, [[1.0, 0.0, 0.0]] * 4)
    assert np.max(rep.dA_norm) < 1e-6
    assert np.max(rep.A_residual) < 1e-12


def test_scaling_flags_zeros_and_null_forms(gallery, flat3):
    rot = form_field(1, flat3, {"1": "-x2", "2": "x1"})
    rep = scaling_detect(rot, flat3, [[0.0, 0.0, 0.0], [0.3, 0.5, 0.2]])
    assert len(rep.flagged) == 1 and rep.A.shape == (1, 3)
    pp = gallery["ppwave"]
    rep = scaling_detect(pp.forms[0][1], pp.spec, sample_points(pp.spec, 3))
    assert rep.causal_type() == "null"
    with pytest.raises(ValueError):
        scaling_detect(form_field(0, flat3, {"": "1"}), flat3, [[0, 0, 0]])
