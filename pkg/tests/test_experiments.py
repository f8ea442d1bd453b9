import math

import numpy as np
import pytest

from fraclab.dimension import DimensionEstimate, HomogeneityReport
from fraclab.experiments import (KOCH_CODIM, VERDICT_MARGIN_FLOOR, CutoffSeries,
                                 _lens_area, cutoff_decay_experiment, density_verdict,
                                 hardy_reduction_experiment, membership_test,
                                 tube_exponent_fit)
from fraclab.geometry import (PlumpnessReport, ResolutionError, SampleConfig,
                              koch_prefractal)
from fraclab.scaling import power_scaling
from fraclab.sobolev import SobolevParams, indicator_field


def _dims(lo=0.99, hi=1.01, se=0.002, domain="disk"):
    mk = lambda q, v: DimensionEstimate(q, v, (0.01, 0.3), 0.99, (lo - 0.05, hi + 0.05),
                                        32, 128, domain=domain, stderr=se)
    return mk("assouad_codim_lower", lo), mk("assouad_codim_upper", hi)


def _plump(ok=True):
    return PlumpnessReport(kappa=0.05, passed=ok, worst_ratio=0.2 if ok else 0.01,
                           worst_witness=((0.0, 0.0), 0.1), n_centers=8, n_scales=4)


def _homog(stable=True):
    lbl = {1: 1.0, 4: 1.1, 16: 1.2, 64: 1.3 if stable else 9.0}
    return HomogeneityReport(sigma=1.0, L_estimate=max(lbl.values()), samples=[],
                             L_by_lambda=lbl, domain="disk")


class TestDensityVerdict:
    def test_dense_below_band(self, disk):
        v = density_verdict(disk, SobolevParams(0.3, 1.0), _dims())
        assert v.verdict == "dense"
        assert v.plump == "skipped" and v.homogeneous == "skipped"

    def test_not_dense_needs_plumpness(self, disk):
        with pytest.raises(ValueError):
            density_verdict(disk, SobolevParams(0.8, 2.0), _dims())
        v = density_verdict(disk, SobolevParams(0.8, 2.0), _dims(), _plump(True))
        assert v.verdict == "not_dense" and v.plump == "pass"
        v2 = density_verdict(disk, SobolevParams(0.8, 2.0), _dims(), _plump(False))
        assert v2.verdict == "inconclusive" and v2.plump == "fail"

    def test_open_case_p1_in_band(self, disk):
        v = density_verdict(disk, SobolevParams(0.999, 1.0), _dims())
        assert v.verdict == "open_case"

    def test_critical_dense_needs_homogeneity(self, disk):
        params = SobolevParams(0.4999, 2.0)
        with pytest.raises(ValueError):
            density_verdict(disk, params, _dims())
        v = density_verdict(disk, params, _dims(), homog_report=_homog(True))
        assert v.verdict == "dense_critical" and v.homogeneous == "pass"
        v2 = density_verdict(disk, params, _dims(), homog_report=_homog(False))
        assert v2.verdict == "inconclusive"

    def test_margin_floor(self, disk):
        v = density_verdict(disk, SobolevParams(0.3, 1.0), _dims(se=0.0001))
        assert v.margin == VERDICT_MARGIN_FLOOR
        v2 = density_verdict(disk, SobolevParams(0.3, 1.0), _dims(se=0.01))
        assert v2.margin == pytest.approx(0.04)

    def test_rejects_mismatched_inputs(self, disk):
        lo, hi = _dims()
        with pytest.raises(ValueError):
            density_verdict(disk, SobolevParams(0.3, 1.0), (hi, lo))
        lo2, hi2 = _dims(domain="square")
        with pytest.raises(ValueError):
            density_verdict(disk, SobolevParams(0.3, 1.0), (lo2, hi2))

    def test_as_dict_round_trips(self, disk):
        v = density_verdict(disk, SobolevParams(0.3, 1.0), _dims())
        d = v.as_dict()
        assert d["verdict"] == "dense" and d["domain"] == "disk"


def test_cutoff_series_validation():
    with pytest.raises(ValueError):
        CutoffSeries([8, 4], [1.0, 1.0], [0.1, 0.1], [0.1, 0.1], [1, 1], 1.0, 0.0,
                     1.0, 0.1, 0.3)
    with pytest.raises(ValueError):
        CutoffSeries([4, 8], [1.0, -1.0], [0.1, 0.1], [0.1, 0.1], [1, 1], 1.0, 0.0,
                     1.0, 0.1, 0.3)


def test_cutoff_decay_square(square, cfg):
    series = cutoff_decay_experiment(square, SobolevParams(0.3, 1.0), (4, 8, 16), cfg)
    assert series.n_grid == [4, 8, 16]
    # the envelope is calibrated at the first index
    assert series.tube_bound[0] == pytest.approx(series.seminorm_p[0])
    assert all(v >= 0 for v in series.seminorm_p)
    assert series.envelope_C > 0
    assert series.positive_floor == min(series.seminorm_p)


def test_cutoff_resolution_rule():
    kd = koch_prefractal(3)
    with pytest.raises(ResolutionError):
        cutoff_decay_experiment(kd, SobolevParams(0.3, 1.0), (8, 256),
                                SampleConfig(samples=1000))


def test_cutoff_needs_two_indices(square, cfg):
    with pytest.raises(ValueError):
        cutoff_decay_experiment(square, SobolevParams(0.3, 1.0), (8,), cfg)
    with pytest.raises(ValueError):
        cutoff_decay_experiment(square, SobolevParams(0.3, 1.0), (8, 8), cfg)


def test_tube_exponent_disk(disk, cfg_mid):
    est, meas = tube_exponent_fit(disk, cfg_mid)
    assert est.quantity == "tube_exponent"
    assert abs(est.value - 1.0) < 0.05
    assert est.fit_r2 > 0.99
    assert len(meas) == 12


def test_tube_exponent_respects_floor():
    kd = koch_prefractal(2)
    with pytest.raises(ResolutionError):
        tube_exponent_fit(kd, SampleConfig(samples=1000), r_min=1e-3)


class TestLensArea:
    def test_containment_and_disjoint(self):
        assert _lens_area(1.0, 2.0, np.array([0.0]))[0] == pytest.approx(math.pi)
        assert _lens_area(1.0, 2.0, np.array([0.5]))[0] == pytest.approx(math.pi)
        assert _lens_area(1.0, 2.0, np.array([3.5]))[0] == 0.0

    def test_partial_overlap_monte_carlo(self):
        r1, r2, d = 1.0, 1.5, 2.0
        got = float(_lens_area(r1, r2, np.array([d]))[0])
        g = np.random.default_rng(0)
        pts = g.random((200_000, 2)) * 2 * r1 - r1
        in1 = (pts**2).sum(1) <= r1 * r1
        in2 = ((pts[:, 0] - d) ** 2 + pts[:, 1] ** 2) <= r2 * r2
        mc = 4.0 * r1 * r1 * float((in1 & in2).mean())
        assert abs(got - mc) < 0.01

    def test_equal_circles_half_overlap(self):
        # standard closed form at d = r: 2r^2 (pi/3 - sqrt(3)/4... checked by MC above;
        # here just symmetry in swapping the roles
        a = float(_lens_area(1.2, 0.8, np.array([1.0]))[0])
        b = float(_lens_area(0.8, 1.2, np.array([1.0]))[0])
        assert a == pytest.approx(b, rel=1e-12)


def test_reduction_disk_oracle(disk, cfg_mid):
    # u = 1 on the disk, phi = t^{1/2}: lhs = integral of d^{-1/2} = 8 pi/3,
    # I1 = I3 = 0 (constant field, localization balls never reach the far
    # component), witness c = lhs / ||u||_1^1 = 8/3
    rep = hardy_reduction_experiment(disk, indicator_field(), power_scaling(0.5, claimed_eta=0.5),
                                     R_loc=2.0, params=SobolevParams(0.5, 1.0), cfg=cfg_mid)
    assert rep.I1 == 0.0
    assert rep.I3 == 0.0
    assert rep.lhs == pytest.approx(8 * math.pi / 3, rel=0.03)
    assert rep.c_witness == pytest.approx(8.0 / 3.0, rel=0.03)
    assert rep.inclusion_ok
    assert rep.I2 > 0 and math.isfinite(rep.I2_tail_bound)
    assert rep.norm_p == pytest.approx(math.pi, rel=0.02)
    assert rep.eta0 == 0.5 and rep.M == 2.0


def test_reduction_negative_eta_selects_eta0(disk, cfg):
    rep = hardy_reduction_experiment(disk, indicator_field(), power_scaling(0.5),
                                     R_loc=2.0, params=SobolevParams(0.5, 1.0),
                                     cfg=cfg, eta=-0.5)
    assert rep.eta0 == 0.5  # (d - dim boundary)/2 with the planar hint


def test_membership_disk(disk, cfg_mid):
    lik = membership_test(indicator_field(), disk, SobolevParams(0.5, 1.0), cfg_mid)
    assert lik["in_W0"] == "likely"
    unl = membership_test(indicator_field(), disk, SobolevParams(0.6, 2.0), cfg_mid)
    assert unl["in_W0"] == "unlikely"


def test_koch_codim_constant():
    assert KOCH_CODIM == pytest.approx(2.0 - math.log(4) / math.log(3), abs=1e-15)
    assert 0.738 < KOCH_CODIM < 0.7382
