"""Visibility formulas, the complementarity identity, and fringe fitting."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twophoton.errors import InvalidParameterError, UnderDeterminedFitError
from twophoton.optics import SpatialGrid
from twophoton.patterns import (
    coincidence_pattern,
    excess_closed_form,
    marginal_pattern,
    single_photon_pattern,
    slit_envelope,
)
from twophoton.visibility import (
    VisibilitySet,
    check_complementarity,
    fit_fringe_visibility,
    fit_joint_visibility,
    v12_from_v1,
    visibilities_from_psi,
)

PERIOD = 58e-6


def fringe_grid(periods=6, n=600):
    half = periods * PERIOD / 2
    return SpatialGrid(-half, half, n)


class TestClosedForms:
    def test_known_point(self):
        v = visibilities_from_psi(0.6)
        assert v.v1 == pytest.approx(0.6)
        assert v.v1m == pytest.approx(1.2 / 1.36)
        assert v.v12 == pytest.approx(0.64 / 1.36)

    def test_separable_and_maximally_entangled_limits(self):
        sep = visibilities_from_psi(1.0)
        assert sep.v1m == pytest.approx(1.0) and sep.v12 == pytest.approx(0.0)
        ent = visibilities_from_psi(0.0)
        assert ent.v1m == pytest.approx(0.0) and ent.v12 == pytest.approx(1.0)

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            visibilities_from_psi(1.5)
        with pytest.raises(InvalidParameterError):
            v12_from_v1(-1.2)

    @given(st.floats(-1.0, 1.0))
    def test_complementarity_identity(self, psi):
        v = visibilities_from_psi(psi)
        residual, ok = check_complementarity(v)
        assert ok
        assert residual < 1e-12

    @given(st.floats(-1.0, 1.0))
    def test_v12_from_v1_consistent(self, psi):
        v = visibilities_from_psi(psi)
        assert v12_from_v1(v.v1) == pytest.approx(v.v12, abs=1e-12)


class TestFringeFit:
    def test_recovers_clean_fringe(self):
        grid = fringe_grid()
        p = single_photon_pattern(0.73, PERIOD, grid)
        fit = fit_fringe_visibility(p, PERIOD)
        assert fit.visibility == pytest.approx(0.73, abs=1e-9)
        assert fit.phase == pytest.approx(0.0, abs=1e-9)

    def test_csv_precision_roundtrip(self):
        # values quantized as in the CSV writers re-fit to the same visibility
        grid = fringe_grid()
        p = single_photon_pattern(0.5, PERIOD, grid)
        from twophoton.patterns import FringePattern1D

        quantized = FringePattern1D(
            grid, np.array([float(f"{v:.9e}") for v in p.values]), PERIOD
        )
        fit0 = fit_fringe_visibility(p, PERIOD)
        fit1 = fit_fringe_visibility(quantized, PERIOD)
        assert abs(fit0.visibility - fit1.visibility) < 1e-8

    def test_envelope_divided_out(self):
        grid = fringe_grid(periods=30, n=3000)
        p = single_photon_pattern(0.6, PERIOD, grid)
        env = slit_envelope(0.35e-3, 812e-9, 50e-3, grid)
        from twophoton.patterns import FringePattern1D

        modulated = FringePattern1D(grid, p.values * env, PERIOD)
        fit = fit_fringe_visibility(modulated, PERIOD, envelope=env)
        assert fit.visibility == pytest.approx(0.6, abs=1e-9)

    def test_noisy_fringe_within_tolerance(self):
        rng = np.random.default_rng(3)
        grid = fringe_grid(periods=10, n=1000)
        p = single_photon_pattern(0.4, PERIOD, grid)
        from twophoton.patterns import FringePattern1D

        noisy = FringePattern1D(grid, p.values + rng.normal(0, 0.01, grid.n), PERIOD)
        fit = fit_fringe_visibility(noisy, PERIOD)
        assert fit.visibility == pytest.approx(0.4, abs=0.01)

    def test_too_short_span(self):
        grid = SpatialGrid(-PERIOD / 2, PERIOD / 2, 50)
        p = single_photon_pattern(0.4, PERIOD, grid)
        with pytest.raises(UnderDeterminedFitError):
            fit_fringe_visibility(p, PERIOD)

    def test_negative_amplitude_absorbed_into_phase(self):
        grid = fringe_grid()
        from twophoton.patterns import FringePattern1D

        x = grid.positions
        v = 1.0 - 0.5 * np.cos(2 * np.pi * x / PERIOD)
        fit = fit_fringe_visibility(FringePattern1D(grid, v, PERIOD), PERIOD)
        assert fit.visibility == pytest.approx(0.5, abs=1e-9)
        assert abs(fit.phase) == pytest.approx(np.pi, abs=1e-9)


class TestJointFit:
    @pytest.mark.parametrize("v12", [0.05, 0.47, 0.95])
    def test_recovers_closed_form(self, v12):
        grid = fringe_grid(periods=8, n=320)
        excess = excess_closed_form(v12, PERIOD, grid)
        fit = fit_joint_visibility(excess, PERIOD)
        assert fit.v12 == pytest.approx(v12, abs=1e-9)
        assert fit.amp_sum > 0 >= fit.amp_diff

    def test_recovers_from_coincidence_route(self):
        psi = 0.6
        grid = fringe_grid(periods=8, n=640)
        g2 = coincidence_pattern(psi, PERIOD, grid)
        from twophoton.patterns import excess_pattern

        excess = excess_pattern(g2, marginal_pattern(g2), PERIOD)
        fit = fit_joint_visibility(excess, PERIOD)
        v12 = (1 - psi**2) / (1 + psi**2)
        # partial-period edge cells limit agreement at finite n
        assert fit.v12 == pytest.approx(v12, abs=5e-3)

    def test_mask_excludes_cells(self):
        grid = fringe_grid(periods=8, n=320)
        excess = excess_closed_form(0.5, PERIOD, grid)
        # corrupt a band and mask it out: fit should not notice
        vals = excess.values.copy()
        idx = np.arange(grid.n)
        band = np.abs(idx[:, None] - idx[None, :]) <= 2
        vals[band] = 99.0
        from twophoton.patterns import JointPattern2D

        corrupted = JointPattern2D(grid, vals, "excess", period=PERIOD)
        fit = fit_joint_visibility(corrupted, PERIOD, mask=~band)
        assert fit.v12 == pytest.approx(0.5, abs=1e-9)

    def test_underdetermined(self):
        import warnings

        from twophoton.errors import AliasingWarning

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AliasingWarning)
            grid = SpatialGrid(-PERIOD / 2, PERIOD / 2, 16)
            excess = excess_closed_form(0.5, PERIOD, grid)
        with pytest.raises(UnderDeterminedFitError):
            fit_joint_visibility(excess, PERIOD)


@settings(max_examples=30, deadline=None)
@given(psi=st.floats(0.01, 0.99))
def test_fit_roundtrip_along_the_circle(psi):
    """Fits of exact patterns land back on the complementarity circle."""
    grid = fringe_grid(periods=4, n=240)
    v = visibilities_from_psi(psi)
    excess = excess_closed_form(v.v12, PERIOD, grid)
    jfit = fit_joint_visibility(excess, PERIOD)
    marg = single_photon_pattern(v.v1m, PERIOD, fringe_grid())
    mfit = fit_fringe_visibility(marg, PERIOD)
    assert mfit.visibility**2 + jfit.v12**2 == pytest.approx(1.0, abs=1e-7)
