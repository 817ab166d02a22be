"""Reconstruction pipeline: backprojection stage, one-shot inversion on a
non-trapping model and the iterative correction bookkeeping."""

import numpy as np
import pytest

from geoxray import invert as iv
from geoxray import surface as sf
from geoxray import transform as tr


def disk_patch(R=1.2, n_grid=48):
    return sf.SurfaceModel("DiskPatch", R, n_grid=n_grid)


def gaussian_phantom(model, cx=0.0, cy=0.15, w=0.15):
    f = model.zero_field()
    X, Y = f.cell_centers()
    f.values = np.where(f.mask,
                        np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w * w)),
                        0.0)
    return f


def constant_full_data(n_pts=16, n_angles=64, value=1.0, n_comp=1):
    ang = tr.full_angles(n_angles)
    vals = np.full((n_comp, n_pts, n_angles), value)
    return tr.FanBeamData(vals, np.zeros_like(vals, dtype=bool), ang,
                          "full", np.pi)


class TestInteriorMask:
    def test_zero_collar_is_identity(self):
        m = disk_patch()
        assert np.array_equal(iv.interior_mask(m, collar=0), m.mask)

    def test_erosion_shrinks_and_nests(self):
        m = disk_patch()
        m1 = iv.interior_mask(m, collar=1)
        m2 = iv.interior_mask(m, collar=2)
        assert m1.sum() < m.mask.sum()
        assert m2.sum() < m1.sum()
        assert not np.any(m2 & ~m1)
        assert not np.any(m1 & ~m.mask)

    def test_eroded_cells_have_full_neighborhoods(self):
        m = disk_patch()
        e = iv.interior_mask(m, collar=1)
        iy, ix = np.nonzero(e)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            assert np.all(m.mask[iy + dy, ix + dx])


class TestRelativeErrors:
    def test_exact_match_is_zero(self):
        m = disk_patch()
        f = gaussian_phantom(m)
        l2, sup = iv.relative_errors(m, f, f)
        assert l2 == 0.0 and sup == 0.0

    def test_constant_offset_sup(self):
        m = disk_patch()
        f = gaussian_phantom(m)
        g = f.copy()
        g.values = np.where(f.mask, f.values + 0.05, 0.0)
        _, sup = iv.relative_errors(m, g, f)
        valid = iv.interior_mask(m)
        assert sup == pytest.approx(0.05 / np.max(np.abs(f.values[valid])))

    def test_scaled_field_l2(self):
        m = disk_patch()
        f = gaussian_phantom(m)
        g = f.copy()
        g.values = 1.1 * f.values
        l2, sup = iv.relative_errors(m, g, f)
        assert l2 == pytest.approx(0.1, abs=1e-12)
        assert sup == pytest.approx(0.1, abs=1e-12)

    def test_custom_valid_mask(self):
        m = disk_patch()
        f = gaussian_phantom(m)
        g = f.copy()
        bad = np.argwhere(iv.interior_mask(m))[0]
        g.values[bad[0], bad[1]] += 10.0
        valid = iv.interior_mask(m).copy()
        valid[bad[0], bad[1]] = False
        l2, _ = iv.relative_errors(m, g, f, valid)
        assert l2 == 0.0


class TestBackprojection:
    def test_requires_full_circle_data(self):
        m = disk_patch(n_grid=32)
        ang = tr.influx_angles(16)
        vals = np.zeros((1, 8, 16))
        d = tr.FanBeamData(vals, np.zeros_like(vals, dtype=bool), ang,
                           "influx")
        with pytest.raises(ValueError):
            iv.backproject_and_curl(m, d)

    def test_constant_data_gives_zero(self):
        # a fiber-constant w has vanishing cos/sin moments, so the whole
        # stage must return the zero field
        m = disk_patch(n_grid=32)
        w = constant_full_data(value=2.5)
        out = iv.backproject_and_curl(m, w, n_dirs=64)
        assert np.max(np.abs(out.values)) < 1e-12


class TestOneShotInversion:
    def test_recovers_phantom_without_trapping(self):
        # constant curvature and no trapped rays: the error operator is
        # exactly zero, so a single application reconstructs the phantom up
        # to discretization error
        m = disk_patch(R=1.2, n_grid=48)
        f = gaussian_phantom(m)
        data = tr.forward_I0(m, f, n_pts=100, n_angles=128)
        rec = iv.one_shot_invert(m, data, n_full=256, n_dirs=256)
        l2, sup = iv.relative_errors(m, rec, f)
        assert l2 < 0.06
        assert sup < 0.10

    def test_orientation_sign_pinned(self):
        # with the opposite orientation the stage returns -f: the positive
        # correlation with the phantom pins the sign convention
        m = disk_patch(R=1.2, n_grid=48)
        f = gaussian_phantom(m)
        data = tr.forward_I0(m, f, n_pts=100, n_angles=128)
        rec = iv.one_shot_invert(m, data, n_full=256, n_dirs=256)
        valid = iv.interior_mask(m)
        corr = np.sum(rec.values[valid] * f.values[valid])
        assert corr > 0.9 * np.sum(f.values[valid] ** 2)


class TestNeumannIteration:
    def test_zero_iterations_equals_one_shot(self):
        m = disk_patch(R=1.2, n_grid=32)
        f = gaussian_phantom(m, w=0.2)
        data = tr.forward_I0(m, f, n_pts=60, n_angles=64)
        one = iv.one_shot_invert(m, data, n_full=128, n_dirs=128)
        rep = iv.neumann_invert(m, data, iters=0, truth=f, n_full=128,
                                n_dirs=128)
        assert np.array_equal(rep.reconstruction.values, one.values)
        assert rep.iterations == 0
        assert len(rep.errors_l2) == 1 and len(rep.errors_sup) == 1
        assert not rep.diverged
        assert rep.runtime > 0.0

    def test_iteration_is_stable_when_error_operator_vanishes(self):
        # on the non-trapping constant-curvature model the correction term
        # is pure discretization noise; one iteration must not blow up
        m = disk_patch(R=1.2, n_grid=32)
        f = gaussian_phantom(m, w=0.2)
        data = tr.forward_I0(m, f, n_pts=60, n_angles=64)
        rep = iv.neumann_invert(m, data, iters=1, truth=f, n_full=128,
                                n_dirs=128)
        assert len(rep.errors_l2) == 2
        assert rep.errors_l2[1] < rep.errors_l2[0] + 0.02
        assert not rep.diverged

    def test_without_truth_no_error_tracking(self):
        m = disk_patch(R=1.2, n_grid=32)
        f = gaussian_phantom(m, w=0.2)
        data = tr.forward_I0(m, f, n_pts=40, n_angles=64)
        rep = iv.neumann_invert(m, data, iters=0, n_full=128, n_dirs=128)
        assert rep.errors_l2 == [] and rep.errors_sup == []
