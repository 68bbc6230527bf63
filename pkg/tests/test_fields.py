import math

import numpy as np
import pytest

from skewbif.dynamics import BaseQuadratic, SkewParams
from skewbif.errors import InvalidFiberError
from skewbif.fields import (boundary_raster, bz_mask, classify_CDM, ddc,
                            decomposition_check, dilate, field_Gz, field_Lv,
                            support_mask, total_mass)
from skewbif.lyapunov import LOG2
from skewbif.slices import ClassMask, ComplexLineSlice, ScalarField

from oracles import green_1d, mandelbrot_oracle_mask


def product_slice(res=64, center=-0.5, hw=2.0):
    return ComplexLineSlice(origin=(0, 0, 0), direction=(0, 0, 1),
                            center=center, half_width=hw, resolution=(res, res))


def mandel_slice(res=64):
    return ComplexLineSlice(origin=(0, 0, 0), direction=(0, 1, 0),
                            center=-0.5, half_width=2.0, resolution=(res, res))


class TestSliceGeometry:
    def test_pixel_formula(self):
        slc = mandel_slice(8)
        s = slc.s_grid()
        # first pixel center per the mapping convention
        sx = -0.5 + ((0 + 0.5) / 8 - 0.5) * 4.0
        sy = 0.0 + ((0 + 0.5) / 8 - 0.5) * 4.0
        assert s[0, 0] == pytest.approx(complex(sx, sy))
        i, j = slc.pixel_of(s[3, 5])
        assert (i, j) == (5, 3)

    def test_json_roundtrip(self):
        slc = mandel_slice(16)
        assert ComplexLineSlice.from_json(slc.to_json()) == slc

    def test_invalid(self):
        with pytest.raises(ValueError):
            ComplexLineSlice((0, 0, 0), (0, 0, 0), 0, 1.0, (8, 8))
        with pytest.raises(ValueError):
            ComplexLineSlice((0, 0, 0), (0, 0, 1), 0, 1.0, (1, 8))


class TestFieldLv:
    def test_product_matches_1d_green(self, base0):
        slc = product_slice(48)
        fld = field_Lv(slc, base0, estimator=("measure", 64, 1), budget=700)
        s = slc.s_grid()
        for jj in range(0, 48, 7):
            for ii in range(0, 48, 7):
                target = LOG2 + green_1d(s[jj, ii], budget=700)
                assert fld.values[jj, ii] == pytest.approx(target, abs=1e-6)

    def test_constant_inside_C(self, base0):
        slc = ComplexLineSlice((0, 0, 0), (1, 1, 1), 0, 0.05, (16, 16))
        fld = field_Lv(slc, base0, estimator=("measure", 64, 1), budget=500)
        assert np.allclose(fld.values, LOG2, atol=1e-9)

    def test_mandelbrot_zero_set(self, base0):
        slc = mandel_slice(96)
        fld = field_Lv(slc, base0, estimator=("measure", 64, 1), budget=500)
        oracle = mandelbrot_oracle_mask(slc.s_grid(), budget=500)
        excess = fld.values - LOG2
        # interior of the oracle set -> zero excess; far exterior -> positive
        assert np.all(excess[oracle] < 1e-6)
        far = excess[~oracle & (np.abs(slc.s_grid() + 0.5) > 1.7)]
        assert np.all(far > 1e-3)


class TestDdc:
    def test_constant_is_zero(self, base0):
        slc = product_slice(32)
        fld = ScalarField(slc, np.full((32, 32), 1.234), quantity="t")
        assert np.all(ddc(fld).values == 0)

    def test_log_singularity_mass(self):
        slc = ComplexLineSlice((0, 0, 0), (0, 0, 1), 0.013 + 0.007j, 1.0,
                               (128, 128))
        s = slc.s_grid()
        fld = ScalarField(slc, np.log(np.abs(s)), quantity="t")
        dens = ddc(fld)
        assert total_mass(dens) == pytest.approx(1.0, abs=0.05)
        peak = np.unravel_index(np.argmax(dens.values), dens.values.shape)
        i0, j0 = slc.pixel_of(0j)
        assert abs(peak[1] - i0) <= 1 and abs(peak[0] - j0) <= 1

    def test_mandelbrot_mass_matches_1d(self, base0):
        slc = mandel_slice(128)
        fld = field_Lv(slc, base0, estimator=("measure", 128, 1), budget=600)
        mass = total_mass(ddc(fld))
        s = slc.s_grid()
        g1 = np.vectorize(lambda c: green_1d(c, budget=600))(s)
        oracle_mass = total_mass(ddc(ScalarField(slc, g1, quantity="o")))
        assert abs(mass - oracle_mass) <= 0.1 * abs(oracle_mass)

    def test_support_near_oracle_boundary(self, base0):
        # the raster mask cannot see measure-zero filaments, so the oracle
        # boundary is the escape-time proxy: slowly escaping or bounded
        # pixels of the independent recursion
        slc = mandel_slice(97)
        fld = field_Lv(slc, base0, estimator=("measure", 128, 1), budget=500)
        dens = ddc(fld)
        supp = support_mask(dens)
        s = slc.s_grid()
        lam = np.asarray(s, dtype=complex)
        L = lam.copy()
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(8):
                L = np.where(np.abs(L) > 1e100, np.inf, L * L + lam)
            slow = ~(np.abs(L) > 4.0)
        band = dilate(slow, 3)
        assert supp.sum() > 0
        stray = supp & ~band
        assert stray.sum() <= 0.01 * supp.sum()


class TestBzMask:
    def test_matches_oracle_exactly(self, base0):
        slc = mandel_slice(256)
        mask = bz_mask(slc, base0, 1.0, budget=300)
        oracle = mandelbrot_oracle_mask(slc.s_grid(), budget=300)
        assert np.array_equal(mask.labels > 0, oracle)

    def test_fixed_fiber_product_family(self, base0):
        # over z0 = 0 the product family iterates w^2 + s
        slc = product_slice(128)
        mask = bz_mask(slc, base0, 0.0, budget=300)
        oracle = mandelbrot_oracle_mask(slc.s_grid(), budget=300)
        # w_1 = s, Lambda_0 = s: identical recursions
        assert np.array_equal(mask.labels > 0, oracle)

    def test_far_outside_all_false(self, base0):
        slc = ComplexLineSlice((0, 0, 200.0), (0, 1, 0), 0, 1.0, (16, 16))
        mask = bz_mask(slc, base0, 1.0, budget=400)
        assert not (mask.labels > 0).any()

    def test_invalid_fiber(self, base0):
        with pytest.raises(InvalidFiberError):
            bz_mask(mandel_slice(8), base0, 3.0, budget=100)

    def test_budget_monotonicity(self, base0):
        slc = mandel_slice(64)
        m1 = bz_mask(slc, base0, 1.0, budget=150).labels > 0
        m2 = bz_mask(slc, base0, 1.0, budget=600).labels > 0
        # raising the budget can only turn bounded into escaped
        assert np.all(m2 <= m1)

    def test_semicontinuity_in_z(self, base0):
        slc = mandel_slice(96)
        z = np.exp(0.7j)
        m1 = bz_mask(slc, base0, z, budget=300).labels > 0
        m2 = bz_mask(slc, base0, z * np.exp(1e-3j), budget=300).labels > 0
        leak = (m2 & ~dilate(m1, 1)).sum()
        assert leak < 0.005 * max(m1.sum(), 1)

    def test_boundary_raster(self, base0):
        slc = mandel_slice(64)
        mask = bz_mask(slc, base0, 1.0, budget=300)
        edge = boundary_raster(mask)
        inner = mask.labels > 0
        assert edge.sum() > 0
        assert np.all(inner[edge])


class TestClassify:
    def test_C(self, base0, julia0):
        assert classify_CDM(SkewParams(0, 0, 0, base0), julia0).label == "C"

    def test_D(self, base0, julia0):
        assert classify_CDM(SkewParams(0, 0, 10, base0), julia0).label == "D"

    def test_M_jonsson(self, base_cheb, julia_cheb):
        t = 100.0
        p = SkewParams(-t, t, 2 * t, base_cheb)
        res = classify_CDM(p, julia_cheb)
        assert res.label == "M"
        assert res.bounded == 2     # exactly the fibers over -1 and 2

    def test_C_pixels_have_log2_field(self, base0, julia0):
        slc = ComplexLineSlice((0, 0, 0), (0, 1, 0), 0, 0.08, (12, 12))
        fld = field_Lv(slc, base0, estimator=("measure", 128, 2), budget=800)
        s = slc.s_grid()
        for jj in range(0, 12, 3):
            for ii in range(0, 12, 3):
                a, b, c = slc.params_at(s[jj, ii])
                lab = classify_CDM(SkewParams(a, b, c, base0), julia0).label
                if lab == "C":
                    assert fld.values[jj, ii] == pytest.approx(LOG2, abs=1e-6)


class TestDecomposition:
    def test_single_fiber_linearity(self, base0):
        slc = mandel_slice(48)
        rep = decomposition_check(slc, base0, [1.0], budget=300)
        assert rep.l1_distance < 1e-12

    def test_mandelbrot_average(self, base0, mu0):
        slc = mandel_slice(96)
        fibers = mu0.points[:48]
        rep = decomposition_check(slc, base0, fibers, budget=400)
        assert rep.l1_distance < 1e-10
        assert rep.mass_avg_then_ddc == pytest.approx(rep.mass_ddc_then_avg,
                                                      rel=1e-9)

    def test_support_mass_hugs_bif_raster(self, base0):
        # sub-pixel decorations of the boundary carry real current mass the
        # raster mask cannot see, so the comparison is mass-weighted: the
        # median of |ddc| mass over the support sits within a few pixels of
        # the rasterized Bif_z
        from scipy import ndimage
        slc = mandel_slice(97)
        fld = field_Lv(slc, base0, estimator=("measure", 128, 1), budget=500)
        dens = ddc(fld)
        supp = support_mask(dens)
        edge = boundary_raster(bz_mask(slc, base0, 1.0, budget=500))
        dist = ndimage.distance_transform_edt(~edge)
        w = np.abs(dens.values)[supp]
        ds = dist[supp]
        order = np.argsort(ds)
        cum = np.cumsum(w[order]) / w.sum()
        med = ds[order][np.searchsorted(cum, 0.5)]
        assert med <= 3.5


class TestPlurisubharmonicityProxy:
    def test_smooth_windows_nonnegative(self, base0):
        # where the field is smooth the discrete Laplacian is nonnegative up
        # to strictly the arithmetic noise floor
        for slc in (
            ComplexLineSlice((0, 0, 0), (1, 1, 1), 0, 0.05, (33, 33)),
            ComplexLineSlice((0, 0, 6.0), (0, 1, 0), 0, 0.5, (33, 33)),
        ):
            fld = field_Lv(slc, base0, estimator=("measure", 128, 1),
                           budget=600)
            dens = ddc(fld)
            assert dens.values.min() >= -max(dens.noise_floor, 1e-6)

    def test_fractal_window_negative_mass_is_discretization(self, base0):
        # near sub-pixel boundary decorations the five-point stencil of the
        # (genuinely positive) current produces negative readings; they stay
        # a small fraction of the positive mass
        slc = mandel_slice(97)
        fld = field_Lv(slc, base0, estimator=("measure", 128, 1), budget=600)
        dens = ddc(fld)
        neg = -dens.values[dens.values < 0].sum()
        pos = dens.values[dens.values > 0].sum()
        assert neg <= 0.05 * pos


class TestJonssonDirectionDecomposition:
    def test_support_bulk_inside_bif_union(self, base_cheb):
        # ray through the mixed-type example family: the one-sided inclusion
        # of the current's support in the union of fiber bifurcation rasters
        # holds for the mass bulk; fibers with sub-pixel bounded sets are
        # invisible to the union and carry the tail
        from scipy import ndimage

        from skewbif.basejulia import sample_julia
        slc = ComplexLineSlice((0, 0, 0), (-1.0, 1.0, 2.0), 0j, 3.0, (97, 97))
        jul = sample_julia(base_cheb, 64, seed=2)
        fibers = jul.points[:48]
        avg = np.zeros((97, 97))
        union = np.zeros((97, 97), dtype=bool)
        for z0 in fibers:
            avg += field_Gz(slc, base_cheb, z0, budget=500).values / len(fibers)
            union |= boundary_raster(bz_mask(slc, base_cheb, z0, budget=500))
        dens = ddc(ScalarField(slc, avg, quantity="avgG"))
        supp = support_mask(dens)
        assert supp.sum() > 0 and union.sum() > 0
        dist = ndimage.distance_transform_edt(~union)
        w = np.abs(dens.values)[supp]
        ds = dist[supp]
        order = np.argsort(ds)
        cum = np.cumsum(w[order]) / w.sum()
        med = ds[order][np.searchsorted(cum, 0.5)]
        assert med <= 2.0
        # the heaviest support pixels sit right on the union
        top = np.argsort(w)[::-1][:10]
        assert np.all(ds[top] <= 2.0)


class TestCdmMask:
    def test_grid_agrees_with_pointwise(self, base0, julia0):
        from skewbif.dynamics import SkewParams
        from skewbif.fields import cdm_mask
        slc = ComplexLineSlice((0, 0, 0), (0, 0, 1), -0.2, 1.2, (17, 17))
        mask = cdm_mask(slc, base0, julia0, budget=600)
        inv = {v: k for k, v in ClassMask.CODES.items() if isinstance(k, str)}
        s = slc.s_grid()
        for jj in range(0, 17, 4):
            for ii in range(0, 17, 4):
                a, b, c = slc.params_at(s[jj, ii])
                want = classify_CDM(SkewParams(a, b, c, base0), julia0,
                                    budget=600).label
                assert inv[int(mask.labels[jj, ii])] == want

    def test_jonsson_ray_contains_M(self, base_cheb, julia_cheb):
        from skewbif.fields import cdm_mask
        # along the mixed-type ray every parameter keeps the two pinned
        # fibers bounded while the rest escape once the forcing is large
        slc = ComplexLineSlice((0, 0, 0), (-100.0, 100.0, 200.0),
                               1.0 + 0j, 0.5, (9, 9))
        mask = cdm_mask(slc, base_cheb, julia_cheb, budget=800)
        assert np.all(mask.labels == ClassMask.CODES["M"])

    def test_labels_cover_grid(self, base0, julia0):
        from skewbif.fields import cdm_mask
        slc = ComplexLineSlice((0, 0, 0), (0, 0, 1), -0.2, 1.2, (9, 9))
        mask = cdm_mask(slc, base0, julia0, budget=400)
        valid = {v for k, v in ClassMask.CODES.items() if isinstance(k, str)}
        assert set(np.unique(mask.labels)) <= valid
