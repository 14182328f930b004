import numpy as np
import pytest

from clips import box_clip, textured_clip, two_squares_clip
from patchsynth.patches import PatchSpec
from patchsynth.pipelines import CueMask, PipelineConfig, analogies, generate, inpaint, retarget
from patchsynth.pyramid import ScaleFactors
from patchsynth.video import psnr

FAST = dict(voxel_threshold=1)  # small patches, one EM pass per scale


class TestConfig:
    def test_defaults_follow_production_settings(self):
        cfg = PipelineConfig()
        assert cfg.factors == ScaleFactors.of(0.82, 0.87)
        assert (cfg.min_t, cfg.min_s) == (3, 15)
        assert cfg.spec_large == PatchSpec(3, 7, 7)
        assert cfg.spec_small == PatchSpec(3, 5, 5)
        assert (cfg.em_iters_large, cfg.em_iters_small) == (5, 1)
        assert cfg.voxel_threshold == 3_000_000
        assert cfg.noise_std == 3.0
        assert cfg.temporal_shrink == 0.9

    def test_validation(self):
        with pytest.raises(ValueError):
            PipelineConfig(voxel_threshold=0)
        with pytest.raises(ValueError):
            PipelineConfig(temporal_shrink=0.0)
        with pytest.raises(ValueError):
            PipelineConfig(noise_std=-1.0)
        with pytest.raises(ValueError):
            PipelineConfig(min_s=5)  # patch (3,7,7) would not fit the coarsest level

    def test_analogies_preset(self):
        cfg = PipelineConfig.for_analogies()
        assert cfg.factors == ScaleFactors.of(0.9, 0.9)
        assert (cfg.min_t, cfg.min_s) == (3, 20)
        assert cfg.spec_large == PatchSpec(3, 5, 5)
        assert cfg.em_iters_large == 1
        assert cfg.alpha == 1.0

    def test_sketch_preset(self):
        cfg = PipelineConfig.for_sketch()
        assert cfg.factors == ScaleFactors.of(0.78, 0.78)
        assert (cfg.min_t, cfg.min_s) == (5, 35)
        assert cfg.em_iters_large == 3

    def test_voxel_threshold_switches_spec_and_em(self):
        from patchsynth.pipelines import _level_cfg

        cfg = PipelineConfig(voxel_threshold=10_000)
        big = _level_cfg(cfg, (13, 72, 128), seed=0, alpha=None)
        assert big.spec == cfg.spec_small and big.em_iters == cfg.em_iters_small
        small = _level_cfg(cfg, (3, 15, 15), seed=0, alpha=None)
        assert small.spec == cfg.spec_large and small.em_iters == cfg.em_iters_large


class TestGenerate:
    def test_degenerate_noise_is_fixed_point(self):
        x = textured_clip(8, 32, 48, seed=1)
        cfg = PipelineConfig(noise_std=0.0, temporal_shrink=1.0, **FAST)
        y = generate(x, cfg, seed=0)
        assert y.shape == x.shape
        assert psnr(y, x) >= 35.0

    def test_temporal_shrink_contract(self):
        x = textured_clip(10, 24, 32, seed=2)
        cfg = PipelineConfig(temporal_shrink=0.9, **FAST)
        y = generate(x, cfg, seed=1)
        assert y.shape == (9, 24, 32, 3)  # round(0.9 * 10)

    def test_same_seed_bit_identical(self):
        x = textured_clip(8, 24, 32, seed=3)
        cfg = PipelineConfig(**FAST)
        assert np.array_equal(generate(x, cfg, seed=4), generate(x, cfg, seed=4))

    def test_different_seeds_differ(self):
        x = textured_clip(8, 24, 32, seed=4)
        cfg = PipelineConfig(**FAST)
        assert not np.array_equal(generate(x, cfg, seed=0), generate(x, cfg, seed=1))

    def test_output_within_input_range(self):
        x = textured_clip(8, 24, 32, seed=5)
        y = generate(x, PipelineConfig(**FAST), seed=2)
        assert y.min() >= x.min() - 1e-6 and y.max() <= x.max() + 1e-6

    def test_out_shape_override(self):
        x = textured_clip(8, 24, 32, seed=6)
        cfg = PipelineConfig(out_shape=(8, 24, 48), temporal_shrink=1.0, **FAST)
        assert generate(x, cfg, seed=0).shape == (8, 24, 48, 3)

    def test_rejects_too_small_input(self):
        x = textured_clip(2, 24, 32, seed=7)
        with pytest.raises(ValueError):
            generate(x, PipelineConfig(**FAST), seed=0)


class TestRetarget:
    def test_identity_target_high_psnr(self):
        x = textured_clip(8, 32, 48, seed=8)
        y = retarget(x, (8, 32, 48), PipelineConfig(**FAST))
        assert psnr(y, x) >= 35.0

    def test_shape_contract_exact(self):
        x = textured_clip(8, 32, 48, seed=9)
        for target in [(8, 32, 29), (6, 24, 48), (8, 40, 56)]:
            assert retarget(x, target, PipelineConfig(**FAST)).shape == target + (3,)

    def test_objects_repack_not_squash(self):
        x = two_squares_clip()
        y = retarget(x, (8, 32, 29), PipelineConfig(alpha=1.0, seed=1))  # 60% width

        def components(mask):
            lab = np.zeros(mask.shape, dtype=int)
            cur = 0
            for sy, sx in zip(*np.nonzero(mask)):
                if lab[sy, sx]:
                    continue
                cur += 1
                stack = [(sy, sx)]
                lab[sy, sx] = cur
                while stack:
                    yy, xx = stack.pop()
                    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        ny, nx = yy + dy, xx + dx
                        if (
                            0 <= ny < mask.shape[0]
                            and 0 <= nx < mask.shape[1]
                            and mask[ny, nx]
                            and not lab[ny, nx]
                        ):
                            lab[ny, nx] = cur
                            stack.append((ny, nx))
            widths = []
            for c in range(1, cur + 1):
                ys, xs = np.nonzero(lab == c)
                if len(ys) >= 8:
                    widths.append(int(xs.max() - xs.min() + 1))
            return widths

        luma = np.array([0.299, 0.587, 0.114])
        for f in range(y.shape[0]):
            widths = components((y[f].astype(np.float64) @ luma) > -0.2)
            assert widths, f"objects vanished in frame {f}"
            for wdt in widths:
                assert 8 * 0.8 <= wdt <= 8 * 1.2  # within +-20% of the input width

    def test_temporal_retarget_same_machinery(self):
        x = textured_clip(10, 24, 32, seed=10)
        y = retarget(x, (6, 24, 32), PipelineConfig(**FAST))
        assert y.shape == (6, 24, 32, 3)

    def test_rejects_target_below_minima(self):
        x = textured_clip(8, 24, 32, seed=11)
        with pytest.raises(ValueError):
            retarget(x, (2, 24, 32), PipelineConfig(**FAST))


class TestInpaint:
    def _single_voxel_case(self):
        x = textured_clip(8, 32, 32, seed=12)
        mask = np.zeros(x.shape[:3], dtype=bool)
        mask[4, 16, 16] = True
        cue = np.zeros_like(x)
        cue[mask] = x[mask]  # cue equals the original value
        return x, mask, cue

    def test_single_voxel_degenerate(self):
        x, mask, cue = self._single_voxel_case()
        y = inpaint(x, CueMask(mask, cue), PipelineConfig(seed=0, **FAST))
        assert psnr(y, x) >= 35.0

    def test_unmasked_region_restored_verbatim(self):
        x, mask, cue = self._single_voxel_case()
        y = inpaint(x, CueMask(mask, cue), PipelineConfig(seed=0, **FAST))
        assert np.array_equal(y[~mask], x[~mask])

    def test_mask_validation(self):
        x = textured_clip(8, 24, 32, seed=13)
        empty = np.zeros(x.shape[:3], dtype=bool)
        with pytest.raises(ValueError, match="empty"):
            inpaint(x, CueMask(empty, np.zeros_like(x)), PipelineConfig(**FAST))
        full = np.ones(x.shape[:3], dtype=bool)
        with pytest.raises(ValueError, match="entire"):
            inpaint(x, CueMask(full, np.zeros_like(x)), PipelineConfig(**FAST))

    def test_cue_must_cover_mask(self):
        x = textured_clip(8, 24, 32, seed=14)
        mask = np.zeros(x.shape[:3], dtype=bool)
        mask[2:5, 8:14, 10:16] = True
        cue = np.full_like(x, np.nan)
        with pytest.raises(ValueError, match="non-finite"):
            inpaint(x, CueMask(mask, cue), PipelineConfig(**FAST))
        cue2 = np.zeros_like(x)
        cue2[mask] = 2.0  # out of range
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            inpaint(x, CueMask(mask, cue2), PipelineConfig(**FAST))

    def test_deterministic(self):
        x = textured_clip(8, 24, 32, seed=15)
        mask = np.zeros(x.shape[:3], dtype=bool)
        mask[:, 10:14, 12:18] = True
        cue = np.zeros_like(x)
        cue[mask] = 0.5
        cm = PipelineConfig(seed=3, **FAST)
        a = inpaint(x, CueMask(mask, cue), cm)
        b = inpaint(x, CueMask(mask, cue), cm)
        assert np.array_equal(a, b)


class TestAnalogies:
    def test_self_analogy_high_psnr(self):
        s = textured_clip(8, 32, 40, seed=16)
        dyn = np.full(s.shape[:3], 0.5, dtype=np.float32)
        dyn[:, 8:20, 10:26] = 1.0
        cfg = PipelineConfig.for_analogies(seed=0)
        y = analogies(s, s, dyn, dyn, cfg)
        assert y.shape == s.shape
        assert psnr(y, s) >= 30.0

    def test_output_takes_content_shape(self):
        c = textured_clip(6, 24, 32, seed=17)
        s = textured_clip(8, 28, 40, seed=18)
        dyn_c = np.full(c.shape[:3], 0.5, dtype=np.float32)
        dyn_s = np.full(s.shape[:3], 0.5, dtype=np.float32)
        cfg = PipelineConfig.for_analogies(seed=1)
        y = analogies(c, s, dyn_c, dyn_s, cfg)
        assert y.shape == c.shape[:3] + (3,)

    def test_dyn_validation(self):
        c = textured_clip(6, 24, 32, seed=19)
        s = textured_clip(6, 24, 32, seed=20)
        good = np.full(c.shape[:3], 0.5, dtype=np.float32)
        with pytest.raises(ValueError, match="does not match"):
            analogies(c, s, np.full((5, 24, 32), 0.5, dtype=np.float32), good,
                      PipelineConfig.for_analogies())
        bad_range = good.copy()
        bad_range[0, 0, 0] = 1.5
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            analogies(c, s, bad_range, good, PipelineConfig.for_analogies())

    def test_deterministic(self):
        c = textured_clip(6, 24, 32, seed=21)
        s = textured_clip(6, 24, 32, seed=22)
        dyn_c = np.full(c.shape[:3], 0.5, dtype=np.float32)
        dyn_s = np.full(s.shape[:3], 0.5, dtype=np.float32)
        cfg = PipelineConfig.for_analogies(seed=7)
        assert np.array_equal(
            analogies(c, s, dyn_c, dyn_s, cfg), analogies(c, s, dyn_c, dyn_s, cfg)
        )


class TestValueSourceInvariant:
    def test_retarget_output_stays_in_input_hull(self):
        # values always come from un-degraded pyramid levels of the input, so
        # outputs cannot exceed the input's value range
        x = box_clip()
        y = retarget(x, (8, 32, 26), PipelineConfig(alpha=1.0, seed=2, **FAST))
        assert y.min() >= x.min() - 1e-6
        assert y.max() <= x.max() + 1e-6
