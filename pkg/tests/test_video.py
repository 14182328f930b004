import numpy as np
import pytest

from patchsynth.video import make_replicated_noise, psnr, resize_tricubic


def cubic_weight(t, a=-0.5):
    at = abs(t)
    if at <= 1.0:
        return (a + 2) * at**3 - (a + 3) * at**2 + 1
    if at < 2.0:
        return a * (at**3 - 5 * at**2 + 8 * at - 4)
    return 0.0


def resize_1d_oracle(values, n_out):
    """Independent per-pixel kernel sum: 4 taps, center-aligned, edge clamp."""
    n_in = len(values)
    out = np.empty(n_out)
    for i in range(n_out):
        src = (i + 0.5) * n_in / n_out - 0.5
        base = int(np.floor(src))
        acc = 0.0
        for k in range(base - 1, base + 3):
            acc += cubic_weight(src - k) * values[min(max(k, 0), n_in - 1)]
        out[i] = acc
    return out


class TestResize:
    def test_identity_same_shape(self):
        rng = np.random.default_rng(0)
        v = rng.uniform(-1, 1, (4, 9, 11, 3)).astype(np.float32)
        assert np.array_equal(resize_tricubic(v, (4, 9, 11)), v)

    def test_constant_preserved_any_target(self):
        v = np.full((5, 10, 12, 2), 0.5, dtype=np.float32)
        for target in [(3, 7, 9), (5, 10, 12), (2, 4, 20), (9, 15, 5)]:
            out = resize_tricubic(v, target)
            assert out.shape == target + (2,)
            assert np.all(out == 0.5)

    def test_ramp_matches_kernel_sum_oracle(self):
        ramp = np.linspace(-1.0, 1.0, 8)
        v = ramp.reshape(1, 1, 8, 1)
        out = resize_tricubic(v, (1, 1, 4))
        expect = resize_1d_oracle(ramp, 4)
        # the contract clamps to the input range, the oracle does not
        expect = np.clip(expect, ramp.min(), ramp.max())
        np.testing.assert_allclose(out[0, 0, :, 0], expect, atol=1e-12)

    def test_random_matches_oracle_along_each_axis(self):
        rng = np.random.default_rng(3)
        line = rng.uniform(-1, 1, 13)
        for axis, target in [(0, (5, 1, 1)), (1, (1, 5, 1)), (2, (1, 1, 5))]:
            shape = [1, 1, 1, 1]
            shape[axis] = 13
            v = line.reshape(shape)
            out = resize_tricubic(v, tuple(target)).reshape(-1)
            expect = np.clip(resize_1d_oracle(line, 5), line.min(), line.max())
            np.testing.assert_allclose(out, expect, atol=1e-12)

    def test_output_clamped_to_input_channel_range(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(-1, 1, (6, 16, 16, 3)).astype(np.float32)
        out = resize_tricubic(v, (9, 24, 24))
        for c in range(3):
            assert out[..., c].min() >= v[..., c].min()
            assert out[..., c].max() <= v[..., c].max()

    def test_down_up_psnr_on_smooth_input(self):
        yy, xx = np.mgrid[0:32, 0:32]
        frame = 0.8 * np.sin(2 * np.pi * yy / 32.0) * np.cos(2 * np.pi * xx / 32.0)
        v = np.broadcast_to(frame[None, :, :, None], (6, 32, 32, 1)).astype(np.float64)
        down = resize_tricubic(v, (4, 20, 20))
        up = resize_tricubic(down, (6, 32, 32))
        assert psnr(up, v) >= 30.0

    def test_rejects_bad_inputs(self):
        v = np.zeros((2, 4, 4, 1), dtype=np.float32)
        with pytest.raises(ValueError):
            resize_tricubic(v, (0, 4, 4))
        bad = v.copy()
        bad[0, 0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            resize_tricubic(bad, (2, 4, 4))
        with pytest.raises(ValueError):
            resize_tricubic(np.zeros((2, 4, 4)), (2, 4, 4))  # not 4-d


class TestReplicatedNoise:
    def test_zero_std_gives_zeros(self):
        n = make_replicated_noise(4, 5, 3, 6, 0.0, seed=1)
        assert n.shape == (6, 4, 5, 3)
        assert np.all(n == 0.0)

    def test_frames_identical(self):
        n = make_replicated_noise(8, 7, 3, 5, 2.5, seed=9)
        for f in range(1, 5):
            assert np.array_equal(n[f], n[0])

    def test_sample_std_near_nominal(self):
        n = make_replicated_noise(64, 64, 3, 2, 3.0, seed=123)
        slab = n[0].ravel()
        tol = 3 * 3.0 / np.sqrt(slab.size)
        assert abs(slab.std() - 3.0) <= tol

    def test_bit_identical_for_same_arguments(self):
        a = make_replicated_noise(6, 6, 3, 4, 1.7, seed=42)
        b = make_replicated_noise(6, 6, 3, 4, 1.7, seed=42)
        assert np.array_equal(a, b)
        c = make_replicated_noise(6, 6, 3, 4, 1.7, seed=43)
        assert not np.array_equal(a, c)

    def test_rejects_negative_std(self):
        with pytest.raises(ValueError):
            make_replicated_noise(4, 4, 3, 2, -0.1, seed=0)
        with pytest.raises(ValueError):
            make_replicated_noise(0, 4, 3, 2, 1.0, seed=0)
