"""Tests for the procedural scene renderer."""

import numpy as np
import pytest

from vae_conformal.errors import ContractViolation
from vae_conformal.sim import SceneParams, apparent_size, render_scene


class TestSceneParams:
    @pytest.mark.parametrize(
        "kwargs", [{"image_side": 4}, {"noise_level": 1.5}, {"brightness": 0.2}]
    )
    def test_invalid(self, kwargs: dict):
        with pytest.raises(ContractViolation):
            SceneParams(**kwargs)


class TestRenderScene:
    def test_half_fraction_is_eight_pixels(self):
        image = render_scene(16.0, SceneParams(image_side=16)).reshape(16, 16)
        lit = np.argwhere(image > 0)
        assert image.max() == 1.0
        assert lit[:, 0].min() == 4 and lit[:, 0].max() == 11
        assert lit[:, 1].min() == 4 and lit[:, 1].max() == 11
        assert np.count_nonzero(image) == 64

    def test_deterministic(self):
        p = SceneParams(noise_level=0.0, brightness=0.8)
        np.testing.assert_array_equal(render_scene(37.0, p), render_scene(37.0, p))

    def test_noisy_render_deterministic_per_seed(self):
        p = SceneParams(noise_level=0.5, seed=4)
        np.testing.assert_array_equal(render_scene(20.0, p), render_scene(20.0, p))
        other = SceneParams(noise_level=0.5, seed=5)
        assert not np.array_equal(render_scene(20.0, p), render_scene(20.0, other))

    def test_closer_obstacle_covers_more_pixels(self):
        p = SceneParams()
        assert np.count_nonzero(render_scene(10.0, p)) > np.count_nonzero(render_scene(100.0, p))

    def test_mass_grows_as_distance_shrinks(self):
        p = SceneParams()
        distances = np.linspace(110.0, 9.0, 60)
        mass = [render_scene(d, p).sum() for d in distances]
        assert all(b >= a for a, b in zip(mass, mass[1:]))

    def test_intensity_follows_brightness(self):
        image = render_scene(16.0, SceneParams(brightness=0.6))
        assert image.max() == pytest.approx(0.6)

    def test_noise_amplitude_and_clamp(self):
        clean = render_scene(30.0, SceneParams(brightness=0.7))
        noisy = render_scene(30.0, SceneParams(brightness=0.7, noise_level=1.0, seed=1))
        assert np.max(np.abs(noisy - clean)) <= 0.1 + 1e-12
        assert noisy.min() >= 0.0 and noisy.max() <= 1.0

    @pytest.mark.parametrize("d", [-1.0, 120.5])
    def test_out_of_range(self, d: float):
        with pytest.raises(ContractViolation):
            render_scene(d, SceneParams())

    def test_zero_distance_renders(self):
        assert render_scene(0.0, SceneParams()).shape == (256,)


class TestApparentSize:
    def test_clamped(self):
        assert apparent_size(1000.0, 16) == pytest.approx(0.8)
        assert apparent_size(1.0, 16) == pytest.approx(15.2)
