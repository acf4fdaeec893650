import numpy as np
import pytest

from atomlens.profiles import DensityProfile, LocalizationTrace


def _grid(n):
    return -0.25 + 0.5 * np.arange(n) / n


def test_uniform_profile():
    x = _grid(128)
    d = DensityProfile(x, np.ones(128), 0.0)
    assert d.integral() == pytest.approx(1.0)
    assert d.localization(1) == pytest.approx(1.0)
    assert d.localization(-1) == pytest.approx(1.0)


def test_localized_profiles():
    x = _grid(256)
    # density 1 + cos(4 pi x): peaked at the intensity maximum x = 0
    d = DensityProfile(x, 1.0 + np.cos(4 * np.pi * x), 0.0)
    assert d.integral() == pytest.approx(1.0)
    assert d.localization(-1) == pytest.approx(0.5)
    assert d.localization(1) == pytest.approx(1.5)


def test_trace_shape_check():
    with pytest.raises(ValueError):
        LocalizationTrace([0, 1], [1.0], "scaled")
    tr = LocalizationTrace(np.linspace(0, 1, 11), np.ones(11), "scaled")
    assert tr.spacing == pytest.approx(0.1)
