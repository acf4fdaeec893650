import numpy as np
import pytest

from atomlens import figures
from atomlens.errors import ComparisonFailed
from atomlens.profiles import DensityProfile


def _profile(P):
    n = len(P)
    return DensityProfile(-0.25 + 0.5 * np.arange(n) / n, np.asarray(P, float), 0.0)


def test_peak_families():
    x = -0.25 + 0.5 * np.arange(256) / 256
    both = 1 + 0.4 * np.exp(-(x / 0.02) ** 2) + 0.4 * np.exp(-((np.abs(x) - 0.24) / 0.01) ** 2)
    fam = figures.peak_families(_profile(both / both.mean()))
    assert fam == {"antinode": True, "node": True}
    only_centre = 1 + np.cos(4 * np.pi * x)
    assert figures.peak_families(_profile(only_centre)) == {"antinode": True, "node": False}
    only_edge = 1 - np.cos(4 * np.pi * x)
    assert figures.peak_families(_profile(only_edge)) == {"antinode": False, "node": True}


def test_check_tolerances():
    assert figures.Check("a", 0.18, 0.17, 0.02).passed
    assert not figures.Check("a", 0.20, 0.17, 0.02).passed
    t = figures._t_check("t", 0.212, 0.2, 4.0)
    assert t.allowed == pytest.approx(0.01) and not t.passed
    z = figures._t_check("t", 4e-4, 0.0, 0.01)
    assert z.allowed == pytest.approx(5e-4) and z.passed
    assert not figures.Check("nan", float("nan"), 0.0, 1.0).passed


def test_reproduce_unknown_figure(tmp_path):
    with pytest.raises(ValueError):
        figures.reproduce_figure(1, tmp_path)


def test_comparison_failure_raises_after_writing(tmp_path, monkeypatch):
    def failing(out, **options):
        res = figures.FigureResult(9)
        res.checks.append(figures.Check("synthetic", 1.0, 0.0, 0.1))
        return res

    monkeypatch.setitem(figures.FIGURES, 9, failing)
    with pytest.raises(ComparisonFailed) as exc:
        figures.reproduce_figure(9, tmp_path)
    assert "synthetic" in str(exc.value)
    assert (tmp_path / "fig09_manifest.json").exists()
