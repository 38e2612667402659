import matplotlib.pyplot as plt
import numpy as np
import pytest

from colliderfit.collider import ColliderParams
from colliderfit.observations import TaskObservations
from colliderfit.pipeline import analyze_group
from colliderfit.plotting import plot_reports, render_svg, save_figure
from colliderfit.tasks import predict_all


@pytest.fixture(scope="module")
def model_report():
    obs = TaskObservations.from_means(predict_all(ColliderParams(0.2, 0.8, 0.6, 0.5)))
    return analyze_group(("cbn", "direct", "synthetic"), obs, diagnose=True, bootstrap=50)


def _line(ax, gid):
    (line,) = [ln for ln in ax.get_lines() if ln.get_gid() == gid]
    return line


def test_model_points_on_diagonal(model_report):
    fig = plot_reports([model_report])
    scatter = [c for c in fig.axes[0].collections if c.get_gid() == "scatter-cbn/direct/synthetic"][0]
    x, y = scatter.get_offsets().T
    np.testing.assert_allclose(x, y, atol=1e-3)
    assert list(_line(fig.axes[0], "diagonal").get_xydata()[:, 0]) == [0, 1]
    plt.close(fig)


def test_explaining_away_panel_slope(model_report):
    fig = plot_reports([model_report])
    y = _line(fig.axes[2], "explaining away-obs-cbn/direct/synthetic").get_ydata()
    assert y[0] == pytest.approx(0.57921, abs=1e-5)
    assert y[1] == pytest.approx(0.80769, abs=1e-5)
    flat = _line(fig.axes[1], "Markov pair-obs-cbn/direct/synthetic").get_ydata()
    assert flat[0] == flat[1] == 0.5
    plt.close(fig)


def test_svg_byte_deterministic(model_report, tmp_path):
    a = save_figure([model_report], tmp_path / "a.svg")
    b = save_figure([model_report], tmp_path / "b.svg")
    assert a == b == (tmp_path / "a.svg").read_bytes()
    fig = plot_reports([model_report])
    assert render_svg(fig) == a
    plt.close(fig)
