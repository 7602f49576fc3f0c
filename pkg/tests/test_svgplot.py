import numpy as np
import pytest

from quadimpact.experiments import slider_config
from quadimpact.engine import run_slider_collision
from quadimpact.svgplot import log_panels, plot_log, render


@pytest.fixture(scope="module")
def log():
    return run_slider_collision(slider_config("compliant", c_a=0.43))


def test_render_is_deterministic():
    x = np.linspace(0, 1, 5000)
    panels = [("a", [("sin", np.sin(x)), ("cos", np.cos(x))]), ("b", [("x", x)])]
    a, b = render(panels, x), render(panels, x)
    assert a == b
    assert a.startswith('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600"')
    assert a.count("<polyline") == 3
    pts = a.split('points="')[1].split('"')[0].split()
    assert len(pts) <= 2000


def test_render_handles_flat_and_nan():
    x = np.arange(4.0)
    svg = render([("flat", [("c", np.ones(4)), ("n", np.array([np.nan, 1.0, 2.0, np.nan]))])], x)
    assert "nan" not in svg


def test_render_needs_panels():
    with pytest.raises(ValueError):
        render([], np.arange(3.0))


def test_log_plot_has_force_panel(log, tmp_path):
    titles = [t for t, _ in log_panels(log)]
    assert titles[-1] == "contact force [N]"
    assert "arm length [m]" in titles
    path = tmp_path / "a.svg"
    svg = plot_log(log, path)
    assert path.read_text() == svg == plot_log(log)
