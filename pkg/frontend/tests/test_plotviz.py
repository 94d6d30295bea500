import numpy as np
import pytest

from plotviz.cli import main
from plotviz.data import (PlotDataError, load_joint_pdf, load_training_log,
                          moving_average)
from plotviz.render import render_heatmap, render_training_curve


def write_joint_pdf(path, density, bler_edges=None, lat_edges=None):
    density = np.asarray(density)
    nb, nl = density.shape
    if bler_edges is None:
        bler_edges = np.linspace(0.0, 0.5, nb + 1)
    if lat_edges is None:
        lat_edges = np.linspace(0.0, 100.0, nl + 1)
    lines = ["bler_bin_lo,bler_bin_hi,lat_bin_lo,lat_bin_hi,density"]
    for i in range(nb):
        for j in range(nl):
            lines.append(f"{bler_edges[i]},{bler_edges[i + 1]},"
                         f"{lat_edges[j]},{lat_edges[j + 1]},{density[i, j]}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_training_log(path, revenues):
    lines = ["cycle,episode,epsilon,action_index,revenue,loss"]
    for c, r in enumerate(revenues):
        lines.append(f"{c},0,0.5,17,{r},")
    path.write_text("\n".join(lines) + "\n")
    return path


# -- readers -----------------------------------------------------------------

def test_load_joint_pdf_reconstructs_grid(tmp_path):
    rng = np.random.default_rng(0)
    density = rng.random((20, 20))
    csv = write_joint_pdf(tmp_path / "pdf.csv", density)
    grid = load_joint_pdf(csv)
    np.testing.assert_allclose(grid.density, density)
    np.testing.assert_allclose(grid.bler_edges, np.linspace(0, 0.5, 21))
    np.testing.assert_allclose(grid.latency_edges, np.linspace(0, 100, 21))


def test_load_joint_pdf_rejects_bad_rows(tmp_path):
    csv = tmp_path / "pdf.csv"
    good = write_joint_pdf(tmp_path / "ok.csv", np.zeros((2, 2)))
    lines = good.read_text().splitlines()
    lines[3] = lines[3].replace(lines[3].split(",")[-1], "not-a-number")
    csv.write_text("\n".join(lines) + "\n")
    with pytest.raises(PlotDataError, match="row 4"):
        load_joint_pdf(csv)


def test_load_joint_pdf_rejects_incomplete_grid(tmp_path):
    good = write_joint_pdf(tmp_path / "ok.csv", np.ones((2, 2)))
    lines = good.read_text().splitlines()
    (tmp_path / "bad.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(PlotDataError, match="complete grid"):
        load_joint_pdf(tmp_path / "bad.csv")


def test_load_joint_pdf_rejects_wrong_header(tmp_path):
    p = tmp_path / "pdf.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(PlotDataError, match="header"):
        load_joint_pdf(p)


def test_load_training_log(tmp_path):
    csv = write_training_log(tmp_path / "log.csv", [1.0, 2.0, 3.0])
    cycles, revenues = load_training_log(csv)
    np.testing.assert_array_equal(cycles, [0, 1, 2])
    np.testing.assert_allclose(revenues, [1.0, 2.0, 3.0])


def test_load_training_log_empty_is_error(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text("cycle,episode,epsilon,action_index,revenue,loss\n")
    with pytest.raises(PlotDataError, match="no rows"):
        load_training_log(p)


# -- moving average ----------------------------------------------------------

def test_moving_average_hand_computed():
    vals = np.arange(1.0, 11.0)
    avg = moving_average(vals, window=4)
    # trailing windows: [1], [1,2], [1..3], [1..4], [2..5], ...
    assert avg[0] == 1.0
    assert avg[2] == pytest.approx(2.0)
    assert avg[3] == pytest.approx(2.5)
    assert avg[9] == pytest.approx(np.mean([7, 8, 9, 10]))


def test_moving_average_window_100():
    rng = np.random.default_rng(1)
    vals = rng.normal(size=250)
    avg = moving_average(vals, 100)
    assert avg[249] == pytest.approx(vals[150:250].mean())
    assert avg[50] == pytest.approx(vals[:51].mean())


def test_moving_average_monotone_input_stays_monotone():
    vals = np.linspace(0.0, 5.0, 300)
    avg = moving_average(vals, 100)
    assert np.all(np.diff(avg) > 0)


# -- rendering ---------------------------------------------------------------

def test_heatmap_argmax_matches_csv(tmp_path):
    rng = np.random.default_rng(2)
    density = rng.random((20, 20))
    density[13, 4] = 5.0  # unambiguous peak
    csv = write_joint_pdf(tmp_path / "pdf.csv", density)
    out = tmp_path / "heat.png"
    grids = render_heatmap([csv], out)
    assert out.exists() and out.stat().st_size > 0
    plotted = grids[0].density
    assert np.unravel_index(plotted.argmax(), plotted.shape) == (13, 4)
    np.testing.assert_allclose(plotted, density)


def test_heatmap_all_zero_density(tmp_path):
    csv = write_joint_pdf(tmp_path / "pdf.csv", np.zeros((20, 20)))
    out = tmp_path / "flat.png"
    grids = render_heatmap([csv], out)
    assert out.exists()
    assert grids[0].density.max() == grids[0].density.min() == 0.0


def test_heatmap_two_panels(tmp_path):
    a = write_joint_pdf(tmp_path / "a.csv", np.ones((4, 4)))
    b = write_joint_pdf(tmp_path / "b.csv", np.full((4, 4), 2.0))
    out = tmp_path / "pair.png"
    grids = render_heatmap([a, b], out, titles=["drl", "baseline"])
    assert len(grids) == 2
    assert out.exists()


def test_training_curve_render(tmp_path):
    revenues = np.linspace(1.0, 3.0, 300)
    csv = write_training_log(tmp_path / "log.csv", revenues)
    out = tmp_path / "curve.png"
    cycles, raw, avg = render_training_curve(csv, out)
    assert out.exists() and out.stat().st_size > 0
    np.testing.assert_allclose(raw, revenues)
    assert avg[299] == pytest.approx(revenues[200:].mean())
    assert np.all(np.diff(avg) > 0)  # monotone input -> monotone average


# -- cli ---------------------------------------------------------------------

def test_cli_heatmap_and_curve(tmp_path):
    pdf = write_joint_pdf(tmp_path / "pdf.csv", np.ones((20, 20)))
    log = write_training_log(tmp_path / "log.csv", [1.0] * 150)
    assert main(["heatmap", str(pdf), "-o", str(tmp_path / "h.png")]) == 0
    assert main(["curve", str(log), "-o", str(tmp_path / "c.png")]) == 0
    assert (tmp_path / "h.png").exists()
    assert (tmp_path / "c.png").exists()


def test_cli_malformed_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("bler_bin_lo,bler_bin_hi,lat_bin_lo,lat_bin_hi,density\n"
                   "0,0.1,0,5,oops\n")
    assert main(["heatmap", str(bad), "-o", str(tmp_path / "x.png")]) == 2
    assert "row 2" in capsys.readouterr().err


def test_cli_empty_log_exit_2(tmp_path, capsys):
    p = tmp_path / "log.csv"
    p.write_text("cycle,episode,epsilon,action_index,revenue,loss\n")
    assert main(["curve", str(p), "-o", str(tmp_path / "x.png")]) == 2
    assert "no rows" in capsys.readouterr().err


def test_inputs_not_modified(tmp_path):
    pdf = write_joint_pdf(tmp_path / "pdf.csv", np.ones((5, 5)))
    before = pdf.read_bytes()
    render_heatmap([pdf], tmp_path / "h.png")
    assert pdf.read_bytes() == before
