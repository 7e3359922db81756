import numpy as np
import pytest
import xml.etree.ElementTree as ET

from skelforge.errors import DataError
from skelforge.metrics import EmbeddingSet
from skelforge.plots import pca_project, plot_loss, plot_pca_scatter, plot_protocol
from skelforge.svg import Figure, Series, write_svg


def test_single_point_loss_figure_is_valid_xml(tmp_path):
    csv_path = tmp_path / "loss.csv"
    csv_path.write_text("epoch,total,rec,cls\n0,1.5,1.2,0.3\n")
    out = tmp_path / "loss.svg"
    plot_loss(csv_path, out)
    ET.fromstring(out.read_text())  # parses as XML


def test_empty_loss_rejected(tmp_path):
    csv_path = tmp_path / "loss.csv"
    csv_path.write_text("epoch,total,rec,cls\n")
    with pytest.raises(DataError):
        plot_loss(csv_path, tmp_path / "loss.svg")


def test_byte_identical_for_identical_inputs(tmp_path):
    fig = Figure(title="t", xlabel="x", ylabel="y")
    fig.add(Series(name="s", xs=[0, 1, 2], ys=[1.0, 0.5, 0.25]))
    write_svg(tmp_path / "a.svg", fig)
    fig2 = Figure(title="t", xlabel="x", ylabel="y")
    fig2.add(Series(name="s", xs=[0, 1, 2], ys=[1.0, 0.5, 0.25]))
    write_svg(tmp_path / "b.svg", fig2)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_protocol_plot(tmp_path):
    csv_path = tmp_path / "protocol_results.csv"
    csv_path.write_text(
        "fraction,policy,mean_acc,std_acc,delta_vs_none\n"
        "0.5,none,0.8,0.02,0\n0.5,synthetic,0.9,0.01,0.1\n"
        "1.0,none,0.92,0.02,0\n1.0,synthetic,0.95,0.01,0.03\n"
    )
    out = tmp_path / "protocol.svg"
    plot_protocol(csv_path, out)
    text = out.read_text()
    assert "synthetic" in text and "none" in text
    ET.fromstring(text)


def test_pca_projection_deterministic_and_centered():
    rng = np.random.default_rng(0)
    vectors = rng.standard_normal((40, 6)) @ np.diag([5, 3, 1, 0.5, 0.1, 0.05])
    a = pca_project(vectors)
    b = pca_project(vectors)
    assert np.array_equal(a, b)
    assert a.shape == (40, 2)
    assert np.allclose(a.mean(axis=0), 0.0, atol=1e-9)
    # first axis carries the largest variance
    assert a[:, 0].var() >= a[:, 1].var()


def test_pca_scatter_svg(tmp_path):
    rng = np.random.default_rng(1)
    real = EmbeddingSet(rng.standard_normal((20, 4)), rng.integers(0, 2, 20), "real")
    fake = EmbeddingSet(rng.standard_normal((15, 4)) + 1, rng.integers(0, 2, 15), "synthetic")
    out = tmp_path / "scatter.svg"
    proj = plot_pca_scatter(real, fake, out)
    assert proj.shape == (35, 2)
    text = out.read_text()
    assert "polygon" in text  # triangles for synthetic
    assert "circle" in text
    ET.fromstring(text)


def test_pca_scatter_empty_rejected(tmp_path):
    rng = np.random.default_rng(2)
    real = EmbeddingSet(rng.standard_normal((5, 3)), np.zeros(5, dtype=int), "real")
    with pytest.raises(Exception):
        plot_pca_scatter(real, EmbeddingSet(np.zeros((0, 3)), np.zeros(0, dtype=int)), tmp_path / "x.svg")


def test_figure_without_data_rejected():
    with pytest.raises(ValueError):
        Figure(title="t", xlabel="x", ylabel="y").to_svg()
