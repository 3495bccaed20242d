import json
import subprocess
import sys

import numpy as np
import pytest

from corrlayers import BlockPartition, EdgeDomain, build_network
from corrlayers.cli import main
from corrlayers.errors import EmptyInput, FewerThanTwoLayers, PartitionMismatch, ValidationError
from corrlayers.io import (
    read_edge_list,
    read_multiplex_edges,
    read_partition,
    threshold_by_quantile,
    write_edge_list,
    write_partition,
)
from corrlayers.reporting import layer_correlation_matrix, to_jsonable


@pytest.fixture
def edge_file(tmp_path):
    path = tmp_path / "edges.tsv"
    path.write_text("# layer source target\n"
                    "work a b\nwork b c\nwork a c\nwork c d\n"
                    "lunch a b\nlunch c d  # trailing comment\nlunch d d\n")
    return path


def test_read_edge_list(edge_file):
    net, index = read_edge_list(edge_file)
    assert net.layer_names == ("work", "lunch")
    assert index.names() == ["a", "b", "c", "d"]
    assert net.edge_list(0) == [(0, 1), (0, 2), (1, 2), (2, 3)]
    assert net.edge_list(1) == [(0, 1), (2, 3)]  # the self-loop is dropped


def test_edge_list_round_trip(tmp_path, edge_file):
    net, index = read_edge_list(edge_file)
    out = tmp_path / "copy.tsv"
    write_edge_list(net, out, index.names())
    again, _ = read_edge_list(out)
    for layer in range(2):
        np.testing.assert_array_equal(again.layer_keys(layer), net.layer_keys(layer))


def test_partition_round_trip(tmp_path, edge_file):
    _, index = read_edge_list(edge_file)
    part = BlockPartition(np.array([1, 0, 1, 0]), 2)
    path = tmp_path / "part.tsv"
    write_partition(part, path, index.names())
    np.testing.assert_array_equal(read_partition(path, index).labels, part.labels)


def test_partition_must_cover_all_nodes(tmp_path, edge_file):
    _, index = read_edge_list(edge_file)
    path = tmp_path / "part.tsv"
    path.write_text("a 0\nb 1\n")
    with pytest.raises(PartitionMismatch):
        read_partition(path, index)
    path.write_text("a 0\nb 1\nc 0\nd 1\nzz 0\n")
    with pytest.raises(PartitionMismatch):
        read_partition(path, index)


def test_extra_nodes_from_partition(edge_file):
    net, index = read_edge_list(edge_file, extra_nodes=["e"])
    assert net.n == 5 and index.index("e") == 4


def test_bipartite_and_directed_reading(tmp_path):
    path = tmp_path / "bip.tsv"
    path.write_text("x u1 i1\nx u2 i1\ny u1 i2\n")
    net, index = read_edge_list(path, bipartite=True)
    assert net.domain.bipartite == (2, 2)
    assert index.names() == ["u1", "u2", "i1", "i2"]
    d, _ = read_edge_list(path, directed=True)
    assert d.domain.directed


def test_weight_threshold_per_layer(tmp_path):
    path = tmp_path / "w.tsv"
    path.write_text("1 a b 1\n1 b c 5\n1 c d 9\n2 a b 2\n2 a c 4\n")
    net, _ = read_edge_list(path, weight_threshold_quantile=0.5)
    assert net.n_edges(0) == 2 and net.n_edges(1) == 1
    np.testing.assert_array_equal(threshold_by_quantile(np.array([1., 2, 3]), 0.0),
                                  [True, True, True])
    with pytest.raises(ValidationError):
        threshold_by_quantile(np.array([1.0]), 1.5)


def test_multiplex_format(tmp_path):
    edges = tmp_path / "net.edges"
    edges.write_text("2 1 2 1\n1 1 2 1\n1 2 3 1\n2 3 4 1\n")
    layers = tmp_path / "layers.txt"
    layers.write_text("layerID layerLabel\n1 lunch\n2 work\n")
    net, _ = read_multiplex_edges(edges, layers)
    assert net.layer_names == ("lunch", "work")
    assert net.n_edges(0) == 2 and net.n_edges(1) == 2


def test_empty_file(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("# nothing\n")
    with pytest.raises(EmptyInput):
        read_edge_list(path)


def test_layer_correlation_matrix():
    net = build_network([[(0, 1), (1, 2)], [(0, 1), (1, 2)], [(0, 2)]], n=3)
    m = layer_correlation_matrix(net)
    assert m.values[0, 1] == pytest.approx(1.0)
    assert m.values[0, 2] == pytest.approx(-1.0)
    assert m.top_pair == ("1", "2", pytest.approx(1.0))
    with pytest.raises(FewerThanTwoLayers):
        layer_correlation_matrix(net.select_layers([0]))


def test_undefined_values_serialize_as_marker():
    masked = np.ma.masked_array([1.0, 2.0], mask=[False, True])
    assert to_jsonable({"a": masked, "b": None, "c": float("nan"),
                        "d": np.float64(1 / 3)}) == {"a": [1.0, "n/a"], "b": "n/a",
                                                     "c": "n/a", "d": 0.333333333333}


# --- command line ----------------------------------------------------------

def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert run(["generate", "--N", 200, "--n-c", 3, "--rho", 0.5, "--seed", 3,
                "--out", out]) == 0
    return out


def test_generate_outputs(generated):
    doc = json.loads((generated / "truth.json").read_text())
    assert doc["schema_version"] == "1.0" and doc["seed"] == 3
    assert doc["config"]["N"] == 200
    assert (generated / "edges.tsv").exists() and (generated / "partition.tsv").exists()


def test_fit_command(generated, tmp_path):
    code = run(["fit", "--input", generated / "edges.tsv", "--partition",
                generated / "partition.tsv", "--models", "CorrER,CorrSBM,CorrDCSBM",
                "--full", "--out", tmp_path])
    assert code == 0
    doc = json.loads((tmp_path / "fit.json").read_text())["result"]
    assert set(doc["models"]) == {"CorrER", "CorrSBM", "CorrDCSBM"}
    assert "full" in doc["models"]["CorrDCSBM"]
    assert doc["models"]["CorrER"]["rho"] == pytest.approx(doc["effective_correlation"])


def test_predict_is_byte_identical_across_runs(generated, tmp_path):
    args = ["predict", "--input", generated / "edges.tsv", "--partition",
            generated / "partition.tsv", "--models", "CorrER,CorrSBM", "--kfolds", 3,
            "--seed", 1]
    names = ("predict.json", "curves/roc_CorrSBM.csv", "curves/pr_CorrER.csv")
    assert run([*args, "--out", tmp_path]) == 0
    first = [(tmp_path / name).read_bytes() for name in names]
    assert run([*args, "--out", tmp_path]) == 0
    assert first == [(tmp_path / name).read_bytes() for name in names]


def test_correlate_command(edge_file, tmp_path):
    assert run(["correlate", "--input", edge_file, "--out", tmp_path]) == 0
    doc = json.loads((tmp_path / "correlate.json").read_text())
    assert doc["result"]["layers"] == ["work", "lunch"]
    assert doc["result"]["matrix"][0][0] == 1.0


def test_config_file_with_override(generated, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {generated / 'edges.tsv'}\nmodels = CorrER\nseed = 4\n")
    assert run(["fit", "--config", cfg, "--seed", 9, "--out", tmp_path]) == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["seed"] == 9 and list(doc["result"]["models"]) == ["CorrER"]


@pytest.mark.parametrize("argv", [
    ["predict", "--models", "CorrSBM"],                 # no partition
    ["fit", "--layers", "work,work"],                   # same layer twice
    ["fit", "--models", "LFR"],                         # unknown model
])
def test_validation_errors_exit_2(argv, edge_file, tmp_path, capsys):
    code = run([*argv[:1], "--input", edge_file, *argv[1:], "--out", tmp_path])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_single_layer_input_exit_2(tmp_path):
    path = tmp_path / "one.tsv"
    path.write_text("L a b\nL b c\n")
    assert run(["correlate", "--input", path, "--out", tmp_path]) == 2
    assert run(["fit", "--input", path, "--out", tmp_path]) == 2


def test_missing_file_and_bad_flag_exit_2(tmp_path):
    assert run(["fit", "--input", tmp_path / "nope.tsv"]) == 2
    assert run(["fit", "--bogus"]) == 2


def test_module_entry_point(tmp_path):
    done = subprocess.run([sys.executable, "-m", "corrlayers", "--version"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "0.1.0" in done.stdout


def test_directed_input_through_cli(tmp_path):
    path = tmp_path / "d.tsv"
    path.write_text("x a b\nx b a\nx b c\ny a b\ny c a\n")
    assert run(["fit", "--input", path, "--directed", "--models", "CorrER",
                "--out", tmp_path]) == 0
    doc = json.loads((tmp_path / "fit.json").read_text())["result"]
    assert doc["n_pairs"] == 6
    assert doc["counts"] == {"e11": 1, "e10": 2, "e01": 1, "e00": 2}
