"""Tests for network-layer ingestion and the two-center decomposition."""

import pathlib

import numpy as np
import numpy.testing as npt
import pytest

from lrmm.exceptions import (EmptyStack, IndexOutOfRange, LabelMismatch,
                             ParseError)
from lrmm.linalg import load_matrix_csv
from lrmm.netdata import (CenterPair, LayerStack, center_stack,
                          community_order, estimate_pair, load_labels,
                          load_layers, reorder_and_export, save_layers,
                          write_pgm)


def write_edges(path, lines):
    path.write_text("".join(line + "\n" for line in lines))


def sbm_stack(n_layers=40, block=6, p_in=0.9, p_out=0.1, seed=0):
    """Two equal blocks; odd layers swap which block is dense."""
    d = 2 * block
    rng = np.random.default_rng(seed)
    base = np.full((d, d), p_out)
    base[:block, :block] = p_in
    base[block:, block:] = p_in
    flipped = np.full((d, d), p_in)
    flipped[:block, :block] = p_out
    flipped[block:, block:] = p_out
    layers = np.empty((n_layers, d, d))
    for i in range(n_layers):
        p = base if i % 2 == 0 else flipped
        layers[i] = (rng.uniform(size=(d, d)) < p).astype(np.float64)
    ids = [f"layer{i}" for i in range(n_layers)]
    return LayerStack(layers=layers, node_count=d, layer_ids=ids), base, flipped


class TestLoadLayers:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t0\t1", "b\t2\t0", "a\t1\t2"])
        stack = load_layers(path)
        assert stack.layer_ids == ["a", "b"]
        assert stack.node_count == 3
        assert stack.layers.shape == (2, 3, 3)
        assert stack.layers[0, 0, 1] == 1.0
        assert stack.layers[0, 1, 2] == 1.0
        assert stack.layers[1, 2, 0] == 1.0
        assert stack.layers.sum() == 3.0

    def test_layer_order_is_first_appearance(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["z\t0\t0", "a\t0\t0", "z\t1\t1", "m\t0\t1"])
        assert load_layers(path).layer_ids == ["z", "a", "m"]

    def test_undirected_mirrors(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t0\t2"])
        stack = load_layers(path, undirected=True)
        assert stack.layers[0, 0, 2] == 1.0
        assert stack.layers[0, 2, 0] == 1.0
        directed = load_layers(path)
        assert directed.layers[0, 2, 0] == 0.0

    def test_duplicate_edges_idempotent(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t1\t1", "a\t1\t1", "a\t1\t1"])
        assert load_layers(path).layers.sum() == 1.0

    def test_explicit_node_count_pads(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t0\t1"])
        stack = load_layers(path, node_count=5)
        assert stack.node_count == 5
        assert stack.layers.shape == (1, 5, 5)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "edges.tsv"
        path.write_text("a\t0\t1\n\n  \na\t1\t0\n")
        assert load_layers(path).layers.sum() == 2.0

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t0\t1", "a\t0"])
        with pytest.raises(ParseError, match="line 2"):
            load_layers(path)

    def test_non_integer_index(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\tx\t1"])
        with pytest.raises(ParseError, match="line 1"):
            load_layers(path)

    def test_negative_index(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t-1\t1"])
        with pytest.raises(ParseError):
            load_layers(path)

    def test_index_outside_node_count(self, tmp_path):
        path = tmp_path / "edges.tsv"
        write_edges(path, ["a\t0\t7"])
        with pytest.raises(IndexOutOfRange, match="line 1"):
            load_layers(path, node_count=5)

    def test_round_trip_through_save(self, tmp_path):
        stack, _, _ = sbm_stack(n_layers=4, block=3)
        path = tmp_path / "edges.tsv"
        save_layers(stack, path)
        back = load_layers(path, node_count=stack.node_count)
        assert back.layer_ids == stack.layer_ids
        npt.assert_array_equal(back.layers, stack.layers)


class TestLayerStackValidation:
    def test_rejects_non_binary(self):
        with pytest.raises(ParseError):
            LayerStack(layers=np.full((1, 2, 2), 0.5), node_count=2,
                       layer_ids=["a"])

    def test_rejects_non_square(self):
        with pytest.raises(ParseError):
            LayerStack(layers=np.zeros((1, 2, 3)), node_count=2,
                       layer_ids=["a"])

    def test_rejects_id_count_mismatch(self):
        with pytest.raises(ParseError):
            LayerStack(layers=np.zeros((2, 2, 2)), node_count=2,
                       layer_ids=["a"])


class TestCenterStack:
    def test_mean_and_centered_values(self):
        layers = np.stack([np.zeros((2, 2)), np.ones((2, 2))])
        stack = LayerStack(layers=layers, node_count=2, layer_ids=["a", "b"])
        mean, centered = center_stack(stack)
        npt.assert_array_equal(mean, np.full((2, 2), 0.5))
        npt.assert_array_equal(centered.observations[0], np.full((2, 2), -0.5))
        npt.assert_array_equal(centered.observations[1], np.full((2, 2), 0.5))
        assert centered.labels is None

    def test_centered_layers_sum_to_zero(self):
        stack, _, _ = sbm_stack(n_layers=6, block=4)
        _, centered = center_stack(stack)
        npt.assert_allclose(centered.observations.sum(axis=0),
                            np.zeros((8, 8)), atol=1e-12)

    def test_needs_two_layers(self):
        stack = LayerStack(layers=np.zeros((1, 2, 2)), node_count=2,
                           layer_ids=["a"])
        with pytest.raises(EmptyStack):
            center_stack(stack)


class TestEstimatePair:
    def test_centers_bracket_the_mean(self):
        stack, _, _ = sbm_stack()
        pair = estimate_pair(stack, rank=2)
        npt.assert_allclose(pair.m1 + pair.m2, 2.0 * pair.mean, atol=1e-12)
        npt.assert_allclose(pair.m1 - pair.m2, 2.0 * pair.m_hat, atol=1e-12)

    def test_recovers_block_structure(self):
        """The recovered centers should be much closer to the two block
        probability matrices than the degenerate mean-only answer."""
        stack, base, flipped = sbm_stack(n_layers=60, block=8, seed=1)
        pair = estimate_pair(stack, rank=2)
        err = min(
            np.linalg.norm(pair.m1 - base) + np.linalg.norm(pair.m2 - flipped),
            np.linalg.norm(pair.m1 - flipped) + np.linalg.norm(pair.m2 - base),
        )
        degenerate = np.linalg.norm(pair.mean - base) + np.linalg.norm(
            pair.mean - flipped)
        assert err < 0.5 * degenerate

    def test_needs_four_layers(self):
        stack = LayerStack(layers=np.zeros((3, 4, 4)), node_count=4,
                           layer_ids=list("abc"))
        with pytest.raises(EmptyStack):
            estimate_pair(stack)

    def test_rank_capped_by_request(self):
        stack, _, _ = sbm_stack(n_layers=20, block=5, seed=2)
        pair = estimate_pair(stack, rank=1)
        s = np.linalg.svd(pair.m_hat, compute_uv=False)
        npt.assert_allclose(s[1:], 0.0, atol=1e-10)


class TestLabels:
    def test_load_with_header(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("node,community\n0,red\n2,blue\n1,red\n")
        assert load_labels(path, 3) == ["red", "red", "blue"]

    def test_load_without_header(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0,a\n1,b\n")
        assert load_labels(path, 2) == ["a", "b"]

    def test_missing_node(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0,a\n2,b\n")
        with pytest.raises(LabelMismatch):
            load_labels(path, 3)

    def test_duplicate_node(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0,a\n0,b\n")
        with pytest.raises(LabelMismatch):
            load_labels(path, 1)

    def test_out_of_range_node(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0,a\n5,b\n")
        with pytest.raises(LabelMismatch):
            load_labels(path, 2)

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("0,a,extra\n")
        with pytest.raises(ParseError):
            load_labels(path, 1)

    def test_community_order_stable(self):
        labels = ["b", "a", "b", "a", "c"]
        npt.assert_array_equal(community_order(labels), [1, 3, 0, 2, 4])

    def test_community_order_identity_when_sorted(self):
        npt.assert_array_equal(community_order(["a", "a", "b"]), [0, 1, 2])


class TestExport:
    def pair(self):
        m1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        m2 = np.array([[0.0, 0.5], [0.5, 0.0]])
        mean = 0.5 * (m1 + m2)
        return CenterPair(m1=m1, m2=m2, mean=mean, m_hat=m1 - mean)

    def test_writes_all_four_files(self, tmp_path):
        out = tmp_path / "out"
        written = reorder_and_export(self.pair(), None, out)
        assert sorted(written) == ["m1.csv", "m1.pgm", "m2.csv", "m2.pgm"]
        for path in written.values():
            assert pathlib.Path(path).parent.samefile(out)

    def test_joint_scaling(self, tmp_path):
        """One min/max over both matrices: the global max maps to 255,
        the global min to 0, in whichever image holds it."""
        written = reorder_and_export(self.pair(), None, tmp_path)
        pix1 = read_pgm(written["m1.pgm"])
        pix2 = read_pgm(written["m2.pgm"])
        assert pix1.max() == 255  # m1 holds the global max 1.0
        assert pix1.min() == 0  # and the global min 0.0
        assert pix2.max() == 128  # 0.5 lands mid-scale
        assert pix1.shape == (2, 2)

    def test_csv_matches_matrices(self, tmp_path):
        pair = self.pair()
        written = reorder_and_export(pair, None, tmp_path)
        npt.assert_array_equal(load_matrix_csv(written["m1.csv"]), pair.m1)
        npt.assert_array_equal(load_matrix_csv(written["m2.csv"]), pair.m2)

    def test_label_permutation_groups_blocks(self, tmp_path):
        m1 = np.array([[9.0, 1.0, 9.0],
                       [1.0, 9.0, 1.0],
                       [9.0, 1.0, 9.0]])
        pair = CenterPair(m1=m1, m2=np.zeros((3, 3)), mean=0.5 * m1,
                          m_hat=0.5 * m1)
        written = reorder_and_export(pair, ["x", "y", "x"], tmp_path)
        got = load_matrix_csv(written["m1.csv"])
        want = np.array([[9.0, 9.0, 1.0],
                         [9.0, 9.0, 1.0],
                         [1.0, 1.0, 9.0]])
        npt.assert_array_equal(got, want)

    def test_label_length_mismatch(self, tmp_path):
        with pytest.raises(LabelMismatch):
            reorder_and_export(self.pair(), ["a"], tmp_path)

    def test_constant_pair_maps_to_zero(self, tmp_path):
        c = np.full((2, 2), 3.0)
        pair = CenterPair(m1=c, m2=c, mean=c, m_hat=np.zeros((2, 2)))
        written = reorder_and_export(pair, None, tmp_path)
        assert read_pgm(written["m1.pgm"]).max() == 0

    def test_pgm_format(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(path, np.array([[0, 128], [255, 64]]))
        lines = path.read_text().splitlines()
        assert lines[0] == "P2"
        assert lines[1] == "2 2"
        assert lines[2] == "255"
        assert lines[3] == "0 128"
        assert lines[4] == "255 64"


def read_pgm(path):
    lines = open(path).read().split()
    assert lines[0] == "P2"
    cols, rows, maxval = int(lines[1]), int(lines[2]), int(lines[3])
    assert maxval == 255
    return np.array([int(v) for v in lines[4:]]).reshape(rows, cols)
