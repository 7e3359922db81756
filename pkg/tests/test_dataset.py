import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelforge.dataset import (
    dataset_digest,
    encode_clips,
    load_dataset,
    load_manifest,
    one_hot,
    save_dataset,
    split_fraction,
)
from skelforge.errors import DataError
from skelforge.skeleton import default_skeleton
from skelforge.toydata import generate_toy_dataset


@pytest.fixture(scope="module")
def toy():
    skeleton = default_skeleton()
    manifest, clips = generate_toy_dataset(skeleton, 3, 6, 24, seed=9)
    return skeleton, manifest, clips


class TestDiskFormat:
    def test_round_trip_bitwise(self, toy, tmp_path):
        _, manifest, clips = toy
        save_dataset(tmp_path, manifest, clips)
        loaded_manifest, loaded_clips = load_dataset(tmp_path)
        assert loaded_manifest.to_json() == manifest.to_json()
        for a, b in zip(clips, loaded_clips):
            assert a.id == b.id and a.label == b.label
            assert np.array_equal(a.frames, b.frames)

    def test_missing_clip_file_rejected(self, toy, tmp_path):
        _, manifest, clips = toy
        save_dataset(tmp_path, manifest, clips)
        (tmp_path / manifest.clips[0].path).unlink()
        with pytest.raises(DataError):
            load_manifest(tmp_path)

    def test_size_mismatch_rejected(self, toy, tmp_path):
        _, manifest, clips = toy
        save_dataset(tmp_path, manifest, clips)
        path = tmp_path / manifest.clips[0].path
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(DataError):
            load_manifest(tmp_path)

    def test_digest_changes_with_content(self, toy, tmp_path):
        _, manifest, clips = toy
        save_dataset(tmp_path / "a", manifest, clips)
        save_dataset(tmp_path / "b", manifest, clips)
        assert dataset_digest(tmp_path / "a") == dataset_digest(tmp_path / "b")
        path = tmp_path / "b" / manifest.clips[0].path
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(bytes(raw))
        assert dataset_digest(tmp_path / "a") != dataset_digest(tmp_path / "b")


class TestOneHot:
    def test_basic(self):
        vec = one_hot(3, 13)
        assert vec[3] == 1.0 and vec.sum() == 1.0 and vec.shape == (13,)

    def test_single_class(self):
        assert np.array_equal(one_hot(0, 1), np.array([1.0]))

    def test_out_of_range(self):
        with pytest.raises(DataError):
            one_hot(13, 13)
        with pytest.raises(DataError):
            one_hot(-1, 13)

    @given(st.integers(min_value=2, max_value=40), st.data())
    @settings(max_examples=25, deadline=None)
    def test_sum_is_one(self, num_classes, data):
        label = data.draw(st.integers(min_value=0, max_value=num_classes - 1))
        assert one_hot(label, num_classes).sum() == 1.0


class TestSplit:
    def test_full_fraction_keeps_everything(self, toy):
        _, manifest, _ = toy
        subset, remainder = split_fraction(manifest, 1.0, seed=0)
        assert len(subset.clips) == len(manifest.clips)
        assert len(remainder.clips) == 0

    def test_half_fraction_ceiling(self, toy):
        _, manifest, _ = toy
        subset, _ = split_fraction(manifest, 0.5, seed=0)
        per_class = {c: 0 for c in range(manifest.num_classes)}
        for entry in subset.clips:
            per_class[entry.label] += 1
        assert all(v == 3 for v in per_class.values())  # ceil(0.5 * 6)

    def test_partition_property(self, toy):
        _, manifest, _ = toy
        subset, remainder = split_fraction(manifest, 0.4, seed=3)
        subset_ids = {c.id for c in subset.clips}
        remainder_ids = {c.id for c in remainder.clips}
        assert subset_ids | remainder_ids == {c.id for c in manifest.clips}
        assert subset_ids & remainder_ids == set()

    def test_deterministic_per_seed(self, toy):
        _, manifest, _ = toy
        a, _ = split_fraction(manifest, 0.5, seed=7)
        b, _ = split_fraction(manifest, 0.5, seed=7)
        c, _ = split_fraction(manifest, 0.5, seed=8)
        assert [e.id for e in a.clips] == [e.id for e in b.clips]
        assert [e.id for e in a.clips] != [e.id for e in c.clips]

    def test_invalid_fraction(self, toy):
        _, manifest, _ = toy
        with pytest.raises(DataError):
            split_fraction(manifest, 0.0, seed=0)
        with pytest.raises(DataError):
            split_fraction(manifest, 1.2, seed=0)

    @given(fraction=st.floats(min_value=0.05, max_value=1.0), seed=st.integers(0, 100))
    @settings(max_examples=25, deadline=None)
    def test_stratified_ceiling_always(self, toy, fraction, seed):
        import math

        _, manifest, _ = toy
        subset, _ = split_fraction(manifest, fraction, seed=seed)
        per_class = {c: 0 for c in range(manifest.num_classes)}
        for entry in subset.clips:
            per_class[entry.label] += 1
        assert all(v == math.ceil(fraction * 6) for v in per_class.values())


def test_feature_cache_round_trip(toy, tmp_path, monkeypatch):
    skeleton, _, clips = toy
    monkeypatch.setenv("SKELFORGE_CACHE", str(tmp_path / "cache"))
    first = encode_clips(clips[:3], skeleton)
    files = list((tmp_path / "cache").glob("*.f32"))
    assert len(files) == 3
    second = encode_clips(clips[:3], skeleton)
    for a, b in zip(first, second):
        assert np.array_equal(a, b)
