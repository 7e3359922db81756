import numpy as np
import pytest

from skelforge.errors import DataError
from skelforge.features import encode_features
from skelforge.skeleton import default_skeleton
from skelforge.toydata import class_parameters, generate_toy_dataset


@pytest.fixture(scope="module")
def skeleton():
    return default_skeleton()


def test_same_seed_byte_identical(skeleton):
    m1, c1 = generate_toy_dataset(skeleton, 3, 5, 32, seed=21)
    m2, c2 = generate_toy_dataset(skeleton, 3, 5, 32, seed=21)
    assert m1.to_json() == m2.to_json()
    for a, b in zip(c1, c2):
        assert a.frames.tobytes() == b.frames.tobytes()


def test_different_seeds_differ(skeleton):
    _, c1 = generate_toy_dataset(skeleton, 2, 2, 32, seed=1)
    _, c2 = generate_toy_dataset(skeleton, 2, 2, 32, seed=2)
    assert not np.array_equal(c1[0].frames, c2[0].frames)


def test_degenerate_inputs_rejected(skeleton):
    with pytest.raises(DataError):
        generate_toy_dataset(skeleton, 1, 5, 32, seed=0)
    with pytest.raises(DataError):
        generate_toy_dataset(skeleton, 3, 0, 32, seed=0)
    with pytest.raises(DataError):
        generate_toy_dataset(skeleton, 3, 5, 4, seed=0)


def test_class_parameters_distinct(skeleton):
    params = [class_parameters(k) for k in range(6)]
    freqs = [p["leg_freq"] for p in params]
    assert len(set(freqs)) == len(freqs)


def test_clips_encode_cleanly(skeleton):
    _, clips = generate_toy_dataset(skeleton, 4, 2, 40, seed=13)
    for clip in clips:
        feats = encode_features(clip.frames, skeleton)
        assert np.isfinite(feats).all()


def test_labels_and_counts(skeleton):
    manifest, clips = generate_toy_dataset(skeleton, 3, 7, 24, seed=2)
    assert manifest.num_classes == 3
    assert len(clips) == 21
    labels = [c.label for c in clips]
    assert all(labels.count(k) == 7 for k in range(3))
