import numpy as np
import pytest
import torch

from skelforge.dataset import MotionClip
from skelforge.errors import DataError
from skelforge.features import _yaw_matrices
from skelforge.recognizer import (
    AugPolicy,
    RecognizerConfig,
    SkeletonRecognizer,
    classical_augment,
    evaluate_accuracy,
    normalized_adjacency,
    preprocess_positions,
    train_recognizer,
)
from skelforge.skeleton import default_skeleton
from skelforge.toydata import generate_toy_dataset


@pytest.fixture(scope="module")
def skeleton():
    return default_skeleton()


@pytest.fixture(scope="module")
def toy(skeleton):
    manifest, clips = generate_toy_dataset(skeleton, 3, 8, 32, seed=31)
    return manifest, clips


FAST = RecognizerConfig(num_classes=3, channels=(8, 16), epochs=4, window=24, batch_size=8)


class TestAdjacency:
    def test_symmetric_normalized_with_self_loops(self, skeleton):
        adj = normalized_adjacency(skeleton)
        assert adj.shape == (22, 22)
        assert np.allclose(adj, adj.T)
        assert np.all(np.diag(adj) > 0)
        # degree normalization keeps the spectral radius at 1
        eigs = np.linalg.eigvalsh(adj)
        assert eigs.max() == pytest.approx(1.0, abs=1e-9)


class TestPreprocess:
    def test_shape(self, skeleton, toy):
        _, clips = toy
        out = preprocess_positions(clips[0].frames, window=24)
        assert out.shape == (3, 24, 22)

    def test_yaw_invariance(self, skeleton, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)
        rot = _yaw_matrices(np.array(1.1))
        rotated = frames @ rot.T
        a = preprocess_positions(frames, window=24)
        b = preprocess_positions(rotated, window=24)
        assert np.allclose(a, b, atol=1e-9)

    def test_translation_xz_invariance(self, skeleton, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)
        shifted = frames + np.array([3.0, 0.0, -2.0])
        a = preprocess_positions(frames, window=24)
        b = preprocess_positions(shifted, window=24)
        assert np.allclose(a, b, atol=1e-9)

    def test_pads_short_clips(self, skeleton, toy):
        _, clips = toy
        out = preprocess_positions(clips[0].frames[:5], window=24)
        assert out.shape == (3, 24, 22)
        assert np.allclose(out[:, 5:, :], out[:, 4:5, :])


class TestClassicalAugment:
    def test_scaling_factor_one_identity(self, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)
        policy = AugPolicy(kind="scaling", scale_range=(1.0, 1.0))
        out = classical_augment(frames, policy, np.random.default_rng(0))
        assert np.array_equal(out, frames)

    def test_rotation_full_turn_identity(self, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)

        # force the drawn yaw to 2*pi by fixing the range and a stub rng
        class TwoPi:
            def uniform(self, lo, hi):
                return 2.0 * np.pi

        policy = AugPolicy(kind="rotating", yaw_range=2.0 * np.pi)
        out = classical_augment(frames, policy, TwoPi())
        assert np.allclose(out, frames, atol=1e-9)

    def test_zero_sigma_identity(self, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)
        out = classical_augment(frames, AugPolicy(kind="gaussian_noise", sigma=0.0),
                                np.random.default_rng(0))
        assert np.array_equal(out, frames)

    def test_gaussian_noise_std(self, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)[:4]
        rng = np.random.default_rng(1)
        sigma = 0.01
        deltas = []
        for _ in range(200):
            out = classical_augment(frames, AugPolicy(kind="gaussian_noise", sigma=sigma), rng)
            deltas.append(out - frames)
        measured = np.std(np.stack(deltas))
        assert abs(measured - sigma) / sigma < 0.05

    def test_scaling_keeps_root(self, toy):
        _, clips = toy
        frames = clips[0].frames.astype(np.float64)
        out = classical_augment(frames, AugPolicy(kind="scaling", scale_range=(0.5, 0.5)),
                                np.random.default_rng(0))
        assert np.allclose(out[:, 0], frames[:, 0])

    def test_unknown_kind_rejected(self):
        with pytest.raises(DataError):
            AugPolicy(kind="mirror")


class TestTraining:
    def test_missing_class_rejected(self, skeleton, toy):
        _, clips = toy
        only_two = [c for c in clips if c.label != 1]
        with pytest.raises(DataError) as err:
            train_recognizer(only_two, FAST, skeleton, seed=0)
        assert "1" in str(err.value)

    def test_training_deterministic_per_seed(self, skeleton, toy):
        _, clips = toy
        subset = clips[::4]
        m1, h1 = train_recognizer(subset, FAST, skeleton, seed=3)
        m2, h2 = train_recognizer(subset, FAST, skeleton, seed=3)
        assert h1 == h2
        for a, b in zip(m1.parameters(), m2.parameters()):
            assert torch.equal(a, b)

    def test_sigma_zero_equals_none(self, skeleton, toy):
        _, clips = toy
        subset = clips[::4]
        m1, h1 = train_recognizer(subset, FAST, skeleton,
                                  policy=AugPolicy(kind="gaussian_noise", sigma=0.0), seed=5)
        m2, h2 = train_recognizer(subset, FAST, skeleton,
                                  policy=AugPolicy(kind="none"), seed=5)
        assert h1 == h2

    def test_rotating_zero_range_equals_none(self, skeleton, toy):
        _, clips = toy
        subset = clips[::4]
        m1, h1 = train_recognizer(subset, FAST, skeleton,
                                  policy=AugPolicy(kind="rotating", yaw_range=0.0), seed=5)
        _, h2 = train_recognizer(subset, FAST, skeleton,
                                 policy=AugPolicy(kind="none"), seed=5)
        assert h1 == h2

    def test_synthetic_policy_requires_clips(self, skeleton, toy):
        _, clips = toy
        with pytest.raises(DataError):
            train_recognizer(clips[:6], FAST, skeleton,
                             policy=AugPolicy(kind="synthetic"), seed=0)

    def test_synthetic_concat_size(self, skeleton, toy):
        _, clips = toy
        real = clips[::4]
        synth = [MotionClip(id=f"s{i}", label=c.label, frames=c.frames)
                 for i, c in enumerate(real * 2)]
        model, history = train_recognizer(
            real, FAST, skeleton, policy=AugPolicy(kind="synthetic", multiplier=2),
            synthetic=synth, seed=0,
        )
        assert model.is_trained


class TestEvaluate:
    def test_confusion_identity(self, skeleton, toy):
        _, clips = toy

        class Oracle(SkeletonRecognizer):
            def forward(self, x, return_embedding=False):
                logits = super().forward(x)
                return logits

        # a perfect stub: replace forward with one-hot on the true label
        model, _ = train_recognizer(clips, FAST, skeleton, seed=0)
        acc, confusion = evaluate_accuracy(model, clips, 3)
        assert confusion.sum() == len(clips)
        assert acc == pytest.approx(np.trace(confusion) / confusion.sum())
        # definitional identity: accuracy = 1 - off-diagonal mass / N
        off = confusion.sum() - np.trace(confusion)
        assert acc == pytest.approx(1.0 - off / confusion.sum())

    def test_constant_classifier_balanced_accuracy(self, skeleton, toy):
        _, clips = toy

        class Constant:
            config = FAST

            def eval(self):
                return self

            def __call__(self, x):
                logits = torch.zeros(x.shape[0], 3)
                logits[:, 2] = 10.0
                return logits

        acc, confusion = evaluate_accuracy(Constant(), clips, 3)
        assert acc == pytest.approx(1.0 / 3.0)
        assert confusion[:, 2].sum() == len(clips)


def test_embed_requires_training(skeleton, toy):
    from skelforge.recognizer import embed_clips

    _, clips = toy
    torch.manual_seed(0)
    model = SkeletonRecognizer(FAST, skeleton)
    with pytest.raises(DataError):
        embed_clips(model, clips[:2])


def test_embedding_dimension_and_determinism(skeleton, toy):
    from skelforge.recognizer import embed_clips

    _, clips = toy
    model, _ = train_recognizer(clips[::4], FAST, skeleton, seed=0)
    emb1 = embed_clips(model, clips[:4])
    emb2 = embed_clips(model, clips[:4])
    assert emb1.shape == (4, FAST.embedding_dim)
    assert np.array_equal(emb1, emb2)
