"""Segmenter model, loss, post-processing, and training behavior."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcgkit.dsp import FrameMask, Spectrogram, patchify
from pcgkit.errors import NumericError, UsageError
from pcgkit.ingest.records import PCGRecording, SegmentIntervals
from pcgkit.nn.gradcheck import finite_difference_check
from pcgkit.segmenter.loss import bce_from_logits, bce_loss
from pcgkit.segmenter.model import (
    FrameProbabilities,
    SegmenterHyperparams,
    SegmenterModel,
    seg_forward,
)
from pcgkit.segmenter.postprocess import gate_audio, mask_to_intervals
from pcgkit.segmenter.train import SegTrainConfig, train_segmenter

from conftest import TINY_PATCH


def _patches(n_frames, seed=0, n_mels=4):
    rng = np.random.default_rng(seed)
    spec = Spectrogram(
        frames=rng.standard_normal((n_frames, n_mels)),
        hop_s=0.01,
        n_mels=n_mels,
        source_rate=16000,
    )
    return patchify(spec, (2, n_mels))


def _model(seed=0, width=8, layers=2):
    return SegmenterModel(
        SegmenterHyperparams(width=width, layers=layers, patch_shape=TINY_PATCH), seed=seed
    )


class TestForward:
    @pytest.mark.parametrize("n_frames", [7, 8, 10, 13])
    def test_one_probability_per_frame(self, n_frames):
        probs = seg_forward(_model(), _patches(n_frames))
        assert len(probs) == n_frames

    def test_zero_head_gives_half(self):
        probs = seg_forward(_model(seed=5), _patches(9))
        assert np.allclose(probs.values, 0.5)

    def test_patch_shape_mismatch_names_shapes(self):
        with pytest.raises(UsageError, match=r"expects \(2, 4\).*\(2, 8\)"):
            seg_forward(_model(), _patches(8, n_mels=8))

    def test_reversal_equivariance_with_tied_directions(self):
        # tie the two scan directions so the encoder is symmetric
        model = _model(seed=2)
        rng = np.random.default_rng(3)
        model.params["head.w"].value = rng.standard_normal((2, 8)) * 0.3
        for name, p in model.params.items():
            if ".fwd." in name:
                model.params[name.replace(".fwd.", ".bwd.")].value = p.value.copy()

        from pcgkit.dsp import PatchSequence

        patches = _patches(10, seed=4)  # 5 full patches, no padding
        fwd = seg_forward(model, patches)

        reversed_patches = PatchSequence(
            patches=patches.patches[::-1].copy(),
            patch_shape=patches.patch_shape,
            frame_span=patches.frame_span,
            hop_s=patches.hop_s,
        )
        rev = seg_forward(model, reversed_patches)
        # reversing the patch sequence reverses the output patchwise
        rev_patchwise = rev.values.reshape(-1, 2)[::-1].reshape(-1)
        np.testing.assert_allclose(rev_patchwise, fwd.values, atol=1e-5)


class TestBCE:
    def test_half_probabilities_give_ln2(self):
        probs = FrameProbabilities(values=np.full(16, 0.5), hop_s=0.01)
        mask = FrameMask(values=(np.arange(16) % 2).astype(float), hop_s=0.01)
        assert bce_loss(probs, mask) == pytest.approx(math.log(2.0), abs=1e-9)

    def test_perfect_prediction(self):
        y = np.array([1.0, 0.0, 1.0])
        probs = FrameProbabilities(values=np.abs(y - 1e-7), hop_s=0.01)
        assert bce_loss(probs, FrameMask(values=y, hop_s=0.01)) <= -math.log1p(-1e-7) + 1e-12

    def test_worked_example(self):
        # oracle: independent scalar evaluation
        expected = -(math.log(0.9) + math.log(0.8)) / 2.0
        probs = FrameProbabilities(values=np.array([0.9, 0.2]), hop_s=0.01)
        mask = FrameMask(values=np.array([1.0, 0.0]), hop_s=0.01)
        assert bce_loss(probs, mask) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.164252, abs=5e-7)

    def test_length_mismatch(self):
        probs = FrameProbabilities(values=np.full(3, 0.5), hop_s=0.01)
        with pytest.raises(UsageError, match="mismatch"):
            bce_loss(probs, FrameMask(values=np.zeros(4), hop_s=0.01))

    def test_nonnegative_and_permutation_invariant(self, rng):
        values = rng.uniform(1e-6, 1 - 1e-6, 64)
        y = (rng.random(64) > 0.4).astype(float)
        base = bce_loss(
            FrameProbabilities(values=values, hop_s=0.01), FrameMask(values=y, hop_s=0.01)
        )
        assert base >= 0.0
        perm = rng.permutation(64)
        shuffled = bce_loss(
            FrameProbabilities(values=values[perm], hop_s=0.01),
            FrameMask(values=y[perm], hop_s=0.01),
        )
        assert shuffled == pytest.approx(base, rel=1e-12)

    def test_logit_path_matches_prob_path(self, rng):
        logits = rng.standard_normal(32) * 3
        y = (rng.random(32) > 0.5).astype(float)
        loss, _ = bce_from_logits(logits, y)
        probs = FrameProbabilities(
            values=np.clip(1 / (1 + np.exp(-logits)), 1e-7, 1 - 1e-7), hop_s=0.01
        )
        assert loss == pytest.approx(bce_loss(probs, FrameMask(values=y, hop_s=0.01)), rel=1e-12)


class TestGradients:
    def test_two_layer_toy_gradcheck(self, rng):
        model = _model(seed=1)
        model.params["head.w"].value = rng.standard_normal((2, 8)) * 0.5
        model.params["head.b"].value = rng.standard_normal(2) * 0.1
        patches = _patches(8, seed=2)
        target = (rng.random(8) > 0.5).astype(float)

        def loss_fn(compute_grads):
            logits, cache = model.forward_logits(patches)
            loss, dlogits = bce_from_logits(logits, target)
            if compute_grads:
                model.backward_from_logits(patches, cache, dlogits)
            return loss

        report = finite_difference_check(loss_fn, model.params, step=1e-5)
        assert report["max_rel_error"] <= 1e-4, report


class TestMaskToIntervals:
    def test_direct_thresholding(self):
        probs = FrameProbabilities(values=np.array([0.9, 0.9, 0.1, 0.1, 0.8, 0.8]), hop_s=0.1)
        got = list(mask_to_intervals(probs, 0.5, 0.5, 0.0))
        assert got == [(0.0, pytest.approx(0.2), "unlabeled"), (pytest.approx(0.4), pytest.approx(0.6), "unlabeled")]

    def test_all_below_off(self):
        probs = FrameProbabilities(values=np.full(5, 0.2), hop_s=0.1)
        assert len(mask_to_intervals(probs, 0.5, 0.4, 0.0)) == 0

    def test_hysteresis_against_automaton_oracle(self):
        values = np.array([0.4, 0.7, 0.55, 0.3])
        on, off = 0.6, 0.5

        # oracle: explicit open/closed automaton
        state, opened, oracle = "closed", None, []
        for t, p in enumerate(values):
            if state == "closed" and p >= on:
                state, opened = "open", t
            elif state == "open" and p < off:
                oracle.append((opened, t))
                state = "closed"
        if state == "open":
            oracle.append((opened, len(values)))

        probs = FrameProbabilities(values=values, hop_s=0.1)
        got = [(round(a / 0.1), round(b / 0.1)) for a, b, _ in mask_to_intervals(probs, on, off, 0.0)]
        assert got == oracle == [(1, 3)]

    def test_min_duration_filter(self):
        probs = FrameProbabilities(values=np.array([0.9, 0.1, 0.9, 0.9, 0.9, 0.1]), hop_s=0.1)
        got = mask_to_intervals(probs, 0.5, 0.5, 0.25)
        assert [(a, b) for a, b, _ in got] == [(pytest.approx(0.2), pytest.approx(0.5))]

    def test_threshold_validation(self):
        probs = FrameProbabilities(values=np.full(3, 0.5), hop_s=0.1)
        with pytest.raises(UsageError):
            mask_to_intervals(probs, 0.4, 0.6, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.booleans(), min_size=1, max_size=60))
    def test_exact_mask_roundtrip(self, bits):
        mask = FrameMask(values=np.array(bits, dtype=float), hop_s=0.01)
        got = mask_to_intervals(mask, 0.5, 0.5, 0.0)
        rebuilt = np.zeros(len(bits))
        for a, b, _ in got:
            rebuilt[round(a / 0.01) : round(b / 0.01)] = 1.0
        assert np.array_equal(rebuilt, mask.values)


class TestGateAudio:
    def _recording(self, n=4000, rate=1000):
        rng = np.random.default_rng(0)
        return PCGRecording("p", "mitral", rng.uniform(-0.5, 0.5, n), rate)

    def test_full_coverage_identity(self):
        rec = self._recording()
        intervals = SegmentIntervals(((0.0, rec.duration_s, "unlabeled"),))
        for policy in ("excise", "zero"):
            out = gate_audio(rec, intervals, policy)
            np.testing.assert_array_equal(out.samples, rec.samples)

    def test_zero_policy_zeroes_complement(self):
        rec = self._recording()
        intervals = SegmentIntervals(((0.0, 2.0, "unlabeled"),))
        out = gate_audio(rec, intervals, "zero")
        assert len(out.samples) == len(rec.samples)
        np.testing.assert_array_equal(out.samples[:2000], rec.samples[:2000])
        assert np.all(out.samples[2000:] == 0.0)

    def test_excise_duration_oracle(self):
        # oracle: sample counts from interval arithmetic
        rec = self._recording(n=4000, rate=1000)
        intervals = SegmentIntervals(((0.5, 1.5, "unlabeled"), (2.0, 3.5, "unlabeled")))
        expected = sum(
            round(off * rec.sample_rate) - round(on * rec.sample_rate)
            for on, off, _ in intervals
        )
        out = gate_audio(rec, intervals, "excise")
        assert abs(len(out.samples) - expected) <= len(intervals)
        assert out.duration_s == pytest.approx(2.5, abs=2 / rec.sample_rate)

    def test_excise_empty_intervals_warns_and_returns_input(self, caplog):
        rec = self._recording()
        with caplog.at_level("WARNING"):
            out = gate_audio(rec, SegmentIntervals(), "excise")
        assert out is rec
        assert any("unchanged" in r.message for r in caplog.records)

    def test_unknown_policy(self):
        with pytest.raises(UsageError):
            gate_audio(self._recording(), SegmentIntervals(), "drop")


class TestTraining:
    def _data(self, n=6):
        data = []
        for i in range(n):
            patches = _patches(12, seed=i)
            rng = np.random.default_rng(100 + i)
            data.append((patches, FrameMask(values=(rng.random(12) > 0.5).astype(float), hop_s=0.01)))
        return data

    def test_zero_steps_returns_initialization(self):
        data = self._data()
        config = SegTrainConfig(steps=0, width=8, layers=1, seed=4)
        model, curve = train_segmenter(data, config)
        fresh = train_segmenter(data, config)[0]
        assert curve == []
        for name, p in model.params.items():
            np.testing.assert_array_equal(p.value, fresh.params[name].value)

    def test_same_seed_identical_loss(self):
        data = self._data()
        config = SegTrainConfig(steps=8, batch=2, width=8, layers=1, seed=7, lr=1e-2)
        _, curve_a = train_segmenter(data, config)
        _, curve_b = train_segmenter(data, config)
        assert curve_a[-1]["loss"] == curve_b[-1]["loss"]

    def test_resume_matches_uninterrupted(self):
        data = self._data()
        full_cfg = SegTrainConfig(steps=10, batch=2, width=8, layers=1, seed=3, lr=1e-2)
        model_full, curve_full = train_segmenter(data, full_cfg)

        from dataclasses import replace
        from pcgkit.nn.optim import make_optimizer

        half_cfg = replace(full_cfg, steps=5)
        opt = make_optimizer(full_cfg.optimizer, full_cfg.lr)
        model_half, _ = train_segmenter(data, half_cfg, optimizer=opt)
        model_resumed, curve_resumed = train_segmenter(
            data, full_cfg, model=model_half, optimizer=opt, start_step=5
        )
        assert curve_resumed[-1]["loss"] == curve_full[-1]["loss"]
        for name, p in model_resumed.params.items():
            np.testing.assert_array_equal(p.value, model_full.params[name].value)

    def test_nan_aborts_with_diagnostic(self):
        data = self._data()
        config = SegTrainConfig(steps=3, width=8, layers=1, seed=0)
        model, _ = train_segmenter(data, SegTrainConfig(steps=0, width=8, layers=1, seed=0))
        model.params["head.w"].value[:] = np.nan
        with pytest.raises(NumericError, match="diverged"):
            train_segmenter(data, config, model=model)

    def test_train_fraction_bounds(self):
        with pytest.raises(UsageError):
            SegTrainConfig(train_fraction=0.0)
