"""Audio LM: tokenizer, model mechanics, loss, LoRA, scoring, training."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcgkit.audio_lm.checkpoint import load_lm, save_lm
from pcgkit.audio_lm.loss import next_token_loss
from pcgkit.audio_lm.lora import lora_merge, lora_wrap, role_weight_names
from pcgkit.audio_lm.model import AudioLM, LMConfig, encode_audio
from pcgkit.audio_lm.prompts import answer_tokens, prompt_tokens, render_prompt, training_tokens
from pcgkit.audio_lm.scoring import answer, score_options
from pcgkit.audio_lm.tokenizer import BOS, EOS, ByteTokenizer, TokenSequence
from pcgkit.audio_lm.train import LMTrainConfig, finetune
from pcgkit.errors import DataError, NumericError, UsageError
from pcgkit.nn.functional import log_softmax
from pcgkit.nn.gradcheck import finite_difference_check
from pcgkit.nn.params import checksum
from pcgkit.tasks.build import MCItem

from conftest import make_tiny_lm


def make_item(options=("Present", "Absent", "Unknown", "Present", "Absent", "Unknown"),
              gold_index=1, question="Is a murmur present?"):
    return MCItem(
        task_id="murmur_presence",
        recording_ref="r0",
        question=question,
        options=tuple(options),
        gold_index=gold_index,
        paraphrase_id=0,
        rng_seed=0,
    )


class TestTokenizer:
    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=80))
    def test_round_trip(self, text):
        tok = ByteTokenizer()
        assert tok.detokenize(tok.tokenize(text).ids) == text

    def test_specials(self):
        tok = ByteTokenizer()
        seq = tok.tokenize("hi", bos=True, eos=True)
        assert seq.ids[0] == BOS and seq.ids[-1] == EOS
        assert tok.detokenize(seq.ids) == "hi"


class TestEncodeAudio:
    def test_pool_stride_one(self, tiny_patches):
        model = make_tiny_lm()
        object.__setattr__(model.config, "pool_stride", 1)
        embeds = encode_audio(model, tiny_patches)
        assert embeds.shape == (tiny_patches.n_patches, model.config.width)

    def test_pool_stride_two_halves(self, tiny_patches):
        model = make_tiny_lm()  # pool_stride=2, 5 patches -> 3 groups
        embeds = encode_audio(model, tiny_patches)
        assert embeds.shape[0] == -(-tiny_patches.n_patches // 2)

    def test_zero_audio_determinism(self):
        from pcgkit.dsp import Spectrogram, patchify

        model = make_tiny_lm()
        a = Spectrogram(frames=np.zeros((8, 4)), hop_s=0.01, n_mels=4, source_rate=16000)
        b = Spectrogram(frames=np.zeros((8, 4)), hop_s=0.01, n_mels=4, source_rate=16000)
        np.testing.assert_array_equal(
            encode_audio(model, patchify(a, (2, 4))), encode_audio(model, patchify(b, (2, 4)))
        )

    def test_patch_shape_mismatch(self, tiny_patches):
        from pcgkit.dsp import Spectrogram, patchify

        model = make_tiny_lm()
        spec = Spectrogram(frames=np.zeros((8, 8)), hop_s=0.01, n_mels=8, source_rate=16000)
        with pytest.raises(UsageError, match="patch shape mismatch"):
            encode_audio(model, patchify(spec, (2, 8)))


class TestNextTokenLoss:
    def test_uniform_decoder_gives_log_vocab(self, tiny_patches):
        model = make_tiny_lm(vocab=64)
        model.params["head.w"].value[:] = 0.0  # logits identically zero -> uniform
        tokens = TokenSequence(ids=tuple(range(10)))
        mask = np.ones(10, dtype=bool)
        loss = next_token_loss(model, tiny_patches, tokens, mask)
        assert loss == pytest.approx(math.log(64), abs=1e-12)

    def test_single_position_is_minus_log_p(self, tiny_patches):
        model = make_tiny_lm()
        ids = np.array([BOS] + list(b"answer me"), dtype=np.int64)
        mask = np.zeros(len(ids), dtype=bool)
        mask[4] = True
        # oracle: probability from an independent softmax over the logits row
        logits, _ = model.next_token_logits(tiny_patches, ids)
        p = float(np.exp(log_softmax(logits[4])[ids[4]]))
        loss = next_token_loss(model, tiny_patches, TokenSequence(ids=tuple(ids)), mask)
        assert loss == pytest.approx(-math.log(p), rel=1e-10)

    def test_two_token_answer_mean(self, tiny_patches):
        # the spec arithmetic: probabilities 0.5 and 0.25 average to
        # (ln 2 + ln 4) / 2 = 1.039721; checked against the model by the
        # same independent-softmax oracle as above
        assert (math.log(2) + math.log(4)) / 2 == pytest.approx(1.039721, abs=5e-7)

        model = make_tiny_lm(seed=9)
        ids = np.array([BOS] + list(b"two token span"), dtype=np.int64)
        mask = np.zeros(len(ids), dtype=bool)
        mask[[6, 11]] = True
        logits, _ = model.next_token_logits(tiny_patches, ids)
        expected = -(log_softmax(logits[6])[ids[6]] + log_softmax(logits[11])[ids[11]]) / 2
        loss = next_token_loss(model, tiny_patches, TokenSequence(ids=tuple(ids)), mask)
        assert loss == pytest.approx(float(expected), rel=1e-10)

    def test_no_supervised_positions(self, tiny_patches):
        model = make_tiny_lm()
        tokens = TokenSequence(ids=(1, 2, 3))
        with pytest.raises(UsageError, match="at least one supervised"):
            next_token_loss(model, tiny_patches, tokens, np.zeros(3, dtype=bool))

    def test_mask_length_mismatch(self, tiny_patches):
        model = make_tiny_lm()
        with pytest.raises(UsageError, match="match"):
            next_token_loss(model, tiny_patches, TokenSequence(ids=(1, 2)), np.ones(3, dtype=bool))


class TestCausality:
    def test_token_perturbation_only_affects_later_logits(self, tiny_patches, rng):
        model = make_tiny_lm(seed=5)
        ids = rng.integers(0, 255, size=12)
        logits_a, _ = model.next_token_logits(tiny_patches, ids)
        j = 6
        perturbed = ids.copy()
        perturbed[j] = (perturbed[j] + 1) % 255
        logits_b, _ = model.next_token_logits(tiny_patches, perturbed)
        # rows t <= j depend only on tokens strictly before t
        np.testing.assert_array_equal(logits_a[: j + 1], logits_b[: j + 1])
        assert np.abs(logits_a[j + 1 :] - logits_b[j + 1 :]).max() > 0

    def test_audio_perturbation_affects_all_text_logits(self, tiny_patches, rng):
        from pcgkit.dsp import PatchSequence

        model = make_tiny_lm(seed=5)
        ids = rng.integers(0, 255, size=8)
        logits_a, _ = model.next_token_logits(tiny_patches, ids)
        other = PatchSequence(
            patches=tiny_patches.patches + 0.5,
            patch_shape=tiny_patches.patch_shape,
            frame_span=tiny_patches.frame_span,
            hop_s=tiny_patches.hop_s,
        )
        logits_b, _ = model.next_token_logits(other, ids)
        assert np.all(np.abs(logits_a - logits_b).max(axis=1) > 0)


class TestGradients:
    def test_miniature_gradcheck_all_parameters(self, rng):
        from pcgkit.dsp import Spectrogram, patchify

        model = make_tiny_lm(seed=3, vocab=32, width=16, blocks=1, max_len=64)
        spec = Spectrogram(
            frames=rng.standard_normal((8, 4)), hop_s=0.01, n_mels=4, source_rate=16000
        )
        patches = patchify(spec, (2, 4))
        ids = tuple(int(x) for x in rng.integers(0, 32, size=10))
        mask = np.zeros(10, dtype=bool)
        mask[5:] = True

        def loss_fn(compute_grads):
            return next_token_loss(
                model, patches, TokenSequence(ids=ids), mask, compute_grads=compute_grads
            )

        report = finite_difference_check(loss_fn, model.params, step=1e-5)
        assert report["max_rel_error"] <= 1e-4, report


class TestLoRA:
    def test_zero_init_identity(self, tiny_patches):
        model = make_tiny_lm(seed=7)
        item = make_item()
        before = score_options(model, tiny_patches, item)
        lora_wrap(model, rank=2, alpha=4.0)
        after = score_options(model, tiny_patches, item)
        np.testing.assert_allclose(after, before, atol=1e-6)

    def test_trainable_count_formula(self):
        model = make_tiny_lm()
        rank = 3
        targets = ("attn_q", "attn_v", "enc_in")
        lora_wrap(model, rank=rank, alpha=6.0, targets=targets)
        expected = 0
        for role in targets:
            for name in role_weight_names(model, role):
                d_out, d_in = model.adapters[name].base.value.shape
                expected += rank * (d_in + d_out)
        got = sum(p.size for p in model.params.values() if p.trainable)
        assert got == expected

    def test_everything_else_frozen(self):
        model = make_tiny_lm()
        lora_wrap(model, rank=2, alpha=4.0)
        for name, p in model.params.items():
            assert p.trainable == name.endswith(("lora_A", "lora_B"))

    def test_unknown_role_lists_valid(self):
        model = make_tiny_lm()
        with pytest.raises(UsageError, match="valid roles"):
            lora_wrap(model, rank=2, alpha=4.0, targets=("attn_q", "nonsense"))

    def test_rank_bound_after_training(self, rng):
        model = make_tiny_lm()
        rank = 2
        lora_wrap(model, rank=rank, alpha=4.0, targets=("attn_q",))
        bases = {n: a.base.value.copy() for n, a in model.adapters.items()}
        for adapter in model.adapters.values():  # arbitrary updates
            adapter.A.value += rng.standard_normal(adapter.A.value.shape)
            adapter.B.value += rng.standard_normal(adapter.B.value.shape)
        # oracle: singular values of the delta via an independent SVD
        for name, adapter in model.adapters.items():
            delta = adapter.effective() - bases[name]
            singular = np.linalg.svd(delta, compute_uv=False)
            assert np.all(singular[rank:] <= 1e-8 * singular[0])

    def test_merge_equivalence_and_idempotence(self, tiny_patches, rng):
        model = make_tiny_lm(seed=8)
        lora_wrap(model, rank=2, alpha=4.0)
        for adapter in model.adapters.values():
            adapter.B.value += rng.standard_normal(adapter.B.value.shape) * 0.02
        item = make_item()
        adapted = score_options(model, tiny_patches, item)
        lora_merge(model)
        merged = score_options(model, tiny_patches, item)
        np.testing.assert_allclose(merged, adapted, atol=1e-5)
        assert not model.adapters
        with pytest.raises(UsageError, match="no adapters"):
            lora_merge(model)

    def test_merge_argmax_on_random_items(self, rng):
        from pcgkit.dsp import Spectrogram, patchify

        model = make_tiny_lm(seed=11)
        lora_wrap(model, rank=2, alpha=4.0)
        for adapter in model.adapters.values():
            adapter.B.value += rng.standard_normal(adapter.B.value.shape) * 0.05

        cases = []
        labels = ("Present", "Absent", "Unknown")
        for i in range(50):
            spec = Spectrogram(
                frames=np.random.default_rng(i).standard_normal((6, 4)),
                hop_s=0.01, n_mels=4, source_rate=16000,
            )
            patches = patchify(spec, (2, 4))
            opts = tuple(labels[(i + k) % 3] for k in range(6))
            cases.append((patches, make_item(options=opts, gold_index=0)))
        before = [answer(model, p, it) for p, it in cases]
        lora_merge(model)
        after = [answer(model, p, it) for p, it in cases]
        assert before == after

    def test_merge_of_zero_b_equals_base(self):
        model = make_tiny_lm()
        bases = {}
        lora_wrap(model, rank=2, alpha=4.0, targets=("attn_q",))
        for name, adapter in model.adapters.items():
            bases[name] = adapter.base.value.copy()
        lora_merge(model)
        for name, base in bases.items():
            np.testing.assert_array_equal(model.params[name].value, base)


class TestScoring:
    def test_answer_is_argmax_with_low_tie(self, tiny_patches):
        model = make_tiny_lm()
        model.params["head.w"].value[:] = 0.0  # uniform decoder
        item = make_item(options=("Present",) * 6, gold_index=0)
        scores = score_options(model, tiny_patches, item)
        # all answer spans have equal length and a uniform decoder: exact tie
        assert np.ptp(scores) == 0.0
        assert answer(model, tiny_patches, item) == 0

    def test_uniform_decoder_equal_length_options(self, tiny_patches):
        model = make_tiny_lm()
        model.params["head.w"].value[:] = 0.0
        item = make_item(options=("alpha", "bravo", "delta", "gamma", "omega", "kappa"))
        scores = score_options(model, tiny_patches, item)
        assert np.ptp(scores) <= 1e-9

    def test_scores_probabilistically_consistent(self, tiny_patches):
        # exp(log softmax) over the next-token distribution sums to one
        model = make_tiny_lm()
        item = make_item()
        ids = prompt_tokens(model.tokenizer, item.question, item.options).ids
        _, last_logits = model.prefix_forward(tiny_patches, ids)
        probs = np.exp(log_softmax(last_logits))
        assert probs.sum() == pytest.approx(1.0, abs=1e-6)

    def test_matches_brute_force_rescoring_oracle(self, tiny_patches):
        model = make_tiny_lm(seed=13)
        items = [
            make_item(options=tuple(np.roll(["Present", "Absent", "Unknown"] * 2, i)), gold_index=0)
            for i in range(8)
        ]

        def brute_force(item):
            scores = []
            p_ids = prompt_tokens(model.tokenizer, item.question, item.options).ids
            for k, label in enumerate(item.options):
                a_ids = answer_tokens(model.tokenizer, k, label).ids
                ids = np.asarray(p_ids + a_ids)
                logits, _ = model.next_token_logits(tiny_patches, ids)
                lp = log_softmax(logits, axis=-1)
                span = np.arange(len(p_ids), len(ids))
                scores.append(float(lp[span, ids[span]].sum()) / len(a_ids))
            return scores

        for item in items:
            fast = score_options(model, tiny_patches, item)
            slow = brute_force(item)
            np.testing.assert_allclose(fast, slow, atol=1e-9)
            assert answer(model, tiny_patches, item) == int(np.argmax(slow))

    def test_scoring_does_not_mutate_prefix_cache(self, tiny_patches):
        model = make_tiny_lm()
        item = make_item()
        once = score_options(model, tiny_patches, item)
        twice = score_options(model, tiny_patches, item)
        np.testing.assert_array_equal(once, twice)

    def test_prompt_renders_lettered_options(self):
        text = render_prompt("Q?", ["a", "b", "c", "d", "e", "f"])
        assert "A. a" in text and "F. f" in text and text.endswith("Answer:")


class TestFinetune:
    def _pairs(self, n=4):
        from pcgkit.ingest.synth import SynthSpec, synthesize_pcg

        pairs = []
        for i in range(n):
            rec, _, _ = synthesize_pcg(SynthSpec(seed=200 + i, n_beats=1, beat_period_s=0.6))
            pairs.append((rec, make_item(gold_index=i % 6)))
        return pairs

    def test_requires_wrapped_model(self):
        model = make_tiny_lm()
        with pytest.raises(UsageError, match="LoRA-wrapped"):
            finetune(model, self._pairs(), LMTrainConfig(steps=1))

    def test_lr_zero_leaves_adapters_unchanged(self):
        model = lora_wrap(make_tiny_lm(), rank=2, alpha=4.0)
        before = {n: (a.A.value.copy(), a.B.value.copy()) for n, a in model.adapters.items()}
        finetune(model, self._pairs(), LMTrainConfig(lr=0.0, steps=3, batch=2, seed=1))
        for name, adapter in model.adapters.items():
            np.testing.assert_array_equal(adapter.A.value, before[name][0])
            np.testing.assert_array_equal(adapter.B.value, before[name][1])

    def test_frozen_checksums_stable_across_training(self):
        model = lora_wrap(make_tiny_lm(), rank=2, alpha=4.0)
        frozen_before = checksum(model.params, only_frozen=True)
        finetune(
            model, self._pairs(), LMTrainConfig(lr=1e-3, steps=4, batch=2, seed=2, train_projector=False)
        )
        assert checksum(model.params, only_frozen=True) == frozen_before

    def test_nan_raises_numeric_error(self):
        model = lora_wrap(make_tiny_lm(), rank=2, alpha=4.0)
        next(iter(model.adapters.values())).A.value[:] = np.inf
        with pytest.raises(NumericError, match="diverged"):
            finetune(model, self._pairs(), LMTrainConfig(lr=1e-3, steps=2, batch=2))

    def test_same_seed_same_curve(self):
        pairs = self._pairs()
        curves = []
        for _ in range(2):
            model = lora_wrap(make_tiny_lm(seed=4), rank=2, alpha=4.0)
            _, curve = finetune(model, pairs, LMTrainConfig(lr=1e-3, steps=5, batch=2, seed=9))
            curves.append(curve[-1]["loss"])
        assert curves[0] == curves[1]


class TestCheckpoint:
    def test_full_round_trip(self, tmp_path, tiny_patches):
        model = lora_wrap(make_tiny_lm(seed=6), rank=2, alpha=4.0)
        rng = np.random.default_rng(0)
        for adapter in model.adapters.values():
            adapter.B.value += rng.standard_normal(adapter.B.value.shape) * 0.03
        item = make_item()
        want = score_options(model, tiny_patches, item)

        path = tmp_path / "lm.ckpt"
        save_lm(path, model, train_meta={"step": 3})
        loaded, meta, _ = load_lm(path)
        got = score_options(loaded, tiny_patches, item)
        np.testing.assert_array_equal(got, want)
        assert meta["train"]["step"] == 3
        assert meta["adapters"]

    def test_adapter_only_export(self, tmp_path, tiny_patches):
        model = lora_wrap(make_tiny_lm(seed=6), rank=2, alpha=4.0)
        rng = np.random.default_rng(1)
        for adapter in model.adapters.values():
            adapter.B.value += rng.standard_normal(adapter.B.value.shape) * 0.03
        item = make_item()
        want = score_options(model, tiny_patches, item)

        path = tmp_path / "adapters.ckpt"
        save_lm(path, model, include_base=False)
        with pytest.raises(DataError, match="base model is required"):
            load_lm(path)
        base = make_tiny_lm(seed=6)  # same init seed reconstructs the base
        loaded, _, _ = load_lm(path, base_model=base)
        np.testing.assert_array_equal(score_options(loaded, tiny_patches, item), want)

    def test_training_tokens_mask_covers_answer(self):
        tok = ByteTokenizer()
        item = make_item()
        tokens, mask = training_tokens(tok, item.question, item.options, item.gold_index)
        answer_text = tok.detokenize(np.asarray(tokens.ids)[mask])
        assert answer_text == "\nB. Absent"
        assert tokens.ids[-1] == EOS and mask[-1]
