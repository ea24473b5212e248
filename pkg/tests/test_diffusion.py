"""
Tests for the noise schedule, samplers, denoiser, training and checkpoints
"""

import numpy as np
import pytest

from hoi_dno.datasynth import Corpus
from hoi_dno.diffusion import (
    ConditionSet,
    Denoiser,
    DenoiserConfig,
    Trainer,
    WindowSampler,
    classifier_guidance_sample,
    cosine_schedule,
    ddim_sample,
    ddim_update,
    ddpm_sample,
    fit_normalizer,
    load_checkpoint,
    q_sample,
    rollout,
    save_checkpoint,
    shuffled_labels,
    train_model,
)
from hoi_dno.exceptions import ArtifactError, ConfigError, EncodingError, ScheduleError, ShapeError
from hoi_dno.numerics import Tape, Tensor, backward
from hoi_dno.representation import FeatureLayout, FeatureNormalizer, RootTransform
from tests.helpers import assert_grads_match

D = 6


def stand_in_cond(n_points=16, prompt_id=0):
    points = np.random.default_rng(0).normal(size=(n_points, 3))
    return ConditionSet(points=points, prompt_id=prompt_id, root=RootTransform.identity((0.0, 0.0, 0.95)))


def linear_denoiser(prev, x_t, cond):
    return x_t * 0.5 + prev.sum(axis=0) * 0.1


def test_cosine_schedule_shape():
    """Test that alpha-bar starts at one and decreases strictly"""
    schedule = cosine_schedule(8)
    assert schedule.T == 8
    assert schedule.alpha_bar(0) == 1.0
    assert np.all(np.diff(schedule.alpha_bars) < 0)
    assert 0.0 < schedule.beta(1) <= 0.999


def test_schedule_bounds():
    """Test steps outside [0, T]"""
    schedule = cosine_schedule(4)
    with pytest.raises(ScheduleError):
        schedule.alpha_bar(5)
    with pytest.raises(ScheduleError):
        schedule.beta(0)
    with pytest.raises(ScheduleError):
        cosine_schedule(0)


def test_q_sample_at_step_zero_is_clean():
    """Test forward noising at t = 0"""
    x0 = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(q_sample(cosine_schedule(4), x0, 0, np.ones_like(x0)), x0)


def test_ddim_with_perfect_denoiser_returns_target():
    """Test that DDIM lands on the clean sample when the model predicts it exactly"""
    target = np.random.default_rng(1).normal(size=(4, D))
    out = ddim_sample(lambda prev, x, c: Tensor(target), np.zeros((4, D)), np.zeros((2, D)), stand_in_cond(), cosine_schedule(5))
    np.testing.assert_allclose(out.data, target)


def test_ddim_update_to_step_zero():
    """Test that the last deterministic step returns the x0 estimate"""
    x0 = Tensor(np.ones(3))
    assert ddim_update(cosine_schedule(3), Tensor(np.zeros(3)), x0, 1, 0) is x0


def test_ddim_gradient_wrt_noise():
    """Test d(final sample)/d(x_T) through every step against finite differences"""
    prev = np.random.default_rng(2).normal(size=(2, D))
    x_T = np.random.default_rng(3).normal(size=(4, D))
    schedule = cosine_schedule(4)

    def objective(x):
        return (ddim_sample(linear_denoiser, x, Tensor(prev), stand_in_cond(), schedule) ** 2).sum()

    assert_grads_match(objective, x_T)


def test_checkpointed_and_recorded_gradients_agree():
    """Test that step recomputation does not change gradients"""
    x_T = np.random.default_rng(4).normal(size=(4, D))
    prev = Tensor(np.zeros((2, D)))
    grads = []
    for checkpointed in (True, False):
        leaf = Tensor(x_T, requires_grad=True)
        with Tape():
            out = ddim_sample(linear_denoiser, leaf, prev, stand_in_cond(), cosine_schedule(4), checkpointed=checkpointed)
            grads.append(backward((out * out).sum())[leaf])
    np.testing.assert_allclose(grads[0], grads[1], rtol=1e-12)


def test_denoiser_gradient_wrt_noisy_segment():
    """Test d||x0_hat||^2 / d(x_t) of the tiny denoiser against finite differences"""
    model = Denoiser(DenoiserConfig.tiny(D, 3), seed=2)
    rng = np.random.default_rng(8)
    prev = Tensor(rng.normal(size=(2, D)))
    x_t = rng.normal(size=(8, D))
    cond = stand_in_cond().at(0.5)

    def objective(x):
        out = model(prev, x, cond)
        return (out * out).sum()

    assert_grads_match(objective, x_t, rtol=1e-3)


def test_ddim_gradient_through_denoiser():
    """Test d(objective)/d(x_T) through the checkpointed T-step unroll of the tiny denoiser"""
    config = DenoiserConfig.tiny(D, 3)
    assert (config.segment_length, config.hidden, config.steps) == (8, 32, 4)
    model = Denoiser(config, seed=3)
    rng = np.random.default_rng(9)
    prev = Tensor(rng.normal(size=(2, D)))
    target = rng.normal(size=(8, D))
    x_T = rng.normal(size=(8, D))
    schedule = cosine_schedule(config.steps)

    def objective(x):
        d = ddim_sample(model, x, prev, stand_in_cond(), schedule) - target
        return (d * d).sum()

    assert_grads_match(objective, x_T, rtol=1e-3)


def test_rollout_stitches_segments():
    """Test the stitched length and that each segment sees the previous frames"""
    seen = []

    def record(prev, x_t, cond):
        seen.append(prev.data.copy())
        return x_t * 0.0 + float(len(seen))

    prefix = np.full((2, D), -1.0)
    noises = [np.zeros((3, D))] * 3
    out = rollout(record, prefix, stand_in_cond(), noises, cosine_schedule(1))
    assert out.shape == (2 + 3 * 3, D)
    np.testing.assert_array_equal(seen[0], prefix)
    np.testing.assert_array_equal(seen[1], np.full((2, D), 1.0))


def test_rollout_rederives_root():
    """Test that later segments get the root computed from the stitched frames"""
    roots = []

    def record(prev, x_t, cond):
        roots.append(cond.root.translation[0])
        return x_t

    rollout(
        record, np.zeros((2, D)), stand_in_cond(), [np.zeros((3, D))] * 2, cosine_schedule(1),
        next_root=lambda stitched, start: RootTransform.identity((float(start), 0.0, 0.0)),
    )
    assert roots == [0.0, 3.0]


def test_ddpm_scale_zero_matches_unguided():
    """Test that a guide with scale 0 reproduces the unguided sample"""
    schedule = cosine_schedule(6)
    x_T = np.random.default_rng(5).normal(size=(4, D))
    prev = np.zeros((2, D))
    plain = ddpm_sample(linear_denoiser, x_T, prev, stand_in_cond(), schedule, np.random.default_rng(7))
    guided = ddpm_sample(
        linear_denoiser, x_T, prev, stand_in_cond(), schedule, np.random.default_rng(7),
        guide=lambda x0: (x0 * x0).sum(), scale=0.0,
    )
    np.testing.assert_array_equal(plain.data, guided.data)


def test_guidance_pulls_toward_objective():
    """Test that guidance toward zero shrinks the sample"""
    prefix = np.zeros((2, D))
    kwargs = dict(n_segments=1, segment_shape=(4, D), seed=3, steps=20)
    plain = classifier_guidance_sample(linear_denoiser, prefix, stand_in_cond(), objective=None, scale=0.0, **kwargs)
    guided = classifier_guidance_sample(
        linear_denoiser, prefix, stand_in_cond(), objective=lambda n, ctx, x0: (x0 * x0).sum(), scale=0.5, **kwargs
    )
    assert guided.shape == (6, D)
    assert np.abs(guided.data[2:]).sum() < np.abs(plain.data[2:]).sum()
    with pytest.raises(ValueError):
        classifier_guidance_sample(linear_denoiser, prefix, stand_in_cond(), objective=None, scale=-1.0, **kwargs)


def test_denoiser_config_validation():
    """Test head divisibility and positive sizes"""
    with pytest.raises(ConfigError):
        DenoiserConfig.tiny(D, 3, hidden=30, heads=4)
    with pytest.raises(ConfigError):
        DenoiserConfig.tiny(D, 3, steps=0)


def test_denoiser_output_and_shape_checks():
    """Test the predicted segment shape and rejected inputs"""
    model = Denoiser(DenoiserConfig.tiny(D, 3))
    out = model(np.zeros((2, D)), np.zeros((8, D)), stand_in_cond())
    assert out.shape == (8, D)
    with pytest.raises(ShapeError):
        model(np.zeros((3, D)), np.zeros((8, D)), stand_in_cond())
    with pytest.raises(ShapeError):
        model(np.zeros((2, D)), np.zeros((8, D)), stand_in_cond(prompt_id=3))


def test_denoiser_ignores_point_order():
    """Test invariance to permutations of the object point set"""
    model = Denoiser(DenoiserConfig.tiny(D, 3), seed=1)
    rng = np.random.default_rng(6)
    prev, x_t = rng.normal(size=(2, D)), rng.normal(size=(8, D))
    cond = stand_in_cond()
    permuted = ConditionSet(points=cond.points[::-1].copy(), prompt_id=0, root=cond.root)
    np.testing.assert_allclose(model(prev, x_t, cond).data, model(prev, x_t, permuted).data, atol=1e-10)


def test_denoiser_init_is_seeded():
    """Test deterministic initialization"""
    config = DenoiserConfig.tiny(D, 3)
    a, b = Denoiser(config, seed=4), Denoiser(config, seed=4)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_shuffled_labels_permutes_prompts(tiny_corpus):
    """Test that the control corpus keeps features and permutes prompts"""
    control = shuffled_labels(tiny_corpus, seed=1)
    assert sorted(e.prompt for e in control.entries) == sorted(e.prompt for e in tiny_corpus.entries)
    for original, shuffled in zip(tiny_corpus.entries, control.entries):
        assert shuffled.features is original.features


def test_training_trace_is_finite(tiny_corpus, toy_rig, tiny_config):
    """Test a few training steps on the tiny model"""
    corpus = tiny_corpus.split("train")
    config = tiny_config.model.denoiser_config(FeatureLayout.for_rig(toy_rig).dim, len(corpus.vocab))
    denoiser, normalizer, trace = train_model(corpus, toy_rig, config, cosine_schedule(4), 2, lr=1e-3, batch_size=2)
    assert len(trace) == 2
    assert all(np.isfinite(trace))
    assert normalizer.dim == config.feature_dim


def one_episode_trainer(corpus, rig, lr, seed=0):
    single = Corpus(path=corpus.path, vocab=corpus.vocab, entries=corpus.entries[:1])
    config = DenoiserConfig.tiny(FeatureLayout.for_rig(rig).dim, len(corpus.vocab))
    windows = WindowSampler(single, rig, config, fit_normalizer(single))
    return Trainer(Denoiser(config, seed=seed), cosine_schedule(config.steps), windows, lr=lr, batch_size=2, seed=seed)


def test_zero_learning_rate_leaves_params(tiny_corpus, toy_rig):
    """Test that an epoch at lr 0 keeps every parameter bit for bit"""
    trainer = one_episode_trainer(tiny_corpus, toy_rig, lr=0.0)
    before = {k: v.copy() for k, v in trainer.denoiser.params.items()}
    trace = trainer.train_epoch(3)
    assert len(trace) == 3
    for name, value in trainer.denoiser.params.items():
        np.testing.assert_array_equal(value, before[name], err_msg=name)


def test_training_reduces_loss_on_one_episode(tiny_corpus, toy_rig):
    """Test that L_simple on fixed windows and noise drops after fitting a single episode"""
    trainer = one_episode_trainer(tiny_corpus, toy_rig, lr=3e-3)
    held = trainer.windows.fixed(4, seed=1)
    before = trainer.evaluate(held, seed=2)
    trainer.train_epoch(60)
    after = trainer.evaluate(held, seed=2)
    assert after < 0.8 * before


def test_window_sampler_needs_long_episodes(tiny_corpus, toy_rig):
    """Test that windows longer than every episode are refused"""
    config = DenoiserConfig.tiny(FeatureLayout.for_rig(toy_rig).dim, 9, segment_length=500)
    with pytest.raises(EncodingError):
        WindowSampler(tiny_corpus, toy_rig, config, FeatureNormalizer.identity(config.feature_dim))


def test_checkpoint_file(tmp_path, tiny_checkpoint_path, tiny_checkpoint, toy_rig, omomo_rig):
    """Test that a checkpoint re-saves byte for byte and records its rig"""
    copy = tmp_path / "copy.ck"
    ck = tiny_checkpoint
    save_checkpoint(copy, ck.denoiser, ck.normalizer, ck.vocab, toy_rig, ck.run_config, ck.config_hash, ck.meta)
    assert copy.read_bytes() == tiny_checkpoint_path.read_bytes()
    assert ck.config.prefix_length == 2
    with pytest.raises(ArtifactError):
        load_checkpoint(tiny_checkpoint_path, rig=omomo_rig)


def test_damaged_checkpoints(tmp_path, tiny_checkpoint_path):
    """Test missing, foreign and truncated checkpoint files"""
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "none.ck")
    raw = tiny_checkpoint_path.read_bytes()
    (tmp_path / "foreign.ck").write_bytes(b"ABCD" + raw[4:])
    (tmp_path / "short.ck").write_bytes(raw[:-5])
    for name in ("foreign.ck", "short.ck"):
        with pytest.raises(ArtifactError):
            load_checkpoint(tmp_path / name)
