"""
Tests for diffusion noise optimization, its regularizers and traces
"""

import numpy as np
import pytest

from hoi_dno.dno import (
    DnoConfig,
    NoiseState,
    decorrelation_reg,
    decorrelation_terms,
    difference_penalty,
    dno_optimize,
    objective_trace,
    read_trace,
    trace_config_hash,
)
from hoi_dno.exceptions import ArtifactError, ConfigError, EncodingError, OptimizationDivergedError
from hoi_dno.numerics import Tensor
from tests.helpers import assert_grads_match


def doubled(x):
    return x * 2.0


def distance_to(target):
    def objective(out):
        d = out - target
        value = (d * d).sum()
        return value, {"distance": value.item()}

    return objective


def plain(**overrides):
    return DnoConfig(**{"perturbation": 0.0, "difference_penalty": 0.0, "decorrelation": 0.0, "record_time": False, **overrides})


def test_optimizer_reduces_objective():
    """Test that Adam on the noise drives a quadratic objective down"""
    result = dno_optimize(np.zeros((4, 3)), doubled, distance_to(1.4), plain(iterations=150, lr=0.05, anneal=True))
    first = result.records[0].objective
    assert first == pytest.approx(12 * 1.96)
    assert result.best_objective < 0.01 * first
    np.testing.assert_allclose(result.output_best, result.x_best * 2.0)


def test_best_iterate_is_returned():
    """Test that the lowest recorded objective is the reported one"""
    result = dno_optimize(np.zeros(3), doubled, distance_to(1.0), plain(iterations=40, lr=0.3))
    objectives = [r.objective for r in result.records]
    assert result.best_objective == min(objectives)
    assert result.best_iteration == int(np.argmin(objectives))
    assert result.records[-1].terms["distance"] == pytest.approx(objectives[-1])


def test_zero_iterations_evaluates_initial_noise():
    """Test the degenerate run without steps"""
    result = dno_optimize(np.ones(2), doubled, distance_to(0.0), plain(iterations=0))
    assert result.records == []
    assert result.best_iteration == -1
    assert result.best_objective == pytest.approx(8.0)
    np.testing.assert_array_equal(result.x_final, np.ones(2))


def test_flips_are_counted_between_iterates():
    """Test the per-iteration Hamming distance of thresholded contact bits"""
    result = dno_optimize(
        np.zeros(2), lambda x: x, distance_to(1.0), plain(iterations=10, lr=0.2), bits=lambda out: out[None]
    )
    assert result.records[0].flips == 0
    assert sum(r.flips for r in result.records) >= 2


def test_divergence_dumps_iterate(tmp_path):
    """Test that a NaN objective stops the run and saves the iterate"""

    def broken(out):
        return out.sum() * float("nan"), {}

    with pytest.raises(OptimizationDivergedError) as exc:
        dno_optimize(np.zeros(3), doubled, broken, plain(iterations=5), dump_dir=tmp_path)
    assert exc.value.iteration == 0
    np.testing.assert_array_equal(np.load(exc.value.dump_path), np.zeros(3))


def test_ceiling_flags_poor_runs():
    """Test that a best objective above the ceiling is flagged"""
    result = dno_optimize(np.zeros(2), doubled, distance_to(5.0), plain(iterations=1, lr=0.01, ceiling=1.0))
    assert result.above_ceiling
    assert not result.converged


def test_runs_are_reproducible():
    """Test that equal seeds give equal traces, perturbation included"""
    config = plain(iterations=6, lr=0.1, perturbation=0.01, decorrelation=1e-3, seed=4)
    x0 = np.random.default_rng(0).normal(size=(2, 5, 3))
    a = dno_optimize(x0, doubled, distance_to(0.3), config)
    b = dno_optimize(x0, doubled, distance_to(0.3), config)
    assert a.records == b.records
    np.testing.assert_array_equal(a.x_final, b.x_final)


def test_resumed_state_keeps_moments():
    """Test that a NoiseState carries its iterate and Adam state across calls"""
    state = NoiseState.draw(1, 4, 3, seed=2)
    start = state.x.copy()
    dno_optimize(state, doubled, distance_to(0.0), plain(iterations=3, lr=0.1))
    assert state.distance() > 0.0
    np.testing.assert_array_equal(state.x_init, start)
    assert state.adam.step == 3


def test_noise_state_checks():
    """Test mismatched shapes and non-finite noise"""
    with pytest.raises(EncodingError):
        NoiseState(x=np.zeros((2, 3)), x_init=np.zeros((3, 2)))
    with pytest.raises(EncodingError):
        NoiseState(x=np.full(2, np.inf), x_init=np.zeros(2))
    assert NoiseState.draw(3, 4, 5).x.shape == (3, 4, 5)


def test_decorrelation_prefers_white_noise():
    """Test that a Gaussian draw scores low and a random walk scores high"""
    white = np.random.default_rng(1).standard_normal((400, 8))
    walk = np.cumsum(white, axis=0)
    assert decorrelation_reg(Tensor(white)).item() < 0.01
    assert decorrelation_reg(Tensor(walk)).item() > 1.0
    terms = decorrelation_terms(Tensor(walk), blocks=[slice(0, 4), slice(4, 8)])
    assert terms["autocorr"].item() > 0.9


def test_regularizer_gradients():
    """Test the decorrelation and difference gradients against finite differences"""
    x = np.random.default_rng(2).normal(size=(5, 4))
    assert_grads_match(lambda t: decorrelation_reg(t, [slice(0, 2), slice(2, 4)]), x)
    anchor = np.ones((5, 4))
    assert_grads_match(lambda t: difference_penalty(t, anchor), x)
    assert difference_penalty(Tensor(anchor + 0.5), anchor).item() == pytest.approx(5.0)


def test_config_validation():
    """Test bad values and unknown keys with their key paths"""
    with pytest.raises(ConfigError):
        DnoConfig(iterations=-1)
    with pytest.raises(ConfigError) as exc:
        DnoConfig.from_dict({"lr": -0.1}, prefix="dno.phase1")
    assert exc.value.key_path == "dno.phase1.lr"
    with pytest.raises(ConfigError) as exc:
        DnoConfig.from_dict({"momentum": 0.9})
    assert exc.value.key_path == "dno.momentum"
    assert DnoConfig.omomo().perturbation == pytest.approx(1e-5)


def test_trace_file(tmp_path):
    """Test writing and reading a trace with its config hash"""
    result = dno_optimize(np.zeros(2), doubled, distance_to(1.0), plain(iterations=3, lr=0.1))
    path = objective_trace(result.records, tmp_path / "trace.csv", config_hash="abc123")
    assert trace_config_hash(path) == "abc123"
    assert read_trace(path) == result.records
    header = path.read_text(encoding="utf-8").splitlines()[1]
    assert header == "iteration,total,objective,distance,decorrelation,difference,flips,wall_time"


def test_malformed_traces(tmp_path):
    """Test missing files, missing columns and bad values"""
    with pytest.raises(FileNotFoundError):
        read_trace(tmp_path / "none.csv")
    (tmp_path / "cols.csv").write_text("iteration,total\n0,1.0\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_trace(tmp_path / "cols.csv")
    (tmp_path / "vals.csv").write_text(
        "iteration,total,objective,decorrelation,difference,flips,wall_time\nzero,1,1,0,0,0,0\n", encoding="utf-8"
    )
    with pytest.raises(ArtifactError):
        read_trace(tmp_path / "vals.csv")


def test_identity_generator_reaches_target():
    """Test that default settings drive x_T onto c when the generator is the identity"""
    c = np.random.default_rng(5).normal(size=(4, 3))
    result = dno_optimize(np.zeros((4, 3)), lambda x: x, distance_to(c), DnoConfig(iterations=500, record_time=False))
    assert np.max(np.abs(result.x_best - c)) < 1e-3


def test_zero_objective_keeps_initial_noise():
    """Test that without objective, perturbation and regularizers the noise never moves"""
    x0 = np.random.default_rng(6).normal(size=(3, 2))
    result = dno_optimize(x0, doubled, lambda out: ((out * 0.0).sum(), {}), plain(iterations=5))
    np.testing.assert_array_equal(result.x_best, x0)
    np.testing.assert_array_equal(result.x_final, x0)


def test_decorrelation_of_constant_noise():
    """Test the mean, variance and autocorrelation terms on an all-ones input"""
    terms = decorrelation_terms(Tensor(np.ones((6, 4))))
    assert terms["mean"].item() == 1.0
    assert terms["var"].item() == 1.0
    assert terms["autocorr"].item() == pytest.approx(1.0, abs=1e-7)
    assert decorrelation_reg(Tensor(np.ones((6, 4)))).item() == pytest.approx(3.0, abs=1e-7)
