import time

import numpy as np
import pytest

from helpers import synthetic_csv
from quantbench import bench
from quantbench import model as lr
from quantbench.bench import ExperimentConfig, Technique
from quantbench.core import Matrix, Precision
from quantbench.errors import CellError, ConfigError, ParameterError, StratificationError


def small_config(tmp_path, **kw):
    return ExperimentConfig(dataset=str(synthetic_csv(tmp_path / "syn.csv")),
                            target_column="label", timing_repetitions=1, **kw)


# -- split ---------------------------------------------------------------------


def test_split_ten_rows():
    x = Matrix(np.arange(20.0).reshape(10, 2))
    y = [0, 1] * 5
    a = bench.split(x, y, 0.1, seed=3)
    b = bench.split(x, y, 0.1, seed=3)
    assert (a.x_train.rows, a.x_test.rows) == (9, 1)
    assert a.test_index.tolist() == b.test_index.tolist()
    assert sorted(a.train_index.tolist() + a.test_index.tolist()) == list(range(10))


def test_split_balanced_half():
    tr, te = bench.split_indices([0, 0, 1, 1], 0.5, seed=0)
    y = np.array([0, 0, 1, 1])
    assert sorted(y[te].tolist()) == [0, 1] and sorted(y[tr].tolist()) == [0, 1]


def test_split_held_out_count_and_class_shares():
    y = np.array([0] * 357 + [1] * 212)  # WDBC class balance
    tr, te = bench.split_indices(y, 0.1, seed=0)
    assert (len(tr), len(te)) == (512, 57)
    assert np.sum(y[te] == 1) in (21, 22)
    assert bench.held_out_count(569, 0.1) == 57
    assert bench.held_out_count(10, 0.1) == 1
    assert bench.held_out_count(297, 0.1) == 30


def test_split_is_disjoint_sorted_and_seed_dependent():
    y = np.random.default_rng(0).integers(0, 2, size=200)
    seen = set()
    for seed in range(5):
        tr, te = bench.split_indices(y, 0.2, seed)
        assert not set(tr) & set(te) and len(tr) + len(te) == 200
        assert np.all(np.diff(tr) > 0) and np.all(np.diff(te) > 0)
        seen.add(tuple(te))
    assert len(seen) == 5


def test_split_stratification_errors():
    with pytest.raises(StratificationError):
        bench.split_indices([0, 1], 0.5, seed=0)  # one class left without training rows
    with pytest.raises(StratificationError):
        bench.split_indices([0, 1], 0.1, seed=0)
    with pytest.raises(ParameterError):
        bench.split_indices([0, 1, 0, 1], 1.0, seed=0)


def test_rng_bounded_draws_are_uniform():
    rng = bench._Rng(42)
    counts = np.bincount([rng.below(6) for _ in range(6000)], minlength=6)
    assert counts.min() > 850 and counts.max() < 1150


# -- timing --------------------------------------------------------------------


def test_time_fit_on_a_sleep():
    t, out = bench.time_fit(lambda: time.sleep(0.01) or "done", 3)
    assert out == "done"
    assert 0.009 <= t.median_s <= 0.030
    assert t.min_s <= t.median_s <= t.max_s and len(t.samples) == 3


def test_time_fit_rejects_even_repetitions():
    with pytest.raises(ParameterError):
        bench.time_fit(lambda: None, 4)


def test_time_fit_of_a_model_fit():
    rng = np.random.default_rng(0)
    x = Matrix(rng.normal(size=(100, 5)))
    y = (x.data[:, 0] > 0).astype(int)
    t, m = bench.time_fit(lambda: lr.fit(x, y), 3)
    assert t.median_s > 0 and isinstance(m, lr.LRModel)


def test_time_reduction_examples():
    assert round(bench.time_reduction_pct(0.0142, 0.0258), 1) == 45.0
    assert round(bench.time_reduction_pct(0.0025, 0.0258), 1) == 90.3
    assert bench.time_reduction_pct(0.5, 0.5) == 0.0
    assert bench.time_reduction_pct(2.0, 1.0) == -100.0


# -- config --------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"target_column": "y"})
    assert info.value.key == "dataset"
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"dataset": "a.csv", "target_column": "y", "n_quantile": 5})
    assert info.value.key == "n_quantile"
    with pytest.raises(ConfigError):
        ExperimentConfig("a.csv", "y", timing_repetitions=4)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"dataset": "a.csv", "target_column": "y",
                                    "techniques": ["fft"]})


def test_config_round_trip():
    cfg = ExperimentConfig("data/a.csv", "y", techniques=["qt", "kbins"], precisions=["F32"],
                           lr=lr.LRConfig(l2_strength=0.5))
    assert cfg.name == "a"
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


# -- cells and grid ------------------------------------------------------------


def test_grid_has_seven_cells_baseline_first():
    cells = bench.grid_cells(ExperimentConfig("a.csv", "y"))
    assert len(cells) == 7
    assert cells[0] == (Technique.NONE, Precision.F64)
    assert cells[1:3] == [(Technique.QUANTILE, Precision.F32), (Technique.QUANTILE, Precision.I32)]


def test_run_grid(tmp_path):
    cfg = small_config(tmp_path)
    results = bench.run_grid(cfg)
    assert len(results) == 7 and all(r.ok for r in results)
    base = results[0]
    assert base.is_baseline and base.time_reduction_pct == 0.0
    assert (base.n_train, base.n_test) == (108, 12)
    for r in results[1:]:
        assert 0.0 <= r.accuracy <= 1.0 and r.fit_time_s > 0
        assert r.time_reduction_pct == pytest.approx(
            100 * (1 - r.fit_time_s / base.fit_time_s), abs=1e-12)


def test_cell_accuracy_is_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    a = [r.accuracy for r in bench.run_grid(cfg)]
    b = [r.accuracy for r in bench.run_grid(cfg)]
    assert a == b


def test_fitted_params_ignore_test_rows(tmp_path):
    cfg = small_config(tmp_path)
    data = bench.load_dataset(cfg)
    sp = bench.split(data.x, data.y, cfg.test_fraction, cfg.split_seed)
    rng = np.random.default_rng(1)
    for tech in (Technique.QUANTILE, Technique.ROUND, Technique.KBINS):
        ref = bench.run_cell(cfg, tech, Precision.F32, dataset=data).fitted
        for i in sp.test_index:
            x = data.x.data.copy()
            x[i] = rng.normal(scale=1e3, size=x.shape[1])
            ds = bench.Dataset(Matrix(x), data.y)
            assert bench.run_cell(cfg, tech, Precision.F32, dataset=ds).fitted == ref


def test_partial_grid_keeps_failed_cells(tmp_path):
    # level codes up to 2**32 - 1 overflow I32
    cfg = small_config(tmp_path, round_mode="levels", n_levels=2**32)
    with pytest.raises(CellError) as info:
        bench.run_grid(cfg)
    assert info.value.stage == "cast" and "RoundQuantize" in str(info.value)
    results = bench.run_grid(cfg, allow_partial=True)
    bad = [r for r in results if not r.ok]
    assert [(r.technique, r.precision) for r in bad] == [(Technique.ROUND, Precision.I32)]
    assert bad[0].accuracy is None and "stage 'cast'" in bad[0].error


def test_sweep(tmp_path):
    cfg = small_config(tmp_path)
    out = bench.sweep(cfg, "qt", [5, 20, 50], precisions=["F32", "I32"])
    assert [v for v, _ in out] == [5, 20, 50, 5, 20, 50]
    assert [r.precision.value for _, r in out] == ["F32"] * 3 + ["I32"] * 3
    assert bench.sweep_parameter(cfg, Technique.KBINS) == "n_bins"
    with pytest.raises(ParameterError):
        bench.sweep(cfg, "none", [1])
