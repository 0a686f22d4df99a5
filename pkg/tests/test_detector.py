import numpy as np
import numpy.testing as npt
import pytest

import floodwatch as fw
from floodwatch.detector import (
    DetectionReport,
    DetectorModel,
    WindowScore,
    calibrate_threshold,
    detect,
    evaluate,
    fit,
    read_report_csv,
    score,
    write_report_csv,
)
from floodwatch.dbn import DbnModel
from floodwatch.errors import InputError
from floodwatch.lstm import LstmModel
from floodwatch.rbm import RbmKind, RbmParams
from floodwatch.traffic import (
    Normalizer,
    PacketRecord,
    Protocol,
    Scenario,
    generate_traffic,
    preset_scenario,
    split_packets,
)
from oracles import naive_mean_std


def packet(ts):
    return PacketRecord(timestamp=ts, src_ip=1, dst_ip=2,
                        protocol=Protocol.TCP, length=100)


def constant_code_model(prediction_bias, lookback=10):
    """Zero-weight pipeline: every window's code is 0.5 in all 8 dims and
    the LSTM constantly predicts ``prediction_bias``."""
    layers = [
        RbmParams(kind=RbmKind.GAUSSIAN_BERNOULLI, weights=np.zeros((8, 16)),
                  visible_bias=np.zeros(8), hidden_bias=np.zeros(16)),
        RbmParams(kind=RbmKind.BERNOULLI_BERNOULLI, weights=np.zeros((16, 8)),
                  visible_bias=np.zeros(16), hidden_bias=np.zeros(8)),
    ]
    n, d = 4, 8
    lstm = LstmModel(input_dim=d, hidden_dim=n,
                     w_f=np.zeros((n, n + d)), w_i=np.zeros((n, n + d)),
                     w_c=np.zeros((n, n + d)), w_o=np.zeros((n, n + d)),
                     b_f=np.zeros(n), b_i=np.zeros(n), b_c=np.zeros(n),
                     b_o=np.zeros(n), w_y=np.zeros((d, n)),
                     b_y=np.full(d, prediction_bias))
    normalizer = Normalizer(feat_min=np.zeros(8), feat_max=np.ones(8),
                            unit_mean=np.zeros(8), unit_std=np.ones(8))
    return DetectorModel(normalizer=normalizer, dbn=DbnModel(layers=layers),
                         lstm=lstm, threshold=0.05, lookback=lookback,
                         window_len=1.0, residual_mean=0.0, residual_std=0.0)


def test_calibrate_threshold_degenerate():
    assert calibrate_threshold([1.0, 1.0, 1.0, 1.0], 3.0) == pytest.approx(
        1.0 + 3e-9, abs=1e-15)


def test_calibrate_threshold_population_std():
    assert calibrate_threshold([0.0, 2.0], 1.0) == pytest.approx(2.0, abs=1e-12)


def test_calibrate_threshold_matches_naive_oracle():
    rng = np.random.default_rng(8)
    residuals = list(rng.uniform(0, 2, 400))
    mean, std = naive_mean_std(residuals)
    assert calibrate_threshold(residuals, 3.0) == pytest.approx(
        mean + 3.0 * std, abs=1e-12)


def test_calibrate_threshold_scales_linearly():
    rng = np.random.default_rng(9)
    residuals = rng.uniform(0.5, 1.5, 200)
    base = calibrate_threshold(residuals, 2.0)
    assert calibrate_threshold(residuals * 3.0, 2.0) == pytest.approx(
        3.0 * base, rel=1e-12)


def test_calibrate_threshold_rejects_empty():
    with pytest.raises(InputError):
        calibrate_threshold([], 3.0)


def test_score_zero_residual_when_prediction_matches():
    model = constant_code_model(0.5)
    packets = [packet(t + 0.5) for t in range(15)]
    scores = score(model, packets)
    assert [idx for idx, _ in scores] == list(range(10, 15))
    for _, residual in scores:
        assert residual == pytest.approx(0.0, abs=1e-15)


def test_score_uniform_offset_gives_offset_residual():
    # prediction off by 0.1 in every code entry: RMS residual 0.1
    model = constant_code_model(0.6)
    packets = [packet(t + 0.5) for t in range(15)]
    for _, residual in score(model, packets):
        assert residual == pytest.approx(0.1, abs=1e-12)


def test_score_requires_enough_windows():
    model = constant_code_model(0.5)
    packets = [packet(t + 0.5) for t in range(10)]  # needs lookback+1 = 11
    with pytest.raises(InputError, match="11"):
        score(model, packets)


def test_detect_alarm_consistency():
    model = constant_code_model(0.6)  # residual 0.1 everywhere
    packets = [packet(t + 0.5) for t in range(15)]
    report = detect(model, packets)
    assert report.alarm_count == len(report.scores)  # 0.1 > threshold 0.05
    for entry in report.scores:
        assert entry.alarm == (entry.residual > report.threshold)

    model.threshold = 0.5
    assert detect(model, packets).alarm_count == 0


def test_raising_threshold_never_adds_alarms():
    rng = np.random.default_rng(12)
    residuals = rng.uniform(0, 1, 50)
    counts = []
    for threshold in (0.1, 0.3, 0.5, 0.9):
        scores = [WindowScore(index=i + 10, residual=float(r), alarm=r > threshold)
                  for i, r in enumerate(residuals)]
        counts.append(sum(s.alarm for s in scores))
    assert counts == sorted(counts, reverse=True)


def test_evaluate_counts_and_rates():
    lookback = 10
    scores = []
    labels = [False] * lookback
    # 10 attack windows: 8 alarmed; 90 normal windows: 2 alarmed
    for i in range(100):
        attacked = i < 10
        alarmed = (i < 8) or (i in (20, 21))
        scores.append(WindowScore(index=lookback + i, residual=1.0 if alarmed else 0.0,
                                  alarm=alarmed))
        labels.append(attacked)
    metrics = evaluate(scores, labels)
    assert (metrics.true_positives, metrics.false_positives,
            metrics.false_negatives, metrics.true_negatives) == (8, 2, 2, 88)
    assert metrics.precision == pytest.approx(0.8)
    assert metrics.recall == pytest.approx(0.8)
    assert metrics.f1 == pytest.approx(0.8)
    assert metrics.false_positive_rate == pytest.approx(2 / 90)


def test_evaluate_perfect_report():
    scores = [WindowScore(index=10 + i, residual=float(i % 2), alarm=bool(i % 2))
              for i in range(20)]
    labels = [False] * 10 + [bool(i % 2) for i in range(20)]
    metrics = evaluate(scores, labels)
    assert metrics.precision == 1.0
    assert metrics.recall == 1.0
    assert metrics.f1 == 1.0
    assert metrics.false_positive_rate == 0.0


def test_evaluate_no_alarms_with_positives():
    scores = [WindowScore(index=10 + i, residual=0.0, alarm=False) for i in range(5)]
    labels = [False] * 10 + [True] * 5
    metrics = evaluate(scores, labels)
    assert metrics.recall == 0.0
    assert metrics.precision == 0.0
    assert metrics.f1 == 0.0


def test_evaluate_rejects_short_labels():
    scores = [WindowScore(index=10, residual=0.0, alarm=False)]
    with pytest.raises(InputError):
        evaluate(scores, [False] * 5)


def test_fit_requires_enough_windows():
    config = fw.RunConfig()
    scenario = Scenario(duration=8.0, baseline_rate=50.0)
    records, _ = generate_traffic(scenario, np.random.default_rng(0))
    train, valid = split_packets(records, 0.8, 1.0)
    with pytest.raises(InputError):
        fit(train, valid, config)


def test_fit_validation_residuals_stay_below_code_spread():
    # 600 s attack-free capture at defaults: the next-window predictor
    # must beat the trivial scale of the codes it predicts
    config = fw.RunConfig()
    records, _ = generate_traffic(preset_scenario("quiet"), np.random.default_rng(42))
    train, valid = split_packets(records, config.split, config.window_len)
    model, summary = fw.fit_detailed(train, valid, config)
    from floodwatch.detector import _codes
    codes = _codes(model.normalizer, model.dbn, train, config.window_len)
    assert model.residual_mean < float(np.std(codes))
    assert model.threshold >= model.residual_mean
    assert summary.threshold == model.threshold


def test_report_round_trip(tmp_path):
    model = constant_code_model(0.6)
    packets = [packet(t + 0.5) for t in range(15)]
    report = detect(model, packets)
    path = tmp_path / "report.csv"
    write_report_csv(path, report)
    again = read_report_csv(path)
    assert [(s.index, s.residual, s.alarm) for s in again] == \
        [(s.index, s.residual, s.alarm) for s in report.scores]


def test_report_row_count_equals_scored_windows():
    model = constant_code_model(0.5)
    packets = [packet(t + 0.5) for t in range(25)]
    report = detect(model, packets)
    assert len(report.scores) == 25 - model.lookback
