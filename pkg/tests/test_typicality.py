import json
import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import logsumexp

from rangeinfo.errors import CacheError
from rangeinfo.estimators import mle_estimate, sap_estimate
from rangeinfo.posterior import log_likelihood, log_likelihood_paired, posterior_from_loglik, range_grid
from rangeinfo.signal_model import STREAM_THEOREM, SystemConfig, draw_range, generate_echo, trial_rng
from rangeinfo.typicality import (
    EntropyReferences,
    ExtensionTrial,
    entropy_references,
    extension_trial,
    is_jointly_typical,
    is_typical_x,
    run_theorem_trial,
    sap_sequence_estimate,
    typicality_config,
)

CFG10 = SystemConfig(snr_db=10.0)


@pytest.fixture(scope="module")
def refs_12db(tmp_path_factory):
    return entropy_references(SystemConfig(snr_db=12.0), 10_000, tmp_path_factory.mktemp("refs12"))


def trials_at(cfg, m, count, offset=0):
    return [extension_trial(cfg, m, trial_rng(cfg.seed, STREAM_THEOREM, 10_000 + m, offset + t)) for t in range(count)]


class TestReferences:
    def test_identities(self, refs_10db):
        r = refs_10db
        assert r.h_x == math.log(16)
        assert r.h_xy - r.h_y == pytest.approx(r.h_x_given_y, abs=1e-12)
        assert r.i_xy == pytest.approx(r.h_x - r.h_x_given_y, abs=1e-12)
        assert 0 < r.h_x_given_y < r.h_x
        assert r.h_y_se > 0 and r.h_xy_se > 0 and r.i_xy_se > 0

    def test_no_signal(self, tmp_path):
        r = entropy_references(SystemConfig(snr_db=-math.inf), 10_000)
        assert r.h_x_given_y == pytest.approx(math.log(16), abs=1e-12)
        # exact uniform posteriors: zero standard error, so only rounding can separate i_xy from 0
        assert abs(r.i_xy) <= max(2 * r.i_xy_se, 1e-12)

    def test_information_12db_five_bits(self, refs_12db):
        assert abs(refs_12db.i_xy_bits - 5.0) <= 0.5, f"I(X;Y) at 12 dB = {refs_12db.i_xy_bits:.3f} bits"

    def test_needs_enough_trials(self):
        with pytest.raises(ValueError):
            entropy_references(CFG10, 9_999)

    def test_cache_roundtrip(self, tmp_path):
        cfg = SystemConfig(snr_db=3.0)
        a = entropy_references(cfg, 10_000, tmp_path)
        files = list(tmp_path.iterdir())
        assert len(files) == 1 and files[0].suffix == ".json"
        assert entropy_references(cfg, 10_000, tmp_path) == a
        record = json.loads(files[0].read_text())
        assert record["version"] == 1 and record["ref_trials"] == 10_000

    def test_cache_corruption(self, tmp_path):
        cfg = SystemConfig(snr_db=3.0)
        entropy_references(cfg, 10_000, tmp_path)
        path = next(tmp_path.iterdir())
        path.write_text(path.read_text()[:40])
        with pytest.raises(CacheError):
            entropy_references(cfg, 10_000, tmp_path)
        path.write_text(json.dumps({"format": "rangeinfo.entropy-references", "version": 99}))
        with pytest.raises(CacheError):
            entropy_references(cfg, 10_000, tmp_path)

    def test_nonfinite_rejected(self):
        with pytest.raises(ArithmeticError):
            EntropyReferences(math.log(16), math.nan, 0, 0, 0, 0, 0, 0, 0, 10_000, 16)


class TestTypicalX:
    def test_uniform_prior_always_typical(self, refs_10db):
        rng = np.random.default_rng(0)
        for m in (1, 5, 100):
            assert is_typical_x(rng.uniform(-8, 8, m), 1e-9, refs_10db)

    def test_zero_epsilon(self, refs_10db):
        assert not is_typical_x([0.0, 1.0], 0.0, refs_10db)

    def test_out_of_interval(self, refs_10db):
        with pytest.raises(ValueError):
            is_typical_x([0.0, 8.0], 0.5, refs_10db)
        with pytest.raises(ValueError):
            is_typical_x([], 0.5, refs_10db)


class TestJointTypicality:
    def test_true_pairs_typical_m64(self, refs_10db):
        eps = 0.5
        hits = [is_jointly_typical(t, eps, refs_10db) for t in trials_at(CFG10, 64, 400)]
        assert np.mean(hits) >= 1 - eps

    def test_vacuous_epsilon(self, refs_10db):
        assert all(is_jointly_typical(t, 10.0, refs_10db) for t in trials_at(CFG10, 8, 50))

    def test_independent_pairs_rarely_typical(self, refs_12db):
        cfg = SystemConfig(snr_db=12.0)
        m, eps, count = 8, 0.3, 2000
        hits = 0
        for t in range(count):
            trial = extension_trial(cfg, m, trial_rng(cfg.seed, 77, t))
            rng = trial_rng(cfg.seed, 78, t)
            x_other = np.array([draw_range(typicality_config(cfg), rng) for _ in range(m)])
            samples = np.array([y.samples for y in trial.y_seq])
            log_joint = -m * math.log(16) + math.fsum(log_likelihood_paired(samples, x_other, typicality_config(cfg)))
            swapped = ExtensionTrial(m, x_other, trial.y_seq, trial.xhat_seq, trial.log_pi_x, trial.log_p_y, log_joint)
            hits += is_jointly_typical(swapped, eps, refs_12db)
        freq = hits / count
        ceiling = math.exp(-m * (refs_12db.i_xy - 3 * eps))
        assert freq <= 0.01
        assert freq <= ceiling + 3 / count

    def test_nonfinite_rejected(self, refs_10db):
        trial = trials_at(CFG10, 2, 1)[0]
        bad = ExtensionTrial(2, trial.x_seq, trial.y_seq, trial.xhat_seq, trial.log_pi_x, trial.log_p_y,
                             trial.log_p_xy, math.nan)
        with pytest.raises(ArithmeticError):
            is_jointly_typical(bad, 0.5, refs_10db, use_estimate=True)


class TestSapSequence:
    def test_m1_is_sap_estimate(self):
        cfg = typicality_config(CFG10)
        y = generate_echo(cfg, 1.3, trial_rng(3))
        xs = range_grid(cfg)
        post = posterior_from_loglik(xs, log_likelihood(y.samples[None, :], xs, cfg, keep_constants=True), cfg.cell_width)
        a = sap_sequence_estimate([y], cfg, trial_rng(9))
        b = sap_estimate(post, trial_rng(9))
        np.testing.assert_array_equal(a, np.atleast_1d(b))

    def test_deterministic(self):
        ys = [generate_echo(CFG10, x, trial_rng(4, i)) for i, x in enumerate((0.0, -3.0, 5.5))]
        a = sap_sequence_estimate(ys, CFG10, trial_rng(1))
        np.testing.assert_array_equal(a, sap_sequence_estimate(ys, CFG10, trial_rng(1)))
        assert a.shape == (3,)

    def test_estimate_distributed_like_truth(self):
        # (xhat, y) and (x, y) share one joint law: compare the offsets to the MLE of y
        cfg = typicality_config(CFG10)
        n = 2000

        def offsets(stream, use_sap):
            xs = np.empty(n)
            ys = np.empty((n, 16), dtype=complex)
            for t in range(n):
                rng = trial_rng(cfg.seed, stream, t)
                xs[t] = draw_range(cfg, rng)
                ys[t] = generate_echo(cfg, xs[t], rng).samples
            x_ref = sap_sequence_estimate(ys, cfg, trial_rng(cfg.seed, stream, n)) if use_sap else xs
            return x_ref - mle_estimate(ys, cfg).x

        d_true = offsets(91, False)
        d_sap = offsets(92, True)
        assert stats.ks_2samp(d_true, d_sap).pvalue > 0.01


class TestTheoremTrial:
    def test_aep_variance_decay(self):
        ms = np.array([4, 8, 16, 32, 64])
        variances = []
        for m in ms:
            per_symbol = [-(t.log_p_xy - t.log_pi_x) / m for t in trials_at(CFG10, int(m), 300)]
            variances.append(np.var(per_symbol, ddof=1))
        slope = np.polyfit(np.log(ms), np.log(variances), 1)[0]
        assert abs(slope + 1) <= 0.2

    def test_conditional_volume_bounds(self, refs_10db):
        # Vol(A(X|y)) = E_{x ~ p(x|y)}[1_A(x, y) / p(x|y)], estimated with the posterior as proposal
        cfg = typicality_config(CFG10)
        m, eps, draws = 6, 0.5, 4000
        xs = range_grid(cfg)
        h = refs_10db.h_x_given_y
        checked = 0
        for t in range(40):
            trial = extension_trial(cfg, m, trial_rng(cfg.seed, 55, t))
            if abs(-trial.log_p_y / m - refs_10db.h_y) >= eps:
                continue
            samples = np.array([y.samples for y in trial.y_seq])
            post = posterior_from_loglik(xs, log_likelihood(samples, xs, cfg, keep_constants=True), cfg.cell_width)
            x_draw = sap_estimate(post, trial_rng(cfg.seed, 56, t), size=draws).T
            ll = np.array([log_likelihood_paired(samples, row, cfg) for row in x_draw])
            log_joint = ll.sum(axis=1) - m * math.log(16)
            log_post = log_joint - trial.log_p_y
            inside = np.abs(-log_joint / m - refs_10db.h_xy) < eps
            log_vol = logsumexp(-log_post[inside]) - math.log(draws) if inside.any() else -np.inf
            assert math.log(1 - eps) + m * (h - 2 * eps) < log_vol < m * (h + 2 * eps)
            checked += 1
        assert checked >= 10

    def test_conditional_typicality_probability(self, refs_10db):
        eps = 0.4
        trials = trials_at(CFG10, 128, 150)
        y_typical = [t for t in trials if abs(-t.log_p_y / t.m - refs_10db.h_y) < eps]
        hits = [is_jointly_typical(t, eps, refs_10db) for t in y_typical]
        assert len(y_typical) > 50 and np.mean(hits) > 1 - 2 * eps

    def test_report_fields_and_fano(self, refs_10db):
        rep = run_theorem_trial(CFG10, 16, 0.5, 200, refs_10db)
        assert rep.m == 16 and rep.trials == 200 and 0 < rep.successes <= 200
        assert 0 <= rep.p_fail <= 1 and rep.valid
        assert rep.empirical_info == pytest.approx(math.log(16) - rep.empirical_entropy)
        assert rep.fano_lhs <= rep.fano_rhs

    def test_fano_chain(self, refs_10db):
        for m in (8, 32):
            rep = run_theorem_trial(CFG10, m, 0.4, 300, refs_10db)
            lhs = refs_10db.h_x - rep.empirical_info
            rhs = 1 / m + rep.p_fail * (refs_10db.h_x + 0.4) + refs_10db.h_x_given_y
            assert lhs <= rhs + 2 * rep.info_se

    def test_zero_successes_flagged(self, refs_10db):
        rep = run_theorem_trial(CFG10, 4, 1e-6, 20, refs_10db)
        assert rep.flagged and rep.successes == 0 and math.isnan(rep.empirical_entropy)
        assert rep.p_fail == 1.0

    def test_limits(self, refs_10db):
        with pytest.raises(ValueError):
            run_theorem_trial(CFG10, 8, 0.4, 2001, refs_10db)
        with pytest.raises(ValueError):
            run_theorem_trial(CFG10, 8, 0.0, 10, refs_10db)
        with pytest.raises(ValueError):
            extension_trial(CFG10, 257, trial_rng(0))
        with pytest.raises(ValueError):
            run_theorem_trial(CFG10.replace(tbp=32), 8, 0.4, 10, refs_10db)

    def test_trial_sequences(self):
        t = trials_at(CFG10, 5, 1)[0]
        assert len(t.x_seq) == len(t.y_seq) == len(t.xhat_seq) == 5
        assert t.log_pi_x == pytest.approx(-5 * math.log(16))
        assert np.all(np.abs(t.xhat_seq) <= 8)
