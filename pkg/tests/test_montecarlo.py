import math

import numpy as np
import pytest
from scipy.stats import norm

from ldpkit import (
    DomainError,
    Exponential,
    FiniteDist,
    Gaussian,
    Halfspace,
    TvBall,
    cgf,
    CgfSpec,
    is_empirical_event,
    is_tail,
    mc_tail,
    rate_equality,
)

from conftest import binom_tail_log

BERN3 = FiniteDist([0.0, 1.0], [0.7, 0.3])


class TestValidation:
    def test_sample_floor(self):
        with pytest.raises(ValueError):
            mc_tail(BERN3, None, 0.5, 10, 999, seed=0)
        with pytest.raises(ValueError):
            is_tail(BERN3, None, 0.5, 10, 500, seed=0)

    def test_worker_range(self):
        with pytest.raises(ValueError):
            mc_tail(BERN3, None, 0.5, 10, 1000, seed=0, workers=0)
        with pytest.raises(ValueError):
            mc_tail(BERN3, None, 0.5, 10, 1000, seed=0, workers=1001)

    def test_block_length(self):
        with pytest.raises(ValueError):
            mc_tail(BERN3, None, 0.5, 0, 1000, seed=0)

    def test_tilt_requires_upper_interior(self):
        for alpha in (0.2, 0.3, 1.0, 1.5):
            with pytest.raises(DomainError) as ei:
                is_tail(BERN3, None, alpha, 10, 1000, seed=0)
            assert ei.value.token == "no-tilt-available"

    def test_event_type_checked(self):
        with pytest.raises(ValueError):
            is_empirical_event(BERN3, 10, TvBall(BERN3, 0.1), 1000, seed=0)


class TestDeterminism:
    def test_bitwise_reproducible(self):
        a = mc_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=3)
        b = mc_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=3)
        assert a == b
        c = is_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=3)
        d = is_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=3)
        assert c == d

    def test_depends_on_seed_and_workers(self):
        base = is_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=3)
        other_seed = is_tail(BERN3, None, 0.5, 10, 5000, seed=8, workers=3)
        other_workers = is_tail(BERN3, None, 0.5, 10, 5000, seed=7, workers=4)
        assert base.log_p_hat != other_seed.log_p_hat
        assert base.log_p_hat != other_workers.log_p_hat

    def test_record_keys(self):
        est = mc_tail(BERN3, None, 0.5, 10, 1000, seed=1, workers=2)
        rec = est.record()
        assert set(rec) == {
            "method", "n", "N", "seed", "workers", "log_p_hat", "std_err_rel", "flags",
        }
        assert rec["method"] == "mc" and rec["N"] == 1000 and rec["workers"] == 2
        assert isinstance(rec["flags"], list)


class TestPlainMc:
    def test_moderate_event(self):
        exact = math.exp(binom_tail_log(10, 0.3, 5))
        est = mc_tail(BERN3, None, 0.5, 10, 20000, seed=11)
        p_hat = math.exp(est.log_p_hat)
        assert abs(p_hat - exact) <= 4.0 * est.std_err_rel * exact
        assert est.flags == ()

    def test_rare_event_zero_hits(self):
        est = mc_tail(BERN3, None, 0.7, 40, 1000, seed=3)
        assert est.log_p_hat == -math.inf
        assert est.std_err_rel == math.inf
        assert "zero-hits" in est.flags and "unreliable" in est.flags

    def test_certain_event(self):
        est = mc_tail(BERN3, None, -0.5, 5, 1000, seed=0)
        assert est.log_p_hat == 0.0
        assert est.std_err_rel == 0.0


class TestImportanceSampling:
    def test_rare_event_accuracy(self):
        exact_log = binom_tail_log(40, 0.3, 28)
        est = is_tail(BERN3, None, 0.7, 40, 100_000, seed=5)
        assert est.flags == ()
        assert est.std_err_rel < 0.05
        # compare on the linear scale within 4 standard errors
        ratio = math.exp(est.log_p_hat - exact_log)
        assert abs(ratio - 1.0) <= 4.0 * est.std_err_rel

    def test_beats_plain_mc(self):
        mc = mc_tail(BERN3, None, 0.5, 10, 20000, seed=17)
        im = is_tail(BERN3, None, 0.5, 10, 20000, seed=17)
        assert im.std_err_rel < mc.std_err_rel

    def test_weight_bound(self):
        # every weight on the event is at most exp(-n * rate), so the
        # estimate cannot exceed that bound either
        for n, alpha, seed in ((10, 0.5, 2), (40, 0.7, 9), (25, 0.6, 4)):
            est = is_tail(BERN3, None, alpha, n, 2000, seed=seed)
            rp = rate_equality(CgfSpec(base=BERN3), alpha)
            bound = n * cgf(CgfSpec(base=BERN3), rp.lambda_star) - rp.lambda_star * n * alpha
            assert est.log_p_hat <= bound + 1e-9

    def test_pooled_unbiasedness(self):
        exact = math.exp(binom_tail_log(10, 0.3, 6))
        vals = []
        for seed in range(30):
            est = is_tail(BERN3, None, 0.6, 10, 5000, seed=seed)
            vals.append(math.exp(est.log_p_hat))
        vals = np.array(vals)
        pooled_se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - exact) <= 3.0 * pooled_se

    def test_gaussian_base(self):
        # P{sum of 20 standard normals >= 20} = Phi_bar(sqrt(20))
        exact_log = float(norm.logsf(math.sqrt(20.0)))
        est = is_tail(Gaussian(0.0, 1.0), None, 1.0, 20, 50_000, seed=21)
        ratio = math.exp(est.log_p_hat - exact_log)
        assert abs(ratio - 1.0) <= 4.0 * est.std_err_rel
        assert est.std_err_rel < 0.05

    def test_exponential_base(self):
        # the n-block sum is Gamma(n, 1); use the exact rate-2 tilt instead
        # of a normal reference: P{Gamma(20,1) >= 40}
        from scipy.stats import gamma as gamma_dist

        exact_log = float(gamma_dist.logsf(40.0, a=20))
        est = is_tail(Exponential(1.0), None, 2.0, 20, 50_000, seed=23)
        ratio = math.exp(est.log_p_hat - exact_log)
        assert abs(ratio - 1.0) <= 4.0 * est.std_err_rel

    def test_custom_observable(self):
        # indicator observable turns the ternary base into a Bernoulli(0.5)
        tern = FiniteDist([0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
        exact_log = binom_tail_log(30, 0.5, 24)
        est = is_tail(tern, lambda x: float(x == 2.0), 0.8, 30, 50_000, seed=31)
        ratio = math.exp(est.log_p_hat - exact_log)
        assert abs(ratio - 1.0) <= 4.0 * est.std_err_rel


class TestEmpiricalEvent:
    def test_upper_matches_is_tail(self):
        a = is_empirical_event(BERN3, 40, Halfspace(None, 0.7, ">="), 20000, seed=13)
        b = is_tail(BERN3, None, 0.7, 40, 20000, seed=13)
        assert a == b

    def test_lower_halfspace(self):
        # P{mean <= 0.05 over 60 draws} = P(Bin(60, 0.3) <= 3)
        exact_log = binom_tail_log(60, 0.7, 57)
        est = is_empirical_event(BERN3, 60, Halfspace(None, 0.05, "<="), 50_000, seed=29)
        ratio = math.exp(est.log_p_hat - exact_log)
        assert abs(ratio - 1.0) <= 4.0 * est.std_err_rel
        assert est.method == "is"
