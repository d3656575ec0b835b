import math

import numpy as np
import pytest

from gaitcpg.astrocyte import (
    AstrocyteParams,
    AstrocyteState,
    release_adenosine,
    resting_point,
    step_li_rinzel,
    update_ag,
)
from gaitcpg.neurons import SimClock


@pytest.fixture
def clock():
    return SimClock()


@pytest.fixture
def params():
    return AstrocyteParams()


def single(params):
    return AstrocyteState.resting(params, k=1)


# ------------------------------------------------------------------- 2-AG
def test_ag_stays_zero_without_spikes(params, clock):
    st = single(params)
    for _ in range(100):
        update_ag(st, np.zeros(1), params, clock)
    assert st.ag[0] == 0.0


def test_ag_increment_five_spikes(params, clock):
    st = single(params)
    update_ag(st, np.array([5]), params, clock)
    assert st.ag[0] == pytest.approx(5e-3, rel=1e-12)


def test_ag_decay_one_second(params, clock):
    st = single(params)
    st.ag[0] = 0.01
    for _ in range(1000):
        update_ag(st, np.zeros(1), params, clock)
    assert st.ag[0] == pytest.approx(0.01 * math.exp(-1.0), rel=1e-9)
    assert st.ag[0] == pytest.approx(0.00368, abs=1e-5)


# ------------------------------------------------------------------- calcium
def test_resting_point_is_subthreshold(params):
    ca, h = resting_point(params)
    assert 0 < ca < params.thres_ca_ado
    assert 0 < h < 1


def test_resting_state_is_fixed_point_of_stepper(params, clock):
    # Binds the analytic fixed point to the stepping kernel.
    st = single(params)
    ca0, h0 = st.ca_cyt[0], st.gate_h[0]
    for _ in range(20000):
        step_li_rinzel(st, params, clock)
    assert st.ca_cyt[0] == pytest.approx(ca0, abs=1e-6)
    assert st.gate_h[0] == pytest.approx(h0, abs=1e-6)
    assert st.ip3[0] == pytest.approx(params.ip3_star, abs=1e-9)


def test_zero_ag_never_releases(params, clock):
    st = single(params)
    for _ in range(30000):
        step_li_rinzel(st, params, clock)
        release_adenosine(st, params, clock)
    assert st.ado[0] == 0.0
    assert st.ca_cyt[0] < params.thres_ca_ado


def test_tonic_drive_crosses_threshold_within_ten_seconds(params, clock):
    # Near-maximal pool firing (20 neurons at the refractory ceiling) pushes
    # 2-AG toward ~4 and calcium past the release threshold well inside 10 s.
    st = single(params)
    crossed = None
    for t in range(10000):
        update_ag(st, np.array([4]), params, clock)   # 4 spikes per ms
        step_li_rinzel(st, params, clock)
        if crossed is None and st.ca_cyt[0] > params.thres_ca_ado:
            crossed = t * clock.dt
            break
    assert crossed is not None and crossed < 10.0


def test_gate_stays_in_unit_interval_under_random_drive(params, clock):
    rng = np.random.default_rng(0)
    st = AstrocyteState.resting(params, k=4)
    for _ in range(100000):
        st.ag[...] = rng.uniform(0.0, 5.0, size=4)
        step_li_rinzel(st, params, clock)
        assert np.all((st.gate_h >= 0.0) & (st.gate_h <= 1.0))
        assert np.all(st.ca_cyt >= 0.0)


# ------------------------------------------------------------------- adenosine
def test_release_train_while_above_threshold(params, clock):
    st = single(params)
    st.ca_cyt[0] = 1.0   # held above threshold
    events = []
    for t in range(1000):
        release_adenosine(st, params, clock)
        if st.time_since_release[0] == 0.0:
            events.append(t)
        st.ca_cyt[0] = 1.0
    assert events == [0, 300, 600, 900]


def test_single_release_amount(params, clock):
    st = single(params)
    st.ca_cyt[0] = 1.0
    ado = release_adenosine(st, params, clock)
    assert ado[0] == pytest.approx(params.r_ado)


def test_subthreshold_decays_monotonically(params, clock):
    st = single(params)
    st.ado[0] = 0.02
    values = []
    for _ in range(2000):
        release_adenosine(st, params, clock)
        values.append(st.ado[0])
    assert np.all(np.diff(values) < 0)
    assert values[-1] == pytest.approx(0.02 * math.exp(-2.0), rel=1e-9)


def test_release_refractory_never_violated(params, clock):
    rng = np.random.default_rng(3)
    st = single(params)
    last = None
    violations = 0
    for t in range(20000):
        st.ca_cyt[0] = rng.uniform(0.0, 0.6)
        release_adenosine(st, params, clock)
        if st.time_since_release[0] == 0.0:
            if last is not None and (t - last) < 300:
                violations += 1
            last = t
    assert violations == 0


def test_higher_drive_releases_no_later(params, clock):
    def first_release(rate):
        st = single(params)
        for t in range(40000):
            update_ag(st, np.array([rate]), params, clock)
            step_li_rinzel(st, params, clock)
            release_adenosine(st, params, clock)
            if st.time_since_release[0] == 0.0:
                return t
        return None

    weak = first_release(2.0)
    strong = first_release(6.0)
    assert strong is not None
    assert weak is None or strong <= weak


def test_params_validation():
    with pytest.raises(ValueError):
        AstrocyteParams(refractory_ado=0.0)
    with pytest.raises(ValueError):
        AstrocyteParams(thres_ca_ado=0.0)
