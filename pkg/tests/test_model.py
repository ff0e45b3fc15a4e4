"""Model-layer tests: dynamics against an independent scalar transcription,
conversions against closed-form values, containers and the observation map."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenhouse_bench import (
    CONTROL_FIELDS,
    CROP_PARAMS,
    ControlVector,
    DisturbanceVector,
    ObservationConfig,
    PARAM_DEFAULTS,
    PARAM_NAMES,
    ParameterSet,
    STATE_FIELDS,
    SimClock,
    StateVector,
    U_MAX,
    clamp_controls,
    co2_mgm3_to_ppm,
    co2_ppm_to_mgm3,
    derivative,
    observation_normalization,
    observe,
    relative_humidity,
    vpsat,
)
from greenhouse_bench import _kernels
from greenhouse_bench.errors import ConfigError


def _oracle_derivative(x, u, d, p):
    """Scalar re-derivation of every state rate, kept deliberately
    independent of the package implementation."""
    t_air, t_pipe, co2, vp, t24, tsum, w_fruit, _ = x
    boil, co2_inj, thscr, vent, lamp, _ = u
    iglob, tout, rhout, co2out, wind = d

    def sat(t):
        return 610.78 * math.exp(17.27 * t / (t + 237.3))

    def mol_per_m3(t):
        return 101325.0 / (8.314 * (t + 273.15))

    exchange = p["l_leak"] + p["l_vent"] * vent * (1.0 + p["c_wind"] * wind)
    par = p["eta_par_sun"] * iglob + p["eta_par_lamp"] * lamp
    ppm = co2 / (mol_per_m3(t_air) * 44010.0) * 1e6
    temp_resp = 1.0 - ((t_air - p["t_opt"]) / p["t_width"]) ** 2
    if temp_resp < 0.0:
        temp_resp = 0.0
    assim = p["eps_light"] * par * ppm / (ppm + p["k_co2"]) * temp_resp

    d_t_air = (
        p["eta_glob"] * iglob
        + p["k_pipe"] * (t_pipe - t_air)
        + p["eta_lamp_heat"] * lamp
        - p["u_cov"] * (1.0 - p["rho_scr"] * thscr) * (t_air - tout)
        - 1206.0 * exchange * (t_air - tout)
    ) / p["c_air"]
    d_t_pipe = (boil - p["k_pipe"] * (t_pipe - t_air)) / p["c_pipe"]
    ambient_co2 = co2out * 1e-6 * mol_per_m3(tout) * 44010.0
    d_co2 = (co2_inj - p["m_co2_conv"] * assim - exchange * (co2 - ambient_co2)) / p["h_air"]
    ambient_vp = rhout / 100.0 * sat(tout)
    excess = vp - sat(tout)
    if excess < 0.0:
        excess = 0.0
    d_vp = (p["c_trans"] * par - exchange * (vp - ambient_vp) - p["k_cond"] * excess) / p["c_vp"]
    d_t24 = (t_air - t24) / p["tau_24"]
    d_tsum = t_air / 86400.0
    grow = p["c_ab"] * assim * 1e-6 if tsum > p["s_start"] else 0.0
    resp = p["m_resp"] * w_fruit * p["q10"] ** ((t_air - 25.0) / 10.0)
    harv = p["h_rate"] * w_fruit if tsum > p["s_harvest"] else 0.0
    return [d_t_air, d_t_pipe, d_co2, d_vp, d_t24, d_tsum, grow - resp - harv, harv]


MIDDAY_X = (24.0, 45.0, 1400.0, 2200.0, 21.0, 120.0, 0.2, 0.01)
MIDDAY_U = (60.0, 2.5, 0.3, 0.4, 80.0, 0.0)
MIDDAY_D = (450.0, 14.0, 65.0, 420.0, 4.2)


def _typed(x, u, d):
    return (
        StateVector.from_array(np.array(x)),
        ControlVector.from_array(np.array(u)),
        DisturbanceVector.from_array(np.array(d)),
    )


class TestDerivative:
    def test_matches_independent_transcription_midday(self):
        x, u, d = _typed(MIDDAY_X, MIDDAY_U, MIDDAY_D)
        got = derivative(x, u, d, ParameterSet.nominal()).as_array()
        want = _oracle_derivative(MIDDAY_X, MIDDAY_U, MIDDAY_D, PARAM_DEFAULTS)
        for i, (g, w) in enumerate(zip(got, want)):
            assert g == pytest.approx(w, rel=1e-10), STATE_FIELDS[i]

    def test_matches_transcription_harvest_stage(self):
        # Past the harvest onset, cold night with lamps on.
        xs = (17.0, 35.0, 900.0, 1500.0, 19.0, 300.0, 0.35, 0.4)
        us = (90.0, 0.0, 1.0, 0.0, 116.0, 1.0)
        ds = (0.0, 2.0, 90.0, 410.0, 8.0)
        x, u, d = _typed(xs, us, ds)
        got = derivative(x, u, d, ParameterSet.nominal()).as_array()
        want = _oracle_derivative(xs, us, ds, PARAM_DEFAULTS)
        for i, (g, w) in enumerate(zip(got, want)):
            assert g == pytest.approx(w, rel=1e-10), STATE_FIELDS[i]
        assert got[7] > 0.0  # harvest flux active

    def test_equilibrium_climate_rates_exactly_zero(self):
        # A state constructed to cancel every climate flux term.
        t = 12.0
        p = ParameterSet.nominal()
        x = StateVector(
            t_air=t,
            t_pipe=t,
            co2_air=co2_ppm_to_mgm3(410.0, t),
            vp_air=0.70 * vpsat(t),
            t_can24=t,
            t_can_sum=0.0,
            w_fruit=0.05,
            w_harvest=0.0,
        )
        u = ControlVector.from_array(np.zeros(6))
        d = DisturbanceVector(i_glob=0.0, t_out=t, rh_out=70.0, co2_out=410.0, wind=3.0)
        rates = derivative(x, u, d, p)
        assert rates.t_air == 0.0
        assert rates.t_pipe == 0.0
        assert rates.co2_air == 0.0
        assert rates.vp_air == 0.0
        assert rates.t_can24 == 0.0
        assert rates.t_can_sum == t / 86400.0
        assert rates.w_fruit < 0.0  # respiration only
        assert rates.w_harvest == 0.0

    def test_boiler_heats_pipe_at_known_rate(self):
        t = 12.0
        x = StateVector(
            t_air=t,
            t_pipe=t,
            co2_air=co2_ppm_to_mgm3(410.0, t),
            vp_air=0.70 * vpsat(t),
            t_can24=t,
            t_can_sum=0.0,
            w_fruit=0.05,
            w_harvest=0.0,
        )
        u = ControlVector.from_array(np.array([130.0, 0, 0, 0, 0, 0]))
        d = DisturbanceVector(i_glob=0.0, t_out=t, rh_out=70.0, co2_out=410.0, wind=3.0)
        rates = derivative(x, u, d, ParameterSet.nominal())
        assert rates.t_pipe == 130.0 / 10_000.0
        assert rates.t_air == 0.0  # pipe still at air temperature

    def test_co2_injection_balance_exact(self):
        # No photosynthesis, no exchange: the only CO2 flux is injection.
        p = ParameterSet.nominal(overrides={"eps_light": 0.0, "l_leak": 0.0})
        x, _, d = _typed(MIDDAY_X, MIDDAY_U, MIDDAY_D)
        u = ControlVector.from_array(np.array([0, 3.0, 0, 0, 0, 0]))
        rates = derivative(x, u, d, p)
        assert rates.co2_air == 3.0 / 4.0

    def test_vent_flux_follows_outdoor_gradient(self):
        # Opening the vent moves air temperature toward outside, never away.
        rng = np.random.default_rng(4)
        p = ParameterSet.nominal()
        for _ in range(200):
            t_air = rng.uniform(5.0, 35.0)
            t_out = rng.uniform(-5.0, 30.0)
            x = StateVector(
                t_air=t_air,
                t_pipe=rng.uniform(10.0, 60.0),
                co2_air=rng.uniform(300.0, 2500.0),
                vp_air=rng.uniform(200.0, 3000.0),
                t_can24=rng.uniform(5.0, 30.0),
                t_can_sum=rng.uniform(0.0, 400.0),
                w_fruit=rng.uniform(0.0, 0.5),
                w_harvest=0.0,
            )
            d = DisturbanceVector(
                i_glob=rng.uniform(0.0, 800.0),
                t_out=t_out,
                rh_out=rng.uniform(20.0, 100.0),
                co2_out=rng.uniform(350.0, 500.0),
                wind=rng.uniform(0.0, 12.0),
            )
            closed = derivative(x, ControlVector.from_array(np.zeros(6)), d, p).t_air
            opened = derivative(
                x, ControlVector.from_array(np.array([0, 0, 0, 1.0, 0, 0])), d, p
            ).t_air
            diff = opened - closed
            if t_out > t_air:
                assert diff > 0.0
            elif t_out < t_air:
                assert diff < 0.0
            else:
                assert diff == 0.0

    def test_non_finite_state_rejected(self):
        x = StateVector.from_array(np.array([20.0, 20, np.nan, 1000, 20, 0, 0.1, 0]))
        _, u, d = _typed(MIDDAY_X, (0, 0, 0, 0, 0, 0), MIDDAY_D)
        with pytest.raises(ValueError, match="co2_air"):
            derivative(x, u, d, ParameterSet.nominal())


class TestConversions:
    def test_vpsat_reference_points(self):
        # Independent evaluation through logs.
        want20 = math.exp(math.log(610.78) + 17.27 * 20.0 / 257.3)
        assert vpsat(20.0) == pytest.approx(want20, rel=1e-12)
        assert vpsat(0.0) == 610.78
        assert 2330.0 < vpsat(20.0) < 2345.0

    def test_vpsat_monotone(self):
        ts = np.linspace(-30.0, 50.0, 200)
        vals = [vpsat(t) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_vpsat_domain_error(self):
        with pytest.raises(ValueError):
            vpsat(-240.0)

    def test_relative_humidity_reference(self):
        assert relative_humidity(vpsat(20.0), 20.0) == pytest.approx(100.0, abs=1e-9)
        assert relative_humidity(0.0, 25.0) == 0.0
        assert relative_humidity(0.5 * vpsat(20.0), 20.0) == pytest.approx(50.0, abs=1e-9)
        # About half of saturation at 20 C in absolute terms.
        assert relative_humidity(1169.0, 20.0) == pytest.approx(50.0, abs=0.5)

    def test_relative_humidity_rejects_negative_vp(self):
        with pytest.raises(ValueError):
            relative_humidity(-1.0, 20.0)

    def test_co2_reference_point(self):
        # 1830 mg/m3 at 20 C is about 1000 ppm.
        assert co2_mgm3_to_ppm(1830.0, 20.0) == pytest.approx(1000.0, abs=5.0)
        assert co2_mgm3_to_ppm(0.0, 20.0) == 0.0

    def test_co2_independent_formula(self):
        # mol / m3 from the gas law, scalar route.
        for c, t in ((500.0, 0.0), (1830.0, 20.0), (3000.0, 35.0)):
            mol = 101325.0 / (8.314 * (t + 273.15))
            want = c / 44010.0 / mol * 1e6
            assert co2_mgm3_to_ppm(c, t) == pytest.approx(want, rel=1e-12)

    @given(
        c=st.floats(min_value=0.0, max_value=5000.0),
        t=st.floats(min_value=-20.0, max_value=45.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_co2_round_trip(self, c, t):
        back = co2_ppm_to_mgm3(co2_mgm3_to_ppm(c, t), t)
        assert back == pytest.approx(c, rel=1e-9, abs=1e-9)

    def test_co2_monotone_in_concentration(self):
        ppm = [co2_mgm3_to_ppm(c, 20.0) for c in np.linspace(0.0, 4000.0, 100)]
        assert all(b > a for a, b in zip(ppm, ppm[1:]))


class TestClampControls:
    def test_mixed_out_of_range_vector(self):
        out = clamp_controls([200.0, -1.0, 0.5, 2.0, 116.0, 0.3])
        assert out.as_array().tolist() == [130.0, 0.0, 0.5, 1.0, 116.0, 0.3]

    def test_in_bounds_identity(self):
        u = [10.0, 1.0, 0.2, 0.9, 50.0, 1.0]
        assert clamp_controls(u).as_array().tolist() == u

    @given(st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, raw):
        once = clamp_controls(raw).as_array()
        twice = clamp_controls(once).as_array()
        assert np.array_equal(once, twice)
        assert np.all(once >= 0.0) and np.all(once <= U_MAX)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            clamp_controls([np.nan, 0, 0, 0, 0, 0])
        with pytest.raises(ValueError):
            clamp_controls([np.inf, 0, 0, 0, 0, 0])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            clamp_controls([1.0, 2.0])


class TestParameterSet:
    def test_defaults_complete(self):
        p = ParameterSet.nominal()
        assert set(p.values) == set(PARAM_NAMES)
        assert p.as_array().shape == (len(PARAM_NAMES),)
        assert tuple(PARAM_NAMES) == _kernels.PARAM_ORDER

    def test_overrides(self):
        p = ParameterSet.nominal(overrides={"k_pipe": 7.5})
        assert p.values["k_pipe"] == 7.5
        assert p.values["c_air"] == PARAM_DEFAULTS["c_air"]

    def test_rejects_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown"):
            ParameterSet.nominal(overrides={"nope": 1.0})

    def test_rejects_negative_value(self):
        with pytest.raises(ConfigError):
            ParameterSet.nominal(overrides={"k_pipe": -1.0})

    def test_rejects_delta_out_of_range(self):
        with pytest.raises(ConfigError):
            ParameterSet.nominal(delta=1.0)
        with pytest.raises(ConfigError):
            ParameterSet.nominal(delta=-0.1)

    def test_rejects_unknown_randomized_name(self):
        with pytest.raises(ConfigError, match="randomized"):
            ParameterSet.nominal(randomized_names=("bogus",))

    def test_crop_subset_is_known(self):
        assert set(CROP_PARAMS) <= set(PARAM_NAMES)
        assert len(CROP_PARAMS) == 12


class TestObserve:
    def _args(self, config, forecast_rows=()):
        x, u, d = _typed(MIDDAY_X, MIDDAY_U, MIDDAY_D)
        clock = SimClock(hour=6.0, day_of_year=100.0)
        return x, u, d, ParameterSet.nominal(), clock, config, forecast_rows

    def test_full_length_and_labels(self):
        cfg = ObservationConfig()
        assert cfg.length() == 22
        obs = observe(*self._args(cfg))
        assert obs.shape == (22,)
        labels = cfg.labels()
        assert labels[:3] == ("t_air", "co2_ppm", "rh")
        assert len(labels) == 22
        assert labels[labels.index("u_boil")] == "u_boil"

    def test_state_slots_match_conversions(self):
        cfg = ObservationConfig(groups=("state",))
        obs = observe(*self._args(cfg))
        assert obs[0] == MIDDAY_X[0]
        assert obs[1] == co2_mgm3_to_ppm(MIDDAY_X[2], MIDDAY_X[0])
        assert obs[2] == relative_humidity(MIDDAY_X[3], MIDDAY_X[0])
        assert obs[3] == MIDDAY_X[1]
        assert obs[4] == MIDDAY_X[6]
        assert obs[5] == MIDDAY_X[4]
        assert obs[6] == MIDDAY_X[5]

    def test_hour_encoding_at_six(self):
        cfg = ObservationConfig(groups=("time",))
        obs = observe(*self._args(cfg))
        assert obs[0] == pytest.approx(1.0, abs=1e-12)  # sin at quarter period
        assert obs[1] == pytest.approx(0.0, abs=1e-12)

    def test_forecast_layout(self):
        cfg = ObservationConfig(groups=("state", "time", "control", "weather", "forecast"),
                                forecast_steps=3)
        assert cfg.length() == 22 + 15
        rows = [DisturbanceVector.from_array(np.array(MIDDAY_D)) for _ in range(3)]
        obs = observe(*self._args(cfg, rows))
        assert obs.shape == (37,)
        assert obs[-5:].tolist() == list(MIDDAY_D)
        labels = cfg.labels()
        assert labels[22] == "fc1_i_glob"
        assert labels[-1] == "fc3_wind"

    def test_forecast_row_count_enforced(self):
        cfg = ObservationConfig(groups=("weather", "forecast"), forecast_steps=2)
        with pytest.raises(ValueError, match="forecast rows"):
            observe(*self._args(cfg, ()))

    def test_pure_and_deterministic(self):
        cfg = ObservationConfig()
        a = observe(*self._args(cfg))
        b = observe(*self._args(cfg))
        assert np.array_equal(a, b)

    def test_empty_groups_rejected(self):
        with pytest.raises(ConfigError):
            ObservationConfig(groups=())

    def test_unknown_group_rejected(self):
        with pytest.raises(ConfigError):
            ObservationConfig(groups=("state", "sky"))

    def test_forecast_flag_consistency(self):
        with pytest.raises(ConfigError):
            ObservationConfig(groups=("state", "forecast"), forecast_steps=0)
        with pytest.raises(ConfigError):
            ObservationConfig(groups=("state",), forecast_steps=2)

    def test_fingerprint_stable_and_layout_sensitive(self):
        a = ObservationConfig()
        b = ObservationConfig(groups=("state", "time", "control", "weather"))
        c = ObservationConfig(groups=("state", "time"))
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()

    def test_normalization_covers_all_labels(self):
        cfg = ObservationConfig(groups=("state", "time", "control", "weather", "forecast"),
                                forecast_steps=4)
        center, scale = observation_normalization(cfg.labels())
        assert center.shape == (cfg.length(),)
        assert np.all(scale > 0.0)


class TestSimClock:
    def test_hour_range_enforced(self):
        with pytest.raises(ValueError):
            SimClock(hour=24.0, day_of_year=10.0)
        SimClock(hour=23.999, day_of_year=0.0)
