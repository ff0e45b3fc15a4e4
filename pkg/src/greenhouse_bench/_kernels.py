"""Compiled inner loops for the greenhouse dynamics.

Everything here works on flat float64 arrays so numba can compile it once
and the environment can step at tens of thousands of model steps per
second.  The typed wrappers in model.py and integrator.py are the public
surface; this module is an implementation detail.

Array layouts (fixed, see the matching *_FIELDS tuples):
    x[8]: t_air, t_pipe, co2_air, vp_air, t_can24, t_can_sum, w_fruit, w_harvest
    u[6]: u_boil, u_co2, u_thscr, u_vent, u_lamp, u_blscr
    d[5]: i_glob, t_out, rh_out, co2_out, wind
    p[28]: see PARAM_ORDER
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    NUMBA_ENABLED = False

# Index maps. PARAM_ORDER is the single authority for the parameter vector
# layout; model.py asserts its table matches at import time.
PARAM_ORDER = (
    "c_air",
    "c_pipe",
    "eta_glob",
    "k_pipe",
    "eta_lamp_heat",
    "u_cov",
    "rho_scr",
    "h_air",
    "l_leak",
    "l_vent",
    "c_wind",
    "m_co2_conv",
    "c_vp",
    "c_trans",
    "k_cond",
    "eps_light",
    "eta_par_sun",
    "eta_par_lamp",
    "k_co2",
    "t_opt",
    "t_width",
    "c_ab",
    "m_resp",
    "q10",
    "tau_24",
    "s_start",
    "s_harvest",
    "h_rate",
)

N_STATES = 8
N_CONTROLS = 6
N_DISTURBANCES = 5
N_PARAMS = len(PARAM_ORDER)

# Physical constants shared with model.py.
R_GAS = 8.314          # [J mol-1 K-1]
M_CO2_MG = 44_010.0    # [mg mol-1]
P_ATM = 101_325.0      # [Pa]
RHO_CP = 1_206.0       # [J m-3 K-1] volumetric heat capacity of air
KELVIN = 273.15
SECONDS_PER_DAY = 86_400.0

METHOD_RK4 = 0
METHOD_EULER = 1


@njit(cache=True)
def vpsat_pa(t_c: float) -> float:
    # Magnus form over liquid water, Pa.
    return 610.78 * math.exp(17.27 * t_c / (t_c + 237.3))


@njit(cache=True)
def co2_ppm_from_mgm3(c_mg: float, t_c: float) -> float:
    mol_density = P_ATM / (R_GAS * (t_c + KELVIN))
    return c_mg / M_CO2_MG / mol_density * 1.0e6


@njit(cache=True)
def co2_mgm3_from_ppm(ppm: float, t_c: float) -> float:
    mol_density = P_ATM / (R_GAS * (t_c + KELVIN))
    return ppm * 1.0e-6 * mol_density * M_CO2_MG


@njit(cache=True)
def derivative(x, u, d, p, out) -> None:
    """State rates, all per second, written into ``out``."""
    t_air = x[0]
    t_pipe = x[1]
    co2 = x[2]
    vp = x[3]
    t_can24 = x[4]
    t_sum = x[5]
    w_fruit = x[6]

    i_glob = d[0]
    t_out = d[1]
    rh_out = d[2]
    co2_out_ppm = d[3]
    wind = d[4]

    # Air exchange with outside [m s-1]: leakage plus wind-boosted venting.
    vent_rate = p[8] + p[9] * u[3] * (1.0 + p[10] * wind)
    phi = vent_rate  # volumetric exchange per m2 floor divided by height below

    vp_out = rh_out / 100.0 * vpsat_pa(t_out)
    co2_out = co2_mgm3_from_ppm(co2_out_ppm, t_out)

    # Canopy-absorbed photosynthetically active radiation [W m-2].
    par = p[16] * i_glob + p[17] * u[4]

    # Gross assimilation [mg CH2O m-2 s-1]: light use scaled by CO2 and
    # temperature responses.
    co2_ppm = co2_ppm_from_mgm3(co2, t_air)
    f_temp = 1.0 - ((t_air - p[19]) / p[20]) ** 2
    if f_temp < 0.0:
        f_temp = 0.0
    f_phot = p[15] * par * (co2_ppm / (co2_ppm + p[18])) * f_temp

    # Air temperature: solar + pipe + lamp heat vs cover and vent losses.
    cover_loss = p[5] * (1.0 - p[6] * u[2]) * (t_air - t_out)
    vent_heat = RHO_CP * phi * (t_air - t_out)
    out[0] = (p[2] * i_glob + p[3] * (t_pipe - t_air) + p[4] * u[4] - cover_loss - vent_heat) / p[0]

    out[1] = (u[0] - p[3] * (t_pipe - t_air)) / p[1]

    # CO2 mass balance [mg m-3 s-1] over the air column height.
    out[2] = (u[1] - p[11] * f_phot - phi * (co2 - co2_out)) / p[7]

    # Vapor pressure: transpiration source, vent exchange, condensation sink
    # active only above outdoor saturation.
    cond_excess = vp - vpsat_pa(t_out)
    if cond_excess < 0.0:
        cond_excess = 0.0
    out[3] = (p[13] * par - phi * (vp - vp_out) - p[14] * cond_excess) / p[12]

    out[4] = (t_air - t_can24) / p[24]
    out[5] = t_air / SECONDS_PER_DAY

    # Fruit: assimilate inflow (mg -> kg) gated on the temperature sum,
    # maintenance respiration, harvest outflow once ripe.
    growth = p[21] * f_phot * 1.0e-6 if t_sum > p[25] else 0.0
    resp = p[22] * w_fruit * p[23] ** ((t_air - 25.0) / 10.0)
    harvest = p[27] * w_fruit if t_sum > p[26] else 0.0
    out[6] = growth - resp - harvest
    out[7] = harvest


@njit(cache=True)
def _project(y) -> None:
    # Non-negative quantities clipped after every sub-step.
    if y[2] < 0.0:
        y[2] = 0.0
    if y[3] < 0.0:
        y[3] = 0.0
    if y[6] < 0.0:
        y[6] = 0.0


@njit(cache=True)
def step(x, u, d, p, dt: float, substeps: int, method: int):
    """Advance one control interval with a zero-order hold on u and d.

    Returns (y, bad_substep, bad_field); the indices are -1 when the step
    stayed finite, otherwise they locate the first non-finite value.
    """
    h = dt / substeps
    y = x.copy()
    k1 = np.empty(N_STATES)
    if method == METHOD_RK4:
        k2 = np.empty(N_STATES)
        k3 = np.empty(N_STATES)
        k4 = np.empty(N_STATES)
        tmp = np.empty(N_STATES)
        for s in range(substeps):
            derivative(y, u, d, p, k1)
            for i in range(N_STATES):
                tmp[i] = y[i] + 0.5 * h * k1[i]
            derivative(tmp, u, d, p, k2)
            for i in range(N_STATES):
                tmp[i] = y[i] + 0.5 * h * k2[i]
            derivative(tmp, u, d, p, k3)
            for i in range(N_STATES):
                tmp[i] = y[i] + h * k3[i]
            derivative(tmp, u, d, p, k4)
            for i in range(N_STATES):
                y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            _project(y)
            for i in range(N_STATES):
                if not np.isfinite(y[i]):
                    return y, s, i
    else:
        for s in range(substeps):
            derivative(y, u, d, p, k1)
            for i in range(N_STATES):
                y[i] = y[i] + h * k1[i]
            _project(y)
            for i in range(N_STATES):
                if not np.isfinite(y[i]):
                    return y, s, i
    return y, -1, -1


def warm_up() -> None:
    """Trigger JIT compilation so timed paths never pay for it."""
    x = np.zeros(N_STATES)
    x[0] = 15.0
    x[1] = 15.0
    x[2] = 700.0
    x[3] = 1200.0
    x[4] = 15.0
    u = np.zeros(N_CONTROLS)
    d = np.array([100.0, 10.0, 70.0, 410.0, 3.0])
    p = np.ones(N_PARAMS)
    p[0] = 30_000.0
    p[1] = 10_000.0
    p[24] = SECONDS_PER_DAY
    out = np.empty(N_STATES)
    derivative(x, u, d, p, out)
    step(x, u, d, p, 300.0, 2, METHOD_RK4)
    step(x, u, d, p, 300.0, 2, METHOD_EULER)
