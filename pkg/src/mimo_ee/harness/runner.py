"""Monte Carlo evaluation of one scenario point and the parameter sweeps."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from ..admittance import build_dma_structure, coupling_model, mutual_admittance_array
from ..channel import ChannelModelParams, build_covariance, noise_variance_for_ratio, sample_channel
from ..errors import DegenerateChannelError
from ..geometry import build_constants, build_layout, build_waveguide, fixed_aperture_layout
from ..power import (
    EvaluationRecord,
    amplifier_power,
    saturation_power,
    sum_rate_and_ee,
    total_power,
)
from ..precoding import wf_dma, wf_fd, wf_hybrid
from ..topology import effective_channel_array, per_amplifier_output, supplied_power

log = logging.getLogger(__name__)

MAX_REDRAWS = 10


@dataclass
class PointSetup:
    """Everything about one sweep point that does not depend on the trial."""

    scenario: object
    axis: float
    consts: object
    layout: object
    noise_variance: float
    channel: ChannelModelParams
    Y_g_array: float
    array_map: object
    selection: np.ndarray
    dma: object


def build_layout_for(scenario, consts):
    g = scenario.geometry
    lam = consts.wavelength
    if g.aperture_x is not None:
        return fixed_aperture_layout(g.N_t, g.spacing_x * lam, g.aperture_x * lam, g.spacing_z * lam)
    return build_layout(g.N_t, g.n_per_tx, g.spacing_x * lam, g.spacing_z * lam)


def prepare_point(scenario, axis=float("nan")):
    consts = build_constants(scenario.geometry.frequency)
    layout = build_layout_for(scenario, consts)
    Y_aa = mutual_admittance_array(layout, consts)
    ch = scenario.channel
    sigma2 = ch.sigma_n2 if ch.snr_ratio is None else noise_variance_for_ratio(ch.snr_ratio, consts, ch.rho)
    params = ChannelModelParams(ch.users, build_covariance(Y_aa, ch.rho), sigma2, scenario.seed)
    y_g = scenario.power.Y_g_array
    y_g = consts.self_admittance if y_g == "matched" else float(y_g)
    tops = scenario.topologies
    array_map = effective_channel_array(Y_aa, y_g, consts) if {"fd", "hybrid"} & set(tops) else None
    selection = np.zeros((layout.n_antennas, layout.n_transmitters))
    selection[np.arange(layout.n_antennas), layout.feed_map] = 1.0
    dma = None
    if "dma" in tops:
        d = scenario.dma
        extent = (layout.n_per_tx - 1) * layout.spacing_x
        wg = build_waveguide(consts, extent, feed_offset=layout.spacing_x / 2, width=d.a, height=d.b,
                             characteristic_admittance=d.Y_g_dma, electrical_length=d.kx_Lw)
        model = coupling_model(d.coupling_model, termination=d.termination,
                               element_coupling=d.element_coupling)
        dma = build_dma_structure(layout, consts, wg, model, d.R_s, d.Y_g_dma)
    return PointSetup(scenario, axis, consts, layout, sigma2, params, y_g, array_map, selection, dma)


def _consumption_variants(scenario):
    yield "", scenario.power
    for v in scenario.sweep.variants:
        yield f":{v.label}", replace(scenario.power, **v.overrides)


def _records(setup, topology, sol, P_g, p_out, n_ps, n_var, trial):
    s = setup.scenario
    lay = setup.layout
    n_tx = lay.n_antennas if topology == "fd" else lay.n_transmitters
    out = []
    rate = None
    for suffix, pcfg in _consumption_variants(s):
        p_sat = saturation_power(topology, s.P_g_max, lay.n_antennas, lay.n_transmitters,
                                 pcfg.P_sat_fd, pcfg.P_sat_other)
        params = pcfg.consumption(P_sat=p_sat)
        P_a = amplifier_power(p_out, params, strict=False)
        breakdown = total_power(topology, n_tx, P_a, params, n_ps=n_ps, n_var=n_var)
        if rate is None:
            rate, _ = sum_rate_and_ee(sol.H_eq, sol.B, setup.noise_variance, breakdown.P_total)
        out.append(EvaluationRecord(
            topology=topology + suffix,
            mse=sol.achieved_mse,
            P_g=P_g,
            power=breakdown,
            sum_rate=rate,
            energy_efficiency=rate / breakdown.P_total,
            max_output_ratio=float(np.max(p_out) / p_sat),
            trial=trial,
            axis=setup.axis,
        ))
    return out


def _solve_all(setup, Y, trial):
    s = setup.scenario
    P = s.P_g_max
    lay = setup.layout
    records = []
    if "fd" in s.topologies or "hybrid" in s.topologies:
        H_a = setup.array_map(Y).H
    if "fd" in s.topologies:
        sol = wf_fd(H_a, setup.noise_variance, P, setup.Y_g_array)
        p_out = per_amplifier_output(sol.B, setup.Y_g_array, "fd")
        records += _records(setup, "fd", sol, supplied_power(sol.B, setup.Y_g_array), p_out, 0, 0, trial)
    if "hybrid" in s.topologies:
        sol = wf_hybrid(H_a, setup.selection, setup.noise_variance, P, setup.Y_g_array,
                        s.optimizer, stream=trial)
        p_out = per_amplifier_output(sol.B, setup.Y_g_array, "hybrid", lay.n_per_tx)
        P_g = supplied_power(sol.B, setup.Y_g_array, sol.analog_state.Q)
        records += _records(setup, "hybrid", sol, P_g, p_out, lay.n_antennas, 0, trial)
    if "dma" in s.topologies:
        sol = wf_dma(setup.dma, Y, setup.consts, setup.noise_variance, P, s.optimizer, stream=trial,
                     parameterization=s.dma.parameterization)
        Y_g = setup.dma.Y_g
        p_out = per_amplifier_output(sol.B, Y_g, "dma")
        records += _records(setup, "dma", sol, supplied_power(sol.B, Y_g), p_out, 0, lay.n_antennas, trial)
    return records


def run_trial(setup, trial):
    """All topologies on one shared channel draw; degenerate draws are redrawn."""
    for attempt in range(MAX_REDRAWS + 1):
        Y = sample_channel(setup.channel, trial, attempt)
        if not np.any(Y) or not np.all(np.isfinite(Y)):
            continue
        try:
            records = _solve_all(setup, Y, trial)
        except DegenerateChannelError:
            continue
        if attempt:
            log.info("trial %d: %d degenerate draw(s) redrawn", trial, attempt)
        return records
    raise DegenerateChannelError(f"trial {trial}: {MAX_REDRAWS} consecutive degenerate draws")


def run_point(scenario, axis=float("nan"), setup=None):
    """Evaluate every topology on ``scenario.trials`` channel draws."""
    setup = setup or prepare_point(scenario, axis)
    trials = range(scenario.trials)
    if scenario.workers > 1:
        with ProcessPoolExecutor(scenario.workers) as pool:
            chunks = list(pool.map(partial(run_trial, setup), trials, chunksize=max(1, scenario.trials // (4 * scenario.workers))))
    else:
        chunks = [run_trial(setup, t) for t in trials]
    records = [r for chunk in chunks for r in chunk]
    _check_saturation(records, axis)
    return records


def _check_saturation(records, axis):
    by_top = {}
    for r in records:
        by_top.setdefault(r.topology, []).append(r.max_output_ratio)
    for top, ratios in by_top.items():
        ratios = np.asarray(ratios)
        over = int(np.sum(ratios > 0.5))
        if over:
            log.warning("axis=%s %s: %d/%d trials exceed P_sat/2 (max ratio %.3f)",
                        axis, top, over, ratios.size, ratios.max())


@dataclass
class SweepResult:
    axis_name: str
    rows: list

    def column(self, topology, key):
        return np.array([r[key] for r in self.rows if r["topology"] == topology])

    @property
    def axis_values(self):
        seen = []
        for r in self.rows:
            if r["axis"] not in seen:
                seen.append(r["axis"])
        return np.array(seen)

    @property
    def topologies(self):
        seen = []
        for r in self.rows:
            if r["topology"] not in seen:
                seen.append(r["topology"])
        return seen


def _se(x):
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def aggregate(records, axis):
    """One row per topology: means and standard errors over trials."""
    by_top = {}
    for r in records:
        by_top.setdefault(r.topology, []).append(r)
    rows = []
    for top, recs in by_top.items():
        ee = [r.energy_efficiency for r in recs]
        mse = [r.mse for r in recs]
        rows.append({
            "axis": float(axis),
            "topology": top,
            "trials": len(recs),
            "mean_ee": float(np.mean(ee)),
            "se_ee": _se(ee),
            "mean_mse": float(np.mean(mse)),
            "se_mse": _se(mse),
            "mean_pg_W": float(np.mean([r.P_g for r in recs])),
            "mean_ptotal_W": float(np.mean([r.power.P_total for r in recs])),
        })
    return rows


def ee_ranking(result):
    """Topologies ordered by mean EE, per consumption family and axis value.

    Returns ``{family: {axis: (topology, ...)}}`` where ``family`` is the
    variant label ("" for the base consumption model).
    """
    out = {}
    for r in result.rows:
        top, _, family = r["topology"].partition(":")
        out.setdefault(family, {}).setdefault(r["axis"], []).append((r["mean_ee"], top))
    return {fam: {ax: tuple(t for _, t in sorted(v, key=lambda p: -p[0])) for ax, v in per.items()}
            for fam, per in out.items()}


def _log_orderings(result):
    ranks = ee_ranking(result)
    base = ranks.get("", {})
    for family, per in ranks.items():
        if not family:
            continue
        for axis, order in per.items():
            if axis in base and base[axis] != order:
                log.info("%s=%s: EE ordering %s under %r vs %s under the base model",
                         result.axis_name, axis, " > ".join(order), family, " > ".join(base[axis]))


def _sweep(axis_name, points):
    rows = []
    for axis, scen in points:
        log.info("%s = %s", axis_name, axis)
        rows += aggregate(run_point(scen, axis), axis)
    result = SweepResult(axis_name, rows)
    _log_orderings(result)
    return result


def sweep_antennas(base, values=None):
    """Vary the antennas per transmitter ``N / N_t``."""
    values = base.sweep.antennas if values is None else values
    return _sweep("n_per_tx", [(v, base.with_(**{"geometry.n_per_tx": int(v), "geometry.aperture_x": None}))
                               for v in values])


def sweep_power(base, values=None):
    """Vary ``P_g^max`` (dBm)."""
    values = base.sweep.power_dBm if values is None else values
    return _sweep("P_g_max_dBm", [(v, base.with_(P_g_max_dBm=float(v))) for v in values])


def sweep_spacing(base, values=None, aperture=None):
    """Vary the x-spacing (wavelengths) at a fixed row aperture."""
    values = base.sweep.spacing if values is None else values
    aperture = aperture or base.geometry.aperture_x
    if aperture is None:
        aperture = base.geometry.n_per_tx * base.geometry.spacing_x
    return _sweep("spacing_x", [(v, base.with_(**{"geometry.spacing_x": float(v), "geometry.aperture_x": aperture}))
                                for v in values])


def run_single(base):
    return _sweep("none", [(0.0, base)])


SWEEPS = {"antennas": sweep_antennas, "power": sweep_power, "spacing": sweep_spacing, "none": run_single}
