"""Command-line interface: scenario files, curve emission, comparisons.

Commands::

    ris-sostat analytic  --kind <k> [--scenario f.json] [--grid lo:hi:step] ...
    ris-sostat simulate  --kind <k> [--replicates N] [--seed S] [--mode m] ...
    ris-sostat compare   --kind <k> [--tolerance x] ...
    ris-sostat selftest

Kinds: lcr-direct, lcr-ris, afd-direct, afd-ris, snr-corr, chan-corr,
ageing.  Threshold grids are dB relative to the mean SNR of the selected
link; lag grids are the normalized delay f_m * tau.  Curves are emitted as
CSV (a ``#``-prefixed JSON header line, then one row per grid point) or as
a single JSON document; the header embeds the fully resolved scenario so
every file round-trips.  Exit codes: 0 success, 2 usage error, 3 tolerance
failure, 4 numeric error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from .channel import (
    ExponentialModel,
    LAYOUTS,
    LinkSet,
    ScenarioConfig,
    SincModel,
    build_links,
    default_scenario,
)
from .errors import NumericError, RisSostatError, UsageError

KINDS = ("lcr-direct", "lcr-ris", "afd-direct", "afd-ris", "snr-corr", "chan-corr", "ageing")

DEFAULT_SAMPLE_CAP = 2.0e9  # generated complex samples per simulate run

# per-kind default tolerances for `compare` (relative unless noted)
COMPARE_TOLERANCES = {
    "lcr-direct": 0.15,
    "lcr-ris": 0.15,
    "afd-direct": 0.15,
    "afd-ris": 0.10,
    "snr-corr": 0.03,  # absolute
    "chan-corr": 0.02,  # absolute, entrywise
    "ageing": 2.0,  # percentage points
}
MIN_CROSSINGS = 100

_GEOMETRY_KEYS = {
    "M_x", "M_z", "N_x", "N_z", "d_b", "d_r", "h_b", "h_r", "h_u",
    "alpha_d", "alpha_rb", "alpha_ur", "f_c", "phi_D", "theta_D", "phi_A", "theta_A",
}
_TOP_KEYS = {"geometry", "layout", "spatial_model", "ricean", "doppler", "tx_snr_db", "mc", "grid"}
_MC_KEYS = {"replicates", "seed", "sample_rate", "duration", "sos_count"}
_GRID_KEYS = {"thresholds_db", "taus_norm", "rhos"}


class ToleranceFailure(RisSostatError):
    pass


# ---------------------------------------------------------------------------
# scenario (de)serialization
# ---------------------------------------------------------------------------


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise UsageError(f"unknown keys in {where}: {sorted(unknown)}")


def scenario_from_dict(doc: dict) -> tuple[ScenarioConfig, dict]:
    """Build a ScenarioConfig from a scenario document; returns (config, mc+grid)."""
    if not isinstance(doc, dict):
        raise UsageError("scenario file must hold a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "scenario")
    kwargs: dict = {}

    geometry = doc.get("geometry", {})
    _reject_unknown(geometry, _GEOMETRY_KEYS, "geometry")
    kwargs.update(geometry)

    layout = doc.get("layout", "A")
    if isinstance(layout, str):
        if layout not in LAYOUTS:
            raise UsageError(f"unknown layout {layout!r}")
        kwargs["d_x"], kwargs["d_y"], kwargs["d_rb"] = LAYOUTS[layout]
    else:
        _reject_unknown(layout, {"d_x", "d_y", "d_rb"}, "layout")
        kwargs.update(layout)

    model = doc.get("spatial_model", "sinc")
    if model == "sinc":
        kwargs["spatial_model"] = SincModel()
    elif isinstance(model, dict) and set(model) == {"exponential"}:
        kwargs["spatial_model"] = ExponentialModel(float(model["exponential"]))
    else:
        raise UsageError('spatial_model must be "sinc" or {"exponential": rho}')

    ricean = doc.get("ricean", {})
    _reject_unknown(ricean, {"kappa"}, "ricean")
    if "kappa" in ricean:
        kappa = ricean["kappa"]
        kwargs["kappa_rb"] = math.inf if kappa == "inf" else float(kappa)

    doppler = doc.get("doppler", {})
    _reject_unknown(doppler, {"f_d", "f_ur"}, "doppler")
    kwargs.update(doppler)

    if "tx_snr_db" in doc:
        kwargs["tx_snr"] = 10.0 ** (float(doc["tx_snr_db"]) / 10.0)

    mc_doc = doc.get("mc", {})
    _reject_unknown(mc_doc, _MC_KEYS, "mc")
    grid_doc = doc.get("grid", {})
    _reject_unknown(grid_doc, _GRID_KEYS, "grid")

    try:
        config = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise UsageError(f"bad scenario field: {exc}") from exc
    return config, {"mc": dict(mc_doc), "grid": dict(grid_doc)}


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Fully resolved scenario document that round-trips through scenario_from_dict."""
    geometry = {k: getattr(config, k) for k in sorted(_GEOMETRY_KEYS)}
    if isinstance(config.spatial_model, SincModel):
        model = "sinc"
    else:
        model = {"exponential": config.spatial_model.rho}
    kappa = "inf" if math.isinf(config.kappa_rb) else config.kappa_rb
    return {
        "geometry": geometry,
        "layout": {"d_x": config.d_x, "d_y": config.d_y, "d_rb": config.d_rb},
        "spatial_model": model,
        "ricean": {"kappa": kappa},
        "doppler": {"f_d": config.f_d, "f_ur": config.f_ur},
        "tx_snr_db": 10.0 * math.log10(config.tx_snr),
    }


def _config_hash(config: ScenarioConfig) -> str:
    blob = json.dumps(scenario_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# grids and shared setup
# ---------------------------------------------------------------------------


def _parse_grid_flag(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"--grid must be lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise UsageError("--grid requires step > 0 and hi >= lo")
    return np.arange(lo, hi + 0.5 * step, step)


def _grid_for(kind: str, args, file_grid: dict) -> np.ndarray:
    if args.grid:
        return _parse_grid_flag(args.grid)
    if kind in ("lcr-direct", "lcr-ris", "afd-direct", "afd-ris"):
        spec = file_grid.get("thresholds_db", [-25.0, 8.0, 1.0])
    elif kind in ("snr-corr", "ageing"):
        spec = file_grid.get("taus_norm", [0.0, 1.0, 0.025])
    else:  # chan-corr sweeps the exponential correlation level
        spec = file_grid.get("rhos", [0.0, 1.0, 0.1])
    lo, hi, step = (float(v) for v in spec)
    return np.arange(lo, hi + 0.5 * step, step)


def _mode_for(kind: str, args) -> str:
    if getattr(args, "mode", None):
        return args.mode
    return {"lcr-direct": "direct", "afd-direct": "direct", "lcr-ris": "ris", "afd-ris": "ris"}.get(
        kind, "full"
    )


def _f_ref(scenario: ScenarioConfig, mode: str) -> float:
    if mode == "direct":
        return scenario.f_d
    if mode == "ris":
        return scenario.f_ur
    return max(scenario.f_d, scenario.f_ur)


def _mean_for_mode(scenario: ScenarioConfig, mode: str, links: LinkSet) -> float:
    if mode == "direct":
        return scenario.tx_snr * scenario.M * links.gains.beta_d
    if mode == "ris":
        mom = an.moments_Y(links.R_ur, links.gains.beta_ur)
        return an.ris_snr_scale(scenario, links) * mom.second / links.gains.beta_ur
    return an.mean_snr(scenario, links=links)


def _shadow_links(scenario: ScenarioConfig, links: LinkSet, factor: float) -> LinkSet:
    """Scale the dominant link's power by ``factor`` (the shadowed-link case)."""
    if not 0.0 < factor <= 1.0:
        raise UsageError("--shadow-dominant must lie in (0, 1]")
    direct = _mean_for_mode(scenario, "direct", links)
    ris = _mean_for_mode(scenario, "ris", links)
    g = links.gains
    if direct >= ris:
        g = dataclasses.replace(g, beta_d=g.beta_d * factor)
    else:
        g = dataclasses.replace(g, beta_rb=g.beta_rb * factor)
    return dataclasses.replace(links, gains=g)


# ---------------------------------------------------------------------------
# curve computation
# ---------------------------------------------------------------------------


def _analytic_curve(kind, scenario, links, grid, kept):
    """(columns, rows) for the analytic side of one kind."""
    if kind in ("lcr-direct", "lcr-ris", "afd-direct", "afd-ris"):
        mode = "direct" if kind.endswith("direct") else "ris"
        mean = _mean_for_mode(scenario, mode, links)
        f_m = _f_ref(scenario, mode)
        thresh = mean * 10.0 ** (grid / 10.0)
        if mode == "direct":
            spectrum = an.EigenSpectrum.from_correlation(
                links.R_d, scenario.tx_snr * links.gains.beta_d
            )
            k = kept if kept is not None else min(2, max(1, spectrum.size - 1))
            if kind == "lcr-direct":
                vals = an.lcr_direct_stable(spectrum, k, scenario.f_d, thresh) if spectrum.size > 1 else an.lcr_direct_exact(spectrum, scenario.f_d, thresh)
                norm = vals / f_m
            else:
                vals = an.afd_direct(spectrum, scenario.f_d, thresh, kept=k if spectrum.size > 1 else None)
                norm = vals * f_m
        else:
            mom = an.moments_Y(links.R_ur, links.gains.beta_ur)
            w2 = an.omega2(links.R_ur, links.gains.beta_ur, scenario.f_ur)
            c = an.ris_snr_scale(scenario, links)
            if kind == "lcr-ris":
                vals = an.lcr_ris(thresh, mom.gamma_fit, w2, c)
                norm = vals / f_m
            else:
                vals = an.afd_ris(thresh, mom.gamma_fit, w2, c)
                norm = vals * f_m
        cols = ["snr_db_rel_mean", "analytic", "analytic_norm"]
        rows = [[float(g), float(v), float(nv)] for g, v, nv in zip(grid, vals, norm)]
        return cols, rows, f_m

    if kind == "snr-corr":
        f_m = _f_ref(scenario, "full")
        vals = [an.snr_correlation(scenario, float(ft) / f_m, links=links) for ft in grid]
        return ["f_tau", "analytic"], [[float(g), float(v)] for g, v in zip(grid, vals)], f_m

    if kind == "ageing":
        f_m = _f_ref(scenario, "full")
        rows = []
        for ft in grid:
            loss, pct = an.ageing_loss(scenario, float(ft) / f_m, links=links)
            rows.append([float(ft), loss, pct])
        return ["f_tau", "analytic_loss", "analytic_percent"], rows, f_m

    if kind == "chan-corr":
        rows = []
        for rho in grid:
            sc = dataclasses.replace(scenario, spatial_model=ExponentialModel(float(rho)))
            res = an.channel_corr(sc)
            frac = np.pad(res.eig_fractions, (0, max(0, 4 - res.eig_fractions.size)))[:4]
            rows.append([float(rho), res.S_metric, *map(float, frac)])
        cols = ["rho", "S_metric", "eig_frac_1", "eig_frac_2", "eig_frac_3", "eig_frac_4"]
        return cols, rows, None

    raise UsageError(f"unknown kind {kind!r}")


def _simulate_curve(kind, scenario, links, grid, mc_cfg, mode):
    """(columns, rows) for the Monte Carlo side of one kind."""
    if kind in ("lcr-direct", "lcr-ris", "afd-direct", "afd-ris"):
        mean = _mean_for_mode(scenario, "direct" if kind.endswith("direct") else "ris", links)
        if mode == "full":
            mean = _mean_for_mode(scenario, "full", links)
        thresh = mean * 10.0 ** (grid / 10.0)
        series = mc.simulate_snr_series(scenario, mode, mc_cfg, links)
        f_m = series.f_m
        if kind.startswith("lcr"):
            ests = mc.estimate_lcr(series.values, series.dt, thresh)
            rows = [
                [float(g), e.value, e.value / f_m, e.stderr, e.count]
                for g, e in zip(grid, ests)
            ]
        else:
            ests = mc.estimate_afd(series.values, series.dt, thresh)
            rows = [
                [float(g), e.value, e.value * f_m, e.stderr, e.count]
                for g, e in zip(grid, ests)
            ]
        return ["snr_db_rel_mean", "mc", "mc_norm", "mc_stderr", "mc_count"], rows, f_m

    if kind == "snr-corr":
        f_m = _f_ref(scenario, "full")
        taus = [float(ft) / f_m for ft in grid]
        ests = mc.estimate_snr_corr(scenario, taus, mc_cfg, links)
        rows = [[float(g), e.value, e.stderr, e.count] for g, e in zip(grid, ests)]
        return ["f_tau", "mc", "mc_stderr", "mc_count"], rows, f_m

    if kind == "ageing":
        f_m = _f_ref(scenario, "full")
        taus = [float(ft) / f_m for ft in grid]
        ests = mc.estimate_ageing(scenario, taus, mc_cfg, links)
        rows = [
            [float(g), e.loss.value, e.percent.value, e.percent.stderr, e.percent.count]
            for g, e in zip(grid, ests)
        ]
        return ["f_tau", "mc_loss", "mc_percent", "mc_stderr", "mc_count"], rows, f_m

    if kind == "chan-corr":
        r_hat, se = mc.estimate_channel_corr(scenario, mc_cfg, links)
        rows = []
        for i in range(r_hat.shape[0]):
            for j in range(r_hat.shape[1]):
                rows.append(
                    [i, j, float(r_hat[i, j].real), float(r_hat[i, j].imag), float(se[i, j])]
                )
        return ["row", "col", "mc_re", "mc_im", "mc_stderr"], rows, None

    raise UsageError(f"unknown kind {kind!r}")


def _simulation_budget(kind, scenario, mc_cfg, grid) -> float:
    per_draw = scenario.M + scenario.N
    if not math.isinf(scenario.kappa_rb):
        per_draw += scenario.M * scenario.N
    if kind in ("lcr-direct", "lcr-ris", "afd-direct", "afd-ris"):
        samples = mc_cfg.duration * mc_cfg.sample_rate
        return mc_cfg.replicates * samples * per_draw
    if kind == "chan-corr":
        return mc_cfg.replicates * per_draw
    return mc_cfg.replicates * len(grid) * 2 * per_draw


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _header(kind, command, scenario, mc_cfg, f_m, columns, deterministic):
    head = {
        "tool": "ris-sostat",
        "command": command,
        "kind": kind,
        "scenario": scenario_to_dict(scenario),
        "config_sha256": _config_hash(scenario),
        "columns": columns,
    }
    if f_m is not None:
        head["f_m"] = f_m
    if mc_cfg is not None:
        head["mc"] = dataclasses.asdict(mc_cfg)
        head["seed"] = mc_cfg.seed
    if not deterministic:
        head["generated"] = datetime.now(timezone.utc).isoformat()
    return head


def _emit(head, columns, rows, out, fmt):
    if fmt == "json":
        text = json.dumps({"header": head, "columns": columns, "rows": rows}, indent=1)
    else:
        lines = ["# " + json.dumps(head, sort_keys=True), ",".join(columns)]
        for row in rows:
            lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v) for v in row))
        text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _merge_rows(a_cols, a_rows, m_cols, m_rows):
    """Join analytic and MC rows on the shared abscissa column."""
    columns = a_cols + m_cols[1:]
    rows = [ar + mr[1:] for ar, mr in zip(a_rows, m_rows)]
    return columns, rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load_setup(args):
    if args.scenario:
        with open(args.scenario) as fh:
            doc = json.load(fh)
        scenario, extra = scenario_from_dict(doc)
    else:
        scenario, extra = default_scenario(), {"mc": {}, "grid": {}}
    mc_doc = dict(extra["mc"])
    if getattr(args, "replicates", None) is not None:
        mc_doc["replicates"] = args.replicates
    if getattr(args, "seed", None) is not None:
        mc_doc["seed"] = args.seed
    mc_cfg = mc.McConfig(**mc_doc)
    return scenario, mc_cfg, extra["grid"]


def _links_for(args, scenario):
    links = build_links(scenario)
    if getattr(args, "shadow_dominant", None) is not None:
        links = _shadow_links(scenario, links, args.shadow_dominant)
    return links


def cmd_analytic(args) -> int:
    scenario, _, file_grid = _load_setup(args)
    links = _links_for(args, scenario)
    grid = _grid_for(args.kind, args, file_grid)
    cols, rows, f_m = _analytic_curve(args.kind, scenario, links, grid, args.kept)
    head = _header(args.kind, "analytic", scenario, None, f_m, cols, args.deterministic)
    _emit(head, cols, rows, args.out, args.format)
    return 0


def cmd_simulate(args) -> int:
    scenario, mc_cfg, file_grid = _load_setup(args)
    links = _links_for(args, scenario)
    grid = _grid_for(args.kind, args, file_grid)
    mode = _mode_for(args.kind, args)
    budget = _simulation_budget(args.kind, scenario, mc_cfg, grid)
    if budget > args.max_samples:
        raise UsageError(
            f"simulation budget {budget:.2e} samples exceeds the cap "
            f"{args.max_samples:.2e}; reduce --replicates (or duration), or raise "
            f"--max-samples"
        )
    cols, rows, f_m = _simulate_curve(args.kind, scenario, links, grid, mc_cfg, mode)
    head = _header(args.kind, "simulate", scenario, mc_cfg, f_m, cols, args.deterministic)
    _emit(head, cols, rows, args.out, args.format)
    return 0


def cmd_compare(args) -> int:
    scenario, mc_cfg, file_grid = _load_setup(args)
    links = _links_for(args, scenario)
    grid = _grid_for(args.kind, args, file_grid)
    mode = _mode_for(args.kind, args)
    tol = args.tolerance if args.tolerance is not None else COMPARE_TOLERANCES[args.kind]

    failures = []
    checked = 0
    if args.kind == "chan-corr":
        res = an.channel_corr(scenario, links=links)
        r_hat, _ = mc.estimate_channel_corr(scenario, mc_cfg, links)
        err = np.abs(r_hat - res.R_h)
        checked = err.size
        worst = float(err.max())
        print(f"chan-corr: max entrywise |analytic - mc| = {worst:.4f} (tol {tol})")
        if worst > tol:
            failures.append(("entrywise", worst))
    else:
        a_cols, a_rows, f_m = _analytic_curve(args.kind, scenario, links, grid, args.kept)
        m_cols, m_rows, _ = _simulate_curve(args.kind, scenario, links, grid, mc_cfg, mode)
        for ar, mr in zip(a_rows, m_rows):
            x = ar[0]
            if args.kind == "snr-corr":
                a_val, m_val = ar[1], mr[1]
                err = abs(a_val - m_val)
                ok = err <= tol
            elif args.kind == "ageing":
                a_val, m_val = ar[2], mr[2]
                err = abs(a_val - m_val)
                ok = err <= tol
            else:
                a_val, m_val, count = ar[1], mr[1], mr[4]
                if count < MIN_CROSSINGS:
                    print(f"  x={x:8.3f}  skipped (count {count} < {MIN_CROSSINGS})")
                    continue
                err = abs(a_val - m_val) / m_val
                ok = err <= tol
            checked += 1
            print(f"  x={x:8.3f}  analytic={a_val:.5e}  mc={m_val:.5e}  err={err:.4f}  {'ok' if ok else 'FAIL'}")
            if not ok:
                failures.append((x, err))
    if checked == 0:
        raise UsageError("no grid points were eligible for comparison")
    if failures:
        print(f"compare: {len(failures)}/{checked} points failed (tol {tol})")
        raise ToleranceFailure(f"{len(failures)} points beyond tolerance")
    print(f"compare: all {checked} points within tolerance {tol}")
    return 0


def _selftest_checks():
    from .specfun import (
        elliptic_e,
        elliptic_k,
        hyp1f1,
        hyp2f1,
        hyp2f1_neghalf,
        hyp2f1_poshalf,
        reg_lower_incomplete_gamma,
        bessel_j0,
    )
    from .channel import spatial_correlation, validate_correlation

    checks = []
    checks.append(("2F1(-1/2,-1/2;1;1) = 4/pi", abs(hyp2f1(-0.5, -0.5, 1.0, 1.0) - 4.0 / math.pi) < 1e-10))
    checks.append(("2F1(1/2,1/2;2;1) = 4/pi", abs(hyp2f1(0.5, 0.5, 2.0, 1.0) - 4.0 / math.pi) < 1e-10))
    zg = np.linspace(0.0, 0.98, 25)
    checks.append(
        (
            "2F1 series vs elliptic route",
            max(abs(hyp2f1(-0.5, -0.5, 1.0, float(z)) - hyp2f1_neghalf(float(z))) for z in zg) < 1e-10
            and max(abs(hyp2f1(0.5, 0.5, 2.0, float(z)) - hyp2f1_poshalf(float(z))) for z in zg) < 1e-10,
        )
    )
    ks = np.linspace(0.0, 0.95, 20)
    checks.append(
        (
            "AGM elliptic vs hypergeometric series",
            max(abs(elliptic_k(float(k)) - math.pi / 2.0 * hyp2f1(0.5, 0.5, 1.0, float(k) ** 2)) for k in ks) < 1e-10
            and max(abs(elliptic_e(float(k)) - math.pi / 2.0 * hyp2f1(-0.5, 0.5, 1.0, float(k) ** 2)) for k in ks) < 1e-10,
        )
    )
    checks.append(
        ("Kummer transform identity", abs(hyp1f1(1.0, 2.5, -3.0) - math.exp(-3.0) * hyp1f1(1.5, 2.5, 3.0)) < 1e-12)
    )
    pg = [reg_lower_incomplete_gamma(3.5, x) for x in np.linspace(0.0, 30.0, 40)]
    checks.append(("P(r, x) is a CDF in x", pg[0] == 0.0 and abs(pg[-1] - 1.0) < 1e-9 and np.all(np.diff(pg) >= -1e-12)))
    checks.append(("J0(0) = 1 and first root bracket", bessel_j0(0.0) == 1.0 and bessel_j0(2.40482) > 0.0 > bessel_j0(2.40483)))

    mom = an.moments_Y(np.eye(6), 1.0)
    f0 = an.ChiSquareStyleFit.from_moments(mom.mean, mom.var, 0.0)
    f1 = an.ChiSquareStyleFit.from_moments(mom.mean, mom.var, 1.0)
    checks.append(
        (
            "gamma-fit moment identities",
            abs(f0.cross_moment_12() - f0.moment(1) * f0.moment(2)) < 1e-10 * f0.moment(3)
            and abs(f1.cross_moment_12() - f1.moment(3)) < 1e-10 * f1.moment(3)
            and abs(f1.cross_moment_22() - f1.moment(4)) < 1e-10 * f1.moment(4)
            and abs(f0.cross_moment_22() - f0.moment(2) ** 2) < 1e-10 * f1.moment(4),
        )
    )
    checks.append(("omega2(I) identity", abs(an.omega2(np.eye(7), 2.0, 3.0) - np.pi**2 * 9.0 * 2.0 * 7.0) < 1e-9))

    ok_psd = True
    for model in (SincModel(), ExponentialModel(0.6)):
        R = spatial_correlation(4, 2, 0.3, model)
        try:
            validate_correlation(R)
        except RisSostatError:
            ok_psd = False
    checks.append(("spatial correlation PSD/Hermitian", ok_psd))

    sc = default_scenario("A", kappa_rb=math.inf, M_x=4, M_z=2, N_x=4, N_z=2)
    checks.append(("rho_SNR(0) = 1", abs(an.snr_correlation(sc, 0.0) - 1.0) < 1e-12))
    checks.append(("rho_SNR with dead links = 0", abs(an.snr_correlation(sc, 1.0, rho_d=0.0, rho_ur=0.0)) < 1e-10))
    checks.append(("aged mean at lag 0 equals mean", abs(an.mean_snr_aged(sc, 0.0) - an.mean_snr(sc)) == 0.0))
    sc2 = default_scenario("A", M_x=4, M_z=2, N_x=4, N_z=2, spatial_model=ExponentialModel(1.0))
    res = an.channel_corr(sc2)
    checks.append(("rank-2 channel correlation at rho = 1", float(res.eig_fractions[2]) < 1e-8))
    return checks


def cmd_selftest(_args) -> int:
    checks = _selftest_checks()
    width = max(len(name) for name, _ in checks)
    fails = 0
    for name, ok in checks:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}")
        fails += 0 if ok else 1
    print(f"selftest: {len(checks) - fails}/{len(checks)} passed")
    if fails:
        raise ToleranceFailure(f"{fails} selftest checks failed")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ris-sostat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_mc):
        sp.add_argument("--kind", choices=KINDS, required=True)
        sp.add_argument("--scenario", help="scenario JSON file")
        sp.add_argument("--grid", help="lo:hi:step override for the abscissa grid")
        sp.add_argument("--out", help="output file (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--kept", type=int, help="leading eigenvalues kept by the stable LCR")
        sp.add_argument("--deterministic", action="store_true", help="suppress the timestamp header")
        sp.add_argument("--shadow-dominant", type=float, help="scale the dominant link's power (e.g. 0.5)")
        if with_mc:
            sp.add_argument("--replicates", type=int)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--mode", choices=("direct", "ris", "full"))
            sp.add_argument("--max-samples", type=float, default=DEFAULT_SAMPLE_CAP)

    sp = sub.add_parser("analytic", help="closed-form curves")
    common(sp, with_mc=False)
    sp.set_defaults(fn=cmd_analytic)

    sp = sub.add_parser("simulate", help="Monte Carlo curves")
    common(sp, with_mc=True)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("compare", help="analytic vs Monte Carlo with tolerances")
    common(sp, with_mc=True)
    sp.add_argument("--tolerance", type=float, help="override the per-kind tolerance")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("selftest", help="internal consistency checks")
    sp.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ToleranceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (UsageError, RisSostatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
