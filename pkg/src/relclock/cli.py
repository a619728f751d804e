"""``relclock`` command line: propagate, observe, adev, schedule, estimate, sensitivity.

Every command resolves a mission configuration (preset, optional file, then
``--set`` overrides and ``--seed``), writes its data files into the output
directory and finishes with ``manifest.json``.  Data files depend only on the
resolved configuration and seed; the manifest also records a timestamp.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
import traceback
from datetime import datetime, timezone
from functools import lru_cache, partial
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .constants import AU, DAY, YEAR
from .errors import ConfigError, RelclockError

OUTPUT_ENV = "RELCLOCK_OUTPUT_DIR"
DEFAULT_OUTPUT = "relclock-output"
EXIT_CONFIG, EXIT_NUMERIC = 2, 3

SAGAS_TESTS = ("redshift", "lorentz", "lorentz-cmb", "alpha", "gamma", "anomaly")
ACES_TESTS = ("redshift", "lorentz", "drift")
SENSITIVITIES = ("gw", "kbo", "kuiper")


# --- output helpers ---------------------------------------------------------------

class Outputs:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def json(self, name: str, obj) -> None:
        self.path(name).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")

    def digests(self) -> dict:
        return {n: hashlib.sha256((self.dir / n).read_bytes()).hexdigest() for n in self.files}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _versions() -> dict:
    out = {"relclock": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "pyyaml"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _write_manifest(out: Outputs, command: str, cfg: dict, extra: dict) -> None:
    manifest = {
        "command": command,
        "config_sha256": cfgmod.config_hash(cfg),
        "config": cfg,
        "seed": cfg["seed"],
        "versions": _versions(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": out.digests(),
        **extra,
    }
    (out.dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _need(cfg: dict, mission: str, command: str) -> None:
    has = "profile" in cfg if mission == "sagas" else "orbit" in cfg
    if not has:
        raise ConfigError(f"{command} needs a {mission} configuration", "mission")


def _is_sagas(cfg: dict) -> bool:
    return "profile" in cfg


# --- commands ---------------------------------------------------------------------

def cmd_propagate(args, cfg, out: Outputs) -> dict:
    """Spacecraft state table: heliocentric for sagas, geocentric for aces."""
    if _is_sagas(cfg):
        sc = cfgmod.sagas_scenario(cfg)
        step = cfg["propagate"]["step_days"] * DAY
        t = np.arange(0.0, sc.profile.duration + 0.5 * step, step)
        t = t[t <= sc.profile.duration]
        pos, vel = sc.profile.states(t)
    else:
        sc = cfgmod.aces_scenario(cfg)
        p = cfg["propagate"]
        t = np.arange(0.0, p["span_s"] + 0.5 * p["step_s"], p["step_s"])
        t = t[t <= p["span_s"]]
        pos, vel = sc.space().sample(t)
    r = np.linalg.norm(pos, axis=1)
    rows = (np.concatenate([[ti], pi, vi, [ri, ri / AU]]) for ti, pi, vi, ri in zip(t, pos, vel, r))
    out.csv("trajectory.csv", ["epoch_s", "x_m", "y_m", "z_m", "vx_m_s", "vy_m_s", "vz_m_s", "r_m", "r_au"], rows)
    return {"samples": int(t.size)}


def cmd_observe(args, cfg, out: Outputs) -> dict:
    """Bin-averaged space-minus-ground frequency comparison with the
    configured physics injected and noise drawn from the seed."""
    ph = cfg["physics"]
    if _is_sagas(cfg):
        sc = cfgmod.sagas_scenario(cfg)
        window = tuple(y * YEAR for y in cfg["windows"]["redshift"])
        cmp = sc.comparison(window, preferred_frame=bool(ph["cmb_coefficient"]))
        obs = cmp.inject(cfg["seed"], epsilon=ph["epsilon"], kappa=ph["kappa"], cmb=ph["cmb_coefficient"],
                         k_alpha=ph["k_alpha"], sensitivity=ph["alpha_sensitivity"])
    else:
        cmp = cfgmod.aces_scenario(cfg).comparison()
        obs = cmp.inject(cfg["seed"], epsilon=ph["epsilon"], kappa=ph["kappa"])
    rows = zip(obs.epochs, obs.gravitational, obs.velocity, obs.model_gr, obs.measured, obs.sigma_white)
    out.csv("comparison.csv", ["epoch_s", "gravitational", "velocity", "model_gr", "measured", "sigma_white"], rows)
    return {"bins": int(obs.n), "sigma_common": obs.sigma_common}


def _tau_grid(tau0: float, span: float) -> list[float]:
    taus, decade = [], 1
    while True:
        for k in (1, 2, 5):
            tau = tau0 * k * decade
            if tau > span / 4:
                return taus
            taus.append(tau)
        decade *= 10


def cmd_adev(args, cfg, out: Outputs) -> dict:
    """ADEV/MDEV/TDEV of a synthesized clock or link series."""
    from .noise import (CLOCK_PRESETS, allan_deviation, modified_allan_deviation,
                        synthesize_clock_noise, time_deviation)

    if args.n < 8:
        raise ConfigError("n must be at least 8", "--n")
    if not args.tau0 > 0:
        raise ConfigError("tau0 must be positive", "--tau0")
    name = args.clock or next(iter(cfg["clock"]))
    if name in ("link", "mwl"):
        link = cfgmod.link_model(cfg)
        series = link.synthesize(args.n, args.tau0, cfg["seed"])
        theory = lambda tau: link.adev(tau)
    else:
        model = cfgmod.clock_model(cfg, name) if name in cfg["clock"] else CLOCK_PRESETS.get(name)
        if model is None:
            raise ConfigError(f"unknown clock {name!r}", "--clock")
        series = synthesize_clock_noise(model, args.n, args.tau0, cfg["seed"])
        theory = lambda tau: float(model.adev(tau))
    taus = _tau_grid(args.tau0, series.span)
    ad = allan_deviation(series, taus)
    md = modified_allan_deviation(series, taus)
    td = time_deviation(series, taus)
    rows = ((t, a, m, x, theory(t)) for (t, a), (_, m), (_, x) in zip(ad, md, td))
    out.csv("adev.csv", ["tau_s", "adev", "mdev", "tdev_s", "adev_model"], rows)
    if args.series:
        series.to_csv(out.path("series.csv"))
    return {"clock": name, "n": args.n, "tau0": args.tau0}


def cmd_schedule(args, cfg, out: Outputs) -> dict:
    """Visibility passes per station and pairwise common-view windows."""
    from .schedule import comparison_uncertainty, common_view_windows, visibility_passes

    _need(cfg, "aces", "schedule")
    sc = cfgmod.aces_scenario(cfg)
    stations = cfgmod.network(cfg)
    mask = math.radians(cfg["schedule"]["mask_deg"])
    span = (0.0, cfg["schedule"]["span_days"] * DAY)
    passes = [p for s in stations for p in visibility_passes(sc.orbit, s, mask, span)]
    out.csv("passes.csv", ["station", "start_s", "end_s", "duration_s", "max_elevation_deg"],
            ((p.station, p.start, p.end, p.duration, math.degrees(p.max_elevation)) for p in passes))
    windows = common_view_windows(sc.orbit, stations, mask, span) if len(stations) > 1 else []
    out.csv("common_view.csv", ["station_a", "station_b", "start_s", "end_s", "duration_s"],
            ((*w.stations, w.start, w.end, w.duration) for w in windows))
    budgets = [comparison_uncertainty("non-common-view", dt) for dt in (1e3, 1e4, 1e5)]
    budgets += [comparison_uncertainty("common-view", min(w.duration, 3600.0))
                for w in windows[:1] if w.duration > 0]
    out.csv("budgets.csv", ["mode", "dt_s", "resolution_s"], ((b.mode, b.dt, b.resolution) for b in budgets))
    return {"passes": len(passes), "common_view_windows": len(windows)}


# --- estimate: one replica is a pure function of (config, test, seed) ----------------

@lru_cache(maxsize=4)
def _prepared(cfg_json: str, test: str):
    """Seed-independent setup, cached per process."""
    cfg = json.loads(cfg_json)
    ph = cfg["physics"]
    if not _is_sagas(cfg):
        if test == "drift":
            from .science.clock_tests import drift_campaigns
            d = cfg["drift"]
            return drift_campaigns(d["years"], d["interval_days"] * DAY, d["resolution"])
        return cfgmod.aces_scenario(cfg).comparison()
    sc = cfgmod.sagas_scenario(cfg)
    if test == "gamma":
        from .science.conjunction import ConjunctionGeometry, ConjunctionNoise
        c = cfg["conjunction"]
        geo = ConjunctionGeometry(c["spacecraft_radius_au"] * AU, c["min_impact_solar_radii"] * sc.sun.radius,
                                  c["half_span_days"] * DAY, c["bin_s"])
        return geo, ConjunctionNoise(cfg["clock"]["ground"]["white_fm"], cfg["link"]["turbulence"],
                                     sc.accelerometer)
    if test == "anomaly":
        from .metric import MetricModel
        truth = MetricModel.anomaly([sc.sun], ph["a_p"], ph["onset_radius_au"] * AU)
        return sc, truth
    key = {"redshift": "redshift", "lorentz": "lorentz", "lorentz-cmb": "lorentz", "alpha": "alpha"}[test]
    window = tuple(y * YEAR for y in cfg["windows"][key])
    return sc.comparison(window, preferred_frame=(test == "lorentz-cmb"))


def _replica(cfg_json: str, test: str, seed: int) -> dict:
    from .science import clock_tests as ct

    cfg = json.loads(cfg_json)
    ph = cfg["physics"]
    prep = _prepared(cfg_json, test)
    if test == "drift":
        return ct.constants_drift(prep.inject(seed, drift=ph["drift_per_year"])).to_dict()
    if test == "gamma":
        from .science.conjunction import ppn_gamma_conjunction, simulate_conjunction
        geo, noise = prep
        return ppn_gamma_conjunction(geo, noise, simulate_conjunction(geo, noise, ph["gamma"], seed)).to_dict()
    if test == "anomaly":
        from .science.anomaly import anomaly_mapping, simulate_anomaly_data
        sc, truth = prep
        arcs = [tuple(y * YEAR for y in cfg["windows"]["anomaly"])]
        data = simulate_anomaly_data(sc.space(), truth, arcs, sc.accelerometer, seed,
                                     doppler_white=cfg["clock"]["ground"]["white_fm"])
        return anomaly_mapping(data).to_dict()
    inj = {"epsilon": ph["epsilon"], "kappa": ph["kappa"]}
    if _is_sagas(cfg):
        inj.update(k_alpha=ph["k_alpha"], sensitivity=ph["alpha_sensitivity"])
        if test == "lorentz-cmb":
            inj["cmb"] = ph["cmb_coefficient"]
    obs = prep.inject(seed, **inj)
    if test == "redshift":
        return ct.redshift_test(obs).to_dict()
    if test in ("lorentz", "lorentz-cmb"):
        return ct.lorentz_test(obs, "cmb" if test == "lorentz-cmb" else "none").to_dict()
    return ct.alpha_variation(obs, ph["alpha_sensitivity"]).to_dict()


def _summary(result: dict) -> dict:
    out = {}
    for name, sigma in result["sigmas"].items():
        key = "a_p" if name.startswith("a_p[") else name
        out[f"sigma_{key}"] = sigma
        out[key] = result["parameters"][name]
    return out


def cmd_estimate(args, cfg, out: Outputs) -> dict:
    from .science.montecarlo import run_replicas, seed_sequence

    tests = SAGAS_TESTS if _is_sagas(cfg) else ACES_TESTS
    if args.test not in tests:
        raise ConfigError(f"test {args.test!r} not available for this mission; choose from {', '.join(tests)}",
                          "--test")
    replicas = args.replicas or cfg["estimate"]["replicas"]
    workers = args.workers or cfg["estimate"]["workers"]
    cfg_json = cfgmod.canonical_json(cfg)
    seeds = [cfg["seed"]] if replicas == 1 else seed_sequence(cfg["seed"], replicas)
    results = run_replicas(partial(_replica, cfg_json, args.test), seeds, workers)
    first = dict(results[0], summary=_summary(results[0]), test=args.test)
    extra = {"test": args.test, "replicas": replicas}
    if replicas > 1:
        names = list(results[0]["parameters"])
        vals = np.array([[r["parameters"][n] for n in names] for r in results])
        sig = np.array([results[0]["sigmas"][n] for n in names])
        first["monte_carlo"] = {
            "replicas": replicas,
            "mean": dict(zip(names, vals.mean(axis=0).tolist())),
            "scatter": dict(zip(names, vals.std(axis=0, ddof=1).tolist())),
            "scatter_over_sigma": dict(zip(names, (vals.std(axis=0, ddof=1) / sig).tolist())),
        }
        out.csv("replicas.csv", ["replica", "seed", *names],
                ([i, s, *v] for i, (s, v) in enumerate(zip(seeds, vals))))
    out.json("result.json", first)
    return extra


def cmd_sensitivity(args, cfg, out: Outputs) -> dict:
    _need(cfg, "sagas", "sensitivity")
    what = args.what
    if what == "gw":
        from .science.gw import gw_sensitivity
        g = cfg["gw"]
        res = gw_sensitivity(cfgmod.clock_model(cfg, "space"), cfgmod.accelerometer_model(cfg),
                             g["span_years"] * YEAR, tuple(g["band_hz"]), int(g["points"]), g["template_hz"])
        out.csv("gw_sensitivity.csv", ["f_Hz", "strain_per_sqrtHz"], zip(res.frequency, res.strain_asd))
        out.json("gw_summary.json", {"floor": res.floor, "corner_hz": res.corner, "span_s": res.span,
                                     "template_hz": res.template_frequency,
                                     "template_limit": res.template_limit})
    elif what == "kbo":
        from .science.kuiper import kbo_crossover_and_mass
        acc = cfgmod.accelerometer_model(cfg)
        k = kbo_crossover_and_mass(cfg["kbo"]["gm"], cfg["kbo"]["approach_au"] * AU, acc.bias_uncertainty,
                                   cfg["clock"]["space"]["accuracy"])
        out.json("kbo.json", {"crossover_radius_m": k.crossover_radius, "crossover_radius_au": k.crossover_radius / AU,
                              "acceleration": k.acceleration, "frequency_shift": k.frequency_shift,
                              "mass_sigma_relative": k.mass_sigma_relative, "route": k.route})
    else:
        from .constants import C2
        from .science.kuiper import kuiper_potential
        model = cfgmod.kuiper_model(cfg)
        rows = []
        for pt in cfg["kuiper"]["field_points_au"]:
            w = kuiper_potential(model, np.asarray(pt, dtype=float) * AU)
            rows.append([*map(float, pt), w.w, w.reduced])
        out.csv("kuiper_potential.csv", ["x_au", "y_au", "z_au", "w_m2_s2", "w_over_c2"], rows)
    return {"what": what}


COMMANDS = {
    "propagate": cmd_propagate, "observe": cmd_observe, "adev": cmd_adev,
    "schedule": cmd_schedule, "estimate": cmd_estimate, "sensitivity": cmd_sensitivity,
}


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="preset name (aces, sagas, sagas.preset) or YAML file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                        help="override a config entry, e.g. clock.pharao.white_fm=1e-13")
    common.add_argument("--seed", type=int, help="64-bit RNG seed (required here or in the config)")
    common.add_argument("--output-dir", type=Path,
                        help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")

    p = argparse.ArgumentParser(prog="relclock", description="Relativistic clock-test simulator.")
    p.add_argument("--version", action="version", version=f"relclock {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("propagate", parents=[common], help="export the spacecraft trajectory")
    sub.add_parser("observe", parents=[common], help="simulate the binned clock comparison")
    a = sub.add_parser("adev", parents=[common], help="synthesize clock noise and measure ADEV/TDEV")
    a.add_argument("--clock", help="clock name from the config, a built-in preset, or 'mwl' for the link")
    a.add_argument("--n", type=int, default=100_000, help="number of samples")
    a.add_argument("--tau0", type=float, default=1.0, help="sample interval in seconds")
    a.add_argument("--series", action="store_true", help="also write the synthesized series")
    sub.add_parser("schedule", parents=[common], help="visibility passes and common-view windows")
    e = sub.add_parser("estimate", parents=[common], help="run an estimator on simulated data")
    e.add_argument("--test", required=True, choices=sorted(set(SAGAS_TESTS + ACES_TESTS)))
    e.add_argument("--replicas", type=int, help="Monte Carlo replicas (seeds derived from --seed)")
    e.add_argument("--workers", type=int, help="worker processes for replicas")
    s = sub.add_parser("sensitivity", parents=[common], help="GW, KBO and Kuiper-belt sensitivity")
    s.add_argument("--what", choices=SENSITIVITIES, default="gw")
    return p


def _origin(exc: BaseException) -> str:
    """Dotted name of the innermost package module on the traceback."""
    root = Path(__file__).resolve().parent
    name = "relclock"
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename).resolve()
        if root in path.parents:
            name = ".".join(("relclock", *path.relative_to(root).with_suffix("").parts))
    return name


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        for flag in ("replicas", "workers"):
            if (getattr(args, flag, None) or 1) < 1:
                raise ConfigError("must be a positive integer", f"--{flag}")
        spec = args.config or ("aces" if args.command == "adev" else None)
        if spec is None:
            raise ConfigError("--config is required (preset name or YAML file)")
        cfg = cfgmod.resolve_config(spec, args.overrides, args.seed)
        directory = args.output_dir or Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
        out = Outputs(Path(directory))
        extra = COMMANDS[args.command](args, cfg, out)
        _write_manifest(out, args.command, cfg, extra)
    except ConfigError as exc:
        print(f"relclock: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RelclockError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"relclock: error in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"relclock {args.command}: wrote {', '.join(out.files + ['manifest.json'])} to {out.dir}")
    return 0


def main() -> None:
    sys.exit(run())
