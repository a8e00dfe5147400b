"""Command-line front end: ``spincavity <command> --config PATH --out DIR``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Data files are
deterministic; ``run_meta.txt`` additionally records timing. On failure every
file written by the run is removed again.
"""

import argparse
import datetime
import itertools
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .builders import dynamics_config, field_grid, fit_config, physical_context, spin_params
from .crossings import crossing_catalog, crossing_field_h0, level_diagram
from .dynamics import derive_dimensionless, sweep
from .errors import NumericalError, ValidationError
from .hysteresis import fit_anisotropy_params, simulate_hysteresis
from .io import write_csv, write_key_values
from .observables import (dM_dB0_curve, emitted_energy, leaked_photons, radiating_family, t0_scan,
                          transition_catalog, write_peaks_csv, write_t0_csv)
from .reduction import pair_coupling
from .scenario import COMMANDS, parse_scenario

log = logging.getLogger("spincavity")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class Outputs:
    """Tracks files written into the output directory so a failed run can be undone."""

    def __init__(self, directory, plots=True):
        self.dir = Path(directory)
        self.plots = plots
        self.created_dir = not self.dir.exists()
        self.files = []
        self.meta = []

    def path(self, name):
        p = self.dir / name
        self.files.append(p)
        return p

    def plot(self, func, *args, name):
        if self.plots:
            from . import plotting

            getattr(plotting, func)(*args, self.path(name))

    def cleanup(self):
        for p in self.files:
            p.unlink(missing_ok=True)
        if self.created_dir and self.dir.exists() and not any(self.dir.iterdir()):
            self.dir.rmdir()


def run_levels(sc, out):
    diagram = level_diagram(spin_params(sc), field_grid(sc))
    diagram.write_csv(out.path("levels.csv"))
    out.plot("plot_levels", diagram, name="levels.png")


CROSSING_HEADER = ["m", "m_prime", "B0_star_tesla", "delta0_joule", "epsilon0_joule", "B0_h0_tesla"]


def _catalog(sc, params):
    f = sc["field"]
    return crossing_catalog(params, (f["B_min"], f["B_max"]), step=f["scan_step"], half_width=f["half_width"])


def run_crossings(sc, out):
    params = spin_params(sc)
    records = _catalog(sc, params)
    write_csv(out.path("crossings.csv"), CROSSING_HEADER,
              [(r.m, r.m_prime, r.B0_star, r.delta0, r.epsilon0, crossing_field_h0(r.m, r.m_prime, params))
               for r in records])
    out.meta.append(("crossings_found", len(records)))
    if records:
        out.plot("plot_crossings", records, name="crossings.png")


def _hysteresis(sc, params):
    f = sc["field"]
    return simulate_hysteresis(params, f["sweep_rate"], f["temperature"], (f["B_min"], f["B_max"]),
                               catalog=_catalog(sc, params), n_grid=f["B_points"],
                               rethermalize=f["rethermalize"])


def _write_steps(path, result):
    write_csv(path, ["m", "m_prime", "B0_star_tesla", "probability", "height"],
              [(s.record.m, s.record.m_prime, s.record.B0_star, s.probability, s.height)
               for s in result.step_records])


def run_hysteresis(sc, out):
    result = _hysteresis(sc, spin_params(sc))
    result.write_csv(out.path("hysteresis.csv"))
    _write_steps(out.path("steps.csv"), result)
    out.plot("plot_hysteresis", result, name="hysteresis.png")


def run_fit(sc, out):
    params = spin_params(sc)
    f, fr = sc["fit"], sc["field"]
    targets = list(f["targets"])
    if f["synthetic"]:
        synth = _hysteresis(sc, params)
        targets = [(b, h) for b, h in synth.steps() if abs(h) > f["synthetic_threshold"]]
        out.meta.append(("synthetic_targets", len(targets)))
    fit = fit_config(sc, targets)
    result = fit_anisotropy_params(fit, params, fr["sweep_rate"], fr["temperature"], seed=sc.seed)
    write_csv(out.path("fit_targets.csv"), ["B0_tesla", "height"], targets)
    write_key_values(out.path("fit_report.txt"), result.report_items())
    fitted = params.replace(C_over_kB=result.C_over_kB, E_over_kB=result.E_over_kB, K_coeff=result.K_coeff)
    hyst = _hysteresis(sc, fitted)
    hyst.write_csv(out.path("fit_hysteresis.csv"))
    out.plot("plot_hysteresis", hyst, name="fit_hysteresis.png")


def _sweep_configs(sc):
    base = dynamics_config(sc)
    s = sc["sweep"]
    grid = itertools.product(s["gamma_values"] or (base.gamma,), s["kappa_values"] or (base.kappa,),
                             s["v_values"] or (base.v,))
    return [dynamics_config(sc, gamma=g, kappa=k, v=v) for g, k, v in grid]


def _record_stats(out, label, traj):
    out.meta += [(f"{label}.{k}", v) for k, v in traj.stats.as_items()]


def run_dynamics(sc, out):
    configs = _sweep_configs(sc)
    mode = sc["dynamics"]["mode"]
    trajectories = sweep(configs, mode)
    rows = []
    for i, (cfg, tr) in enumerate(zip(configs, trajectories)):
        name = f"trajectory_{i:03d}.csv"
        tr.to_csv(out.path(name))
        rows.append((i, cfg.gamma, cfg.kappa, cfg.v, tr.Z[-1], tr.intensity.max(), name))
        _record_stats(out, f"trajectory_{i:03d}", tr)
    write_csv(out.path("dynamics_index.csv"),
              ["index", "gamma", "kappa", "v", "Z_final", "peak_intensity", "file"], rows)
    labels = [f"gamma={c.gamma:g} kappa={c.kappa:g} v={c.v:g}" for c in configs]
    out.plot("plot_trajectories", trajectories, labels, name="dynamics.png")


def run_maser(sc, out):
    params = spin_params(sc)
    p = sc["physical"]
    s_abs = p["s_magnitude"]
    if s_abs is None:
        s_abs = pair_coupling(params, p["B0"], (p["m"], p["m_prime"])).s_abs
    ctx = physical_context(sc, s_abs)
    cfg, T0 = derive_dimensionless(ctx, dynamics_config(sc))
    traj = sweep([cfg], sc["dynamics"]["mode"])[0]
    traj.to_csv(out.path("maser_trajectory.csv"))
    summary = [("T0_seconds", T0), ("s_magnitude", s_abs), ("gamma", cfg.gamma), ("kappa", cfg.kappa),
               ("v", cfg.v), ("beta", cfg.beta), ("Z_final", traj.Z[-1]),
               ("leaked_photons_per_molecule", leaked_photons(traj))]
    if ctx.volume is not None:
        summary.append(("emitted_energy_joule", emitted_energy(traj, ctx)))
    write_key_values(out.path("maser_summary.txt"), summary)
    _record_stats(out, "maser", traj)
    out.plot("plot_trajectories", [traj], [f"({ctx.m},{ctx.m_prime})"], name="maser.png")


def run_t0scan(sc, out):
    params = spin_params(sc)
    t = sc["t0scan"]
    catalog = transition_catalog(params, t["B0"], radiating_family(params, t["family_total"]))
    temps = np.linspace(t["T_min"], t["T_max"], t["T_points"])
    rows = t0_scan(params, t["B0"], temps, catalog, density=t["density"], filling_factor=t["filling_factor"])
    write_t0_csv(out.path("t0_scan.csv"), rows)
    write_csv(out.path("t0_candidates.csv"), ["temperature_K", "m", "m_prime", "T0_seconds"],
              [(r.temperature, *c) for r in rows for c in r.candidates])
    write_csv(out.path("t0_catalog.csv"), ["m", "m_prime", "B0_tesla", "s_abs", "omega_rad_per_s", "upper_m"],
              [(c.m, c.m_prime, c.B0, c.s_abs, c.omega, c.upper) for c in catalog])
    out.plot("plot_t0_scan", rows, name="t0_scan.png")


def peak_configs(sc):
    """One config per sweep rate; rate mode starts where v tau = -10 gamma."""
    pk = sc["peaks"]
    base = dynamics_config(sc)
    configs = []
    for v in pk["v_values"]:
        start = base.tau_span[0] if pk["mode"] == "coherent" else -10 * pk["gamma"] / v
        configs.append(base.replace(gamma=pk["gamma"], kappa=pk["kappa"], v=v, tau_span=(start, pk["tau_end"])))
    return configs


def run_peaks(sc, out):
    configs = peak_configs(sc)
    trajectories = sweep(configs, sc["peaks"]["mode"])
    reports = [dM_dB0_curve(tr, cfg.v) for cfg, tr in zip(configs, trajectories)]
    write_peaks_csv(out.path("peaks.csv"), reports)
    write_csv(out.path("peak_curves.csv"), ["v", "v_tau", "dM_dB0"],
              [(r.v, x, y) for r in reports for x, y in zip(r.abscissa, r.curve)])
    for r in reports:
        out.meta.append((f"sign_changes.v={r.v:g}", r.sign_changes()))
    out.plot("plot_peaks", reports, name="peaks.png")


RUNNERS = {
    "levels": run_levels,
    "crossings": run_crossings,
    "hysteresis": run_hysteresis,
    "fit": run_fit,
    "dynamics": run_dynamics,
    "maser": run_maser,
    "t0scan": run_t0scan,
    "peaks": run_peaks,
}


def run_scenario(scenario, out_dir, *, plots=True):
    """Run ``scenario`` writing into ``out_dir``; returns the process exit code."""
    out = Outputs(out_dir, plots)
    started = time.perf_counter()
    try:
        out.dir.mkdir(parents=True, exist_ok=True)
        RUNNERS[scenario.command](scenario, out)
        meta = [("command", scenario.command), ("seed", "none" if scenario.seed is None else scenario.seed),
                ("version", __version__), ("plots", plots)]
        meta += scenario.items()
        meta += out.meta
        meta += [("outputs", ";".join(p.name for p in out.files)),
                 ("timestamp", datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")),
                 ("wall_time_seconds", time.perf_counter() - started)]
        write_key_values(out.path("run_meta.txt"), [(k, "none" if v is None else v) for k, v in meta])
    except ValidationError as exc:
        out.cleanup()
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except NumericalError as exc:
        out.cleanup()
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except BaseException:
        out.cleanup()
        raise
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="spincavity", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="scenario file (defaults apply when omitted)")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for fit restarts")
    parser.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        scenario = parse_scenario(text, args.command, seed=args.seed)
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_INVALID
    except ValidationError as exc:
        log.error("invalid scenario: %s", exc)
        return EXIT_INVALID
    code = run_scenario(scenario, args.out, plots=not args.no_plots)
    if code == EXIT_OK:
        print(f"{args.command}: wrote {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
