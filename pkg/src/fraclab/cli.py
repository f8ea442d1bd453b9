"""Command line front end.

Exit codes: 0 success, 2 estimator failure (resolution rules, degenerate
measurements), 3 configuration error.  Each run writes its artifacts into
<output_dir>/<command>_seed<seed>/: detail CSVs, summary.json, and a
manifest.json with sha256 hashes of every file.  Reruns with the same
configuration are byte-identical.

FRACLAB_THREADS caps worker threads; it never changes results, only speed.
"""

from __future__ import annotations

import argparse
import os
import sys

from fraclab.artifacts import write_csv, write_json, write_manifest
from fraclab.config import (COMMANDS, KEYS, ConfigError, RunConfig, apply_overrides,
                            from_ini, read_config, validate)
from fraclab.dimension import (DIMENSION_CSV_COLUMNS, assouad_codims, dim_from_codim,
                               homogeneity_check, minkowski_upper)
from fraclab.experiments import (KOCH_CODIM, cutoff_decay_experiment, density_verdict,
                                 hardy_reduction_experiment, koch_case_study,
                                 tube_exponent_fit)
from fraclab.geometry import (TUBE_CSV_COLUMNS, DiskDomain, SampleConfig, comb_domain,
                              inner_tube_volume, koch_prefractal, plumpness_check,
                              unit_square)
from fraclab.scaling import (power_scaling, psi_extend, psi_lower_asymptotic_check,
                             tabulated_scaling, wlsc_check, wusc_check)
from fraclab.sobolev import (SOBOLEV_CSV_COLUMNS, SobolevParams, const_field, coord_field,
                             dist_field, dist_power_field, gagliardo_seminorm_p,
                             hardy_quotient, indicator_field)

CUTOFF_CSV_COLUMNS = ["domain", "s", "p", "n", "seminorm_p", "stderr",
                      "tube_volume", "tube_bound", "seed"]

HARDY_SHELLS_CSV_COLUMNS = ["domain", "field_label", "s", "p", "shell",
                            "contribution", "count", "seed"]


def build_domain(cfg: RunConfig):
    if cfg.domain == "disk":
        return DiskDomain()
    if cfg.domain == "square":
        return unit_square()
    if cfg.domain == "koch":
        return koch_prefractal(cfg.level)
    if cfg.domain == "comb":
        return comb_domain(cfg.level)
    raise ConfigError(f"unknown domain {cfg.domain!r}")


def build_field(cfg: RunConfig, domain):
    name = cfg.field
    if name == "const":
        return const_field(1.0)
    if name == "indicator":
        return indicator_field()
    if name == "coord_x1":
        return coord_field(0)
    if name == "coord_x2":
        return coord_field(1)
    if name == "dist":
        return dist_field(domain)
    if name == "distpow":
        return dist_power_field(domain, cfg.s * cfg.p)
    raise ConfigError(f"unknown field {name!r}")


def build_phi(cfg: RunConfig):
    if cfg.phi_kind == "power":
        return power_scaling(cfg.phi_exponent, claimed_eta=cfg.eta, claimed_H=cfg.H)
    return tabulated_scaling(cfg.phi_breaks, cfg.phi_values,
                             claimed_eta=cfg.eta, claimed_H=cfg.H)


def _sample_config(cfg: RunConfig) -> SampleConfig:
    workers = 1
    env = os.environ.get("FRACLAB_THREADS", "")
    if env:
        try:
            workers = max(1, int(env))
        except ValueError:
            workers = 1
    return SampleConfig(seed=cfg.seed, samples=cfg.samples, workers=workers)


def _cutoff_rows(series) -> list:
    rows = []
    for i, n in enumerate(series.n_grid):
        rows.append({
            "domain": series.domain, "s": series.s, "p": series.p, "n": n,
            "seminorm_p": series.seminorm_p[i], "stderr": series.stderrs[i],
            "tube_volume": series.tube_volumes[i], "tube_bound": series.tube_bound[i],
            "seed": "" if series.seed is None else series.seed,
        })
    return rows


def _cutoff_summary(series) -> dict:
    return {
        "domain": series.domain, "s": series.s, "p": series.p,
        "n_grid": list(series.n_grid), "seminorm_p": list(series.seminorm_p),
        "envelope_C": series.envelope_C, "fitted_slope": series.fitted_slope,
        "positive_floor": series.positive_floor, "floor_stderr": series.floor_stderr,
        "sp": series.sp,
    }


def _run_dimension(cfg, domain, scfg, out):
    mink = minkowski_upper(domain, scfg)
    lower, upper = assouad_codims(domain, scfg)
    dim_hi = dim_from_codim(lower)
    dim_lo = dim_from_codim(upper)
    ests = [mink, lower, upper, dim_lo, dim_hi]
    write_csv(os.path.join(out, "dimension.csv"), DIMENSION_CSV_COLUMNS,
              [e.csv_row() for e in ests])
    return {
        "domain": domain.label,
        "minkowski_upper": mink.value,
        "assouad_codim_lower": lower.value,
        "assouad_codim_upper": upper.value,
        "assouad_dim_lower": dim_lo.value,
        "assouad_dim_upper": dim_hi.value,
        "codim_stderr": lower.stderr + upper.stderr,
    }


def _run_tube(cfg, domain, scfg, out):
    est, meas = tube_exponent_fit(domain, scfg, r_min=cfg.r_min, r_max=cfg.r_max,
                                  n_r=cfg.n_r)
    write_csv(os.path.join(out, "tube.csv"), TUBE_CSV_COLUMNS,
              [m.csv_row() for m in meas])
    write_csv(os.path.join(out, "dimension.csv"), DIMENSION_CSV_COLUMNS,
              [est.csv_row()])
    return {
        "domain": domain.label, "tube_exponent": est.value, "stderr": est.stderr,
        "fit_r2": est.fit_r2, "r_min": cfg.r_min, "r_max": cfg.r_max,
        "exponent_spread": list(est.exponent_spread),
    }


def _run_seminorm(cfg, domain, scfg, out):
    f = build_field(cfg, domain)
    params = SobolevParams(cfg.s, cfg.p)
    est = gagliardo_seminorm_p(f, domain, params, scfg, method=cfg.method,
                               grid_n=cfg.grid_n)
    write_csv(os.path.join(out, "sobolev.csv"), SOBOLEV_CSV_COLUMNS, [est.csv_row()])
    return {
        "domain": domain.label, "field": f.label, "s": cfg.s, "p": cfg.p,
        "value_p": est.value_p, "stderr": est.stderr, "method": est.method,
        "rho_min": est.rho_min, "bias_bound": est.bias_bound,
    }


def _run_hardy(cfg, domain, scfg, out):
    f = build_field(cfg, domain)
    params = SobolevParams(cfg.s, cfg.p)
    h = hardy_quotient(f, domain, params, scfg)
    flag = "diverged" if h.diverged else ("borderline" if h.borderline else "")
    write_csv(os.path.join(out, "sobolev.csv"), SOBOLEV_CSV_COLUMNS, [{
        "domain": h.domain, "field_label": h.field_label, "s": cfg.s, "p": cfg.p,
        "quantity": "hardy_quotient", "value": h.value, "stderr": h.stderr,
        "samples": h.samples, "rho_min": "", "bias_bound": 0.0, "diverged": flag,
        "seed": h.seed,
    }])
    write_csv(os.path.join(out, "hardy_shells.csv"), HARDY_SHELLS_CSV_COLUMNS, [{
        "domain": h.domain, "field_label": h.field_label, "s": cfg.s, "p": cfg.p,
        "shell": k, "contribution": c, "count": cnt,
        "seed": "" if h.seed is None else h.seed,
    } for k, c, cnt in h.shells])
    return {
        "domain": h.domain, "field": h.field_label, "s": cfg.s, "p": cfg.p,
        "value": h.value, "stderr": h.stderr, "diverged": h.diverged,
        "borderline": h.borderline, "shell_slope": h.shell_slope,
    }


def _run_density(cfg, domain, scfg, out):
    params = SobolevParams(cfg.s, cfg.p)
    dims = assouad_codims(domain, scfg)
    plump = plumpness_check(domain, kappa=cfg.kappa, cfg=scfg)
    # sigma is the boundary dimension (ambient minus codim); qualitative
    # factor-4 check, so full sample budgets buy nothing here
    homog = homogeneity_check(domain, sigma=domain.ambient_dim - dims[0].value,
                              cfg=scfg.with_(samples=min(scfg.samples, 100_000)))
    verdict = density_verdict(domain, params, dims, plump, homog)
    write_csv(os.path.join(out, "dimension.csv"), DIMENSION_CSV_COLUMNS,
              [dims[0].csv_row(), dims[1].csv_row()])
    return {
        "verdict": verdict.as_dict(),
        "plump": plump.passed, "plump_worst_ratio": plump.worst_ratio,
        "homogeneity_stable": homog.stable,
    }


def _run_cutoff(cfg, domain, scfg, out):
    params = SobolevParams(cfg.s, cfg.p)
    series = cutoff_decay_experiment(domain, params, cfg.n_grid, scfg)
    write_csv(os.path.join(out, "cutoff.csv"), CUTOFF_CSV_COLUMNS, _cutoff_rows(series))
    return _cutoff_summary(series)


def _run_koch(cfg, domain, scfg, out):
    res = koch_case_study(scfg, level=cfg.level, tube_level=cfg.tube_level,
                          cutoff_grid=cfg.n_grid)
    lower, upper = res["codim_lower"], res["codim_upper"]
    tube_est = res["tube_exponent"]
    ests = [lower, upper, dim_from_codim(upper), dim_from_codim(lower), tube_est]
    write_csv(os.path.join(out, "dimension.csv"), DIMENSION_CSV_COLUMNS,
              [e.csv_row() for e in ests])
    write_csv(os.path.join(out, "tube.csv"), TUBE_CSV_COLUMNS,
              [m.csv_row() for m in res["tube_measurements"]])
    write_csv(os.path.join(out, "cutoff_below.csv"), CUTOFF_CSV_COLUMNS,
              _cutoff_rows(res["cutoff_below"]))
    write_csv(os.path.join(out, "cutoff_above.csv"), CUTOFF_CSV_COLUMNS,
              _cutoff_rows(res["cutoff_above"]))
    return {
        "level": res["level"],
        "tube_level": res["tube_level"],
        "threshold": res["threshold"],
        "threshold_estimate": 0.5 * (lower.value + upper.value),
        "codim_lower": lower.value,
        "codim_upper": upper.value,
        "codims_within_tol": res["codims_within_tol"],
        "tube_exponent": tube_est.value,
        "tube_within_tol": res["tube_within_tol"],
        "plump": res["plump"].passed,
        "homogeneity_stable": res["homogeneity"].stable,
        "cutoff_below": _cutoff_summary(res["cutoff_below"]),
        "cutoff_above": _cutoff_summary(res["cutoff_above"]),
        "verdicts": res["verdicts"],
    }


def _run_reduction(cfg, domain, scfg, out):
    u = build_field(cfg, domain)
    phi = build_phi(cfg)
    params = SobolevParams(cfg.s, cfg.p)
    rep = hardy_reduction_experiment(domain, u, phi, cfg.R_loc, params, scfg,
                                     eta=cfg.eta)
    return {
        "domain": rep.domain, "field": u.label, "phi": phi.label,
        "I1": rep.I1, "I2": rep.I2, "I3": rep.I3, "norm_p": rep.norm_p,
        "lhs": rep.lhs, "c_witness": rep.c_witness,
        "I1_stderr": rep.I1_stderr, "I2_stderr": rep.I2_stderr,
        "I3_stderr": rep.I3_stderr, "lhs_stderr": rep.lhs_stderr,
        "inclusion_ok": rep.inclusion_ok, "inclusion_worst": rep.inclusion_worst,
        "I2_tail_bound": rep.I2_tail_bound, "eta0": rep.eta0, "M": rep.M,
        "R_loc": rep.R_loc,
    }


def _run_scaling(cfg, domain, scfg, out):
    phi = build_phi(cfg)
    wl = wlsc_check(phi, cfg.eta, cfg.H)
    wu = wusc_check(phi, cfg.eta, cfg.H)
    summary = {"phi": phi.label, "eta": cfg.eta, "H": cfg.H,
               "wlsc": wl, "wusc": wu}
    if cfg.eta > 0:
        M = domain.diameter
        psi = psi_extend(phi, M, cfg.eta)
        summary["psi"] = psi.label
        summary["psi_wusc"] = wusc_check(psi, cfg.eta, cfg.H)
        summary["psi_lower_asymptotic"] = psi_lower_asymptotic_check(
            psi, M, cfg.R_loc, cfg.eta, cfg.H)
    return summary


_RUNNERS = {
    "dimension": _run_dimension,
    "tube": _run_tube,
    "seminorm": _run_seminorm,
    "hardy": _run_hardy,
    "density": _run_density,
    "cutoff": _run_cutoff,
    "koch": _run_koch,
    "reduction": _run_reduction,
    "scaling": _run_scaling,
}


def run(cfg: RunConfig) -> str:
    """Execute one configured command; returns the output directory."""
    out = os.path.join(cfg.output_dir, f"{cfg.command}_seed{cfg.seed}")
    os.makedirs(out, exist_ok=True)
    domain = build_domain(cfg)
    scfg = _sample_config(cfg)
    summary = _RUNNERS[cfg.command](cfg, domain, scfg, out)
    summary = {"command": cfg.command, "seed": cfg.seed, "samples": cfg.samples,
               **summary}
    write_json(os.path.join(out, "summary.json"), summary)
    write_manifest(out, cfg.command, cfg.seed)
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fraclab",
        description="fractal geometry and fractional Sobolev experiments")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", default=None, help="INI file with one [command] section")
    ap.add_argument("--validate-only", action="store_true",
                    help="report precondition violations and exit without running")
    for key in KEYS:
        ap.add_argument(f"--{key}", default=None, metavar="V")
    return ap


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; unknown flags are config errors
        code = e.code if isinstance(e.code, int) else 1
        return 0 if code == 0 else 3
    try:
        if ns.config is not None:
            cfg = read_config(ns.config)
            if cfg.command != ns.command:
                raise ConfigError(
                    f"config section [{cfg.command}] does not match the"
                    f" requested command {ns.command!r}")
        else:
            cfg = RunConfig(command=ns.command)
        overrides = {k: getattr(ns, k) for k in KEYS if getattr(ns, k) is not None}
        cfg = apply_overrides(cfg, overrides)
        violations = validate(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    if ns.validate_only:
        if violations:
            for v in violations:
                print(f"violation: {v}")
            return 3
        print("ok")
        return 0
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return 3
    try:
        out = run(cfg)
    except (ValueError, ArithmeticError) as e:
        print(f"estimator error: {e}", file=sys.stderr)
        return 2
    print(os.path.join(out, "summary.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
