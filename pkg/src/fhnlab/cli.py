"""Experiment driver: named scenarios with JSON configs and CSV/JSON artifacts.

Verbs:

  fhnlab run <config.json>       execute a scenario, write artifacts + manifest
  fhnlab validate <config.json>  schema-check a config and echo the effective one
  fhnlab compare <files...>      cross-validate diffusivity estimates

Every run writes a ``manifest.json`` recording the effective configuration
(defaults filled in), a hash of the input config, package version, and wall
time; numeric CSV columns are printed with 17 significant digits so reruns
with identical configs are byte-identical.  Exit codes: 0 ok, 1 configuration
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, bloch, dispersion, dns, model, wavetrain
from .errors import ConfigError, FHNLabError, ScenarioError

SCENARIOS = (
    "singular-limit", "dispersion-curve", "wavetrain-continue",
    "bloch-spectrum", "deff-sweep", "dns-perturb", "instability-demo",
)

_SCHEMA = {
    "type": "object",
    "required": ["scenario", "model"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "scenario": {"enum": list(SCENARIOS)},
        "model": {
            "type": "object",
            "required": ["a", "gamma", "epsilon"],
            "properties": {
                "kind": {"enum": ["classic", "modified"]},
                "a": {"type": "number"},
                "gamma": {"type": "number"},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "r": {"type": "number"},
            },
        },
        "speed": {"type": "number", "exclusiveMinimum": 0},
        "numerics": {"type": "object"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer"},
    },
}

_NUMERIC_DEFAULTS = {
    "n_collocation": 1024,
    "dt": 0.1,
    "dx": 0.1,
    "newton_tol": 1e-10,
    "n_rho": 48,
    "rho_max": None,
    "c_range": [2.0, 0.4],
    "c_steps": 24,
    "repeats": 8,
    "t_end": 4000.0,
    "sample_dt": 100.0,
    "threshold": 1e-5,
    "transient_cut": 0.2,
    "epsilons": [1e-3, 1e-4, 1e-5, 1e-6],
    "perturbation": {"kind": "gaussian", "amplitude": 1e-2, "width_sq": 100.0},
    "im_window": 1.5,
    "re_floor": -0.5,
    "L_eps": None,
}


@dataclass
class ExperimentConfig:
    """Validated scenario configuration with defaults filled in."""

    scenario: str
    model_kind: str
    a: float
    gamma: float
    epsilon: float
    r: float
    speed: float
    numerics: dict
    output_dir: str
    seed: int
    schema_version: int = 1

    def reaction_model(self) -> model.ReactionModel:
        params = model.ModelParams(a=self.a, gamma=self.gamma,
                                   epsilon=self.epsilon, r=self.r)
        if self.model_kind == "classic":
            return model.classic_fhn(params)
        return model.modified_fhn(params)


def load_config(path) -> tuple[ExperimentConfig, dict]:
    """Parse and validate a config file; returns (config, raw dict)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw), raw


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        import jsonschema
        jsonschema.validate(raw, _SCHEMA)
    except ImportError:
        _validate_fallback(raw)
    except Exception as exc:
        raise ConfigError(f"config schema violation: {exc}") from exc
    numerics = dict(_NUMERIC_DEFAULTS)
    numerics.update(raw.get("numerics", {}))
    if raw["scenario"] == "deff-sweep" and not numerics.get("epsilons"):
        raise ConfigError("deff-sweep requires a nonempty 'epsilons' list")
    mdl = raw["model"]
    out_root = os.environ.get("FHNLAB_OUTPUT_ROOT", ".")
    out = raw.get("output_dir", "fhnlab-out")
    if not os.path.isabs(out):
        out = os.path.join(out_root, out)
    return ExperimentConfig(
        scenario=raw["scenario"],
        model_kind=mdl.get("kind", "classic"),
        a=float(mdl["a"]), gamma=float(mdl["gamma"]),
        epsilon=float(mdl["epsilon"]), r=float(mdl.get("r", 0.0)),
        speed=float(raw.get("speed", 2.0)),
        numerics=numerics,
        output_dir=out,
        seed=int(raw.get("seed", 0)),
        schema_version=int(raw.get("schema_version", 1)),
    )


def _validate_fallback(raw: dict):
    if raw.get("scenario") not in SCENARIOS:
        raise ConfigError(f"unknown scenario {raw.get('scenario')!r}")
    mdl = raw.get("model")
    if not isinstance(mdl, dict) or not all(k in mdl for k in ("a", "gamma", "epsilon")):
        raise ConfigError("model section must define a, gamma, epsilon")
    if float(mdl["epsilon"]) <= 0:
        raise ConfigError("epsilon must be positive")


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_csv(path, header: list[str], columns: list[np.ndarray]):
    rows = zip(*columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# scenarios


def _scenario_singular_limit(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    sl = model.singular_limit(cfg.reaction_model(), cfg.speed)
    payload = {k: v for k, v in asdict(sl).items() if not isinstance(v, dict)}
    payload["params"] = asdict(sl.params)
    pred = dispersion.predict(sl, cfg.epsilon)
    payload["d_eff_leading"] = pred.d_eff_leading
    payload["lambda_pp_leading"] = pred.lambda_pp_leading
    payload["epsilon"] = cfg.epsilon
    _write_json(outdir / "singular_limit.json", payload)
    return ["singular_limit.json"]


def _scenario_dispersion_curve(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    sl = model.singular_limit(cfg.reaction_model(), cfg.speed)
    L_eps = num["L_eps"] or sl.L0 / cfg.epsilon
    rho_max = num["rho_max"] or np.pi / L_eps
    rho = np.linspace(-rho_max, rho_max, 2 * int(num["n_rho"]) + 1)
    rho[int(num["n_rho"])] = 0.0  # exact origin for the trivial branch seed
    samples = dispersion.solve_critical_curve(sl, cfg.epsilon, L_eps, rho)
    write_csv(outdir / "critical_curve.csv",
              ["rho", "re_lambda", "im_lambda", "branch_tag"],
              [np.array([s.rho for s in samples]),
               np.array([s.lam.real for s in samples]),
               np.array([s.lam.imag for s in samples]),
               np.array([float(s.branch_tag) for s in samples])])
    lam_p, lam_pp = dispersion.curve_derivatives_at_zero(sl, cfg.epsilon, L_eps)
    pred = dispersion.predict(sl, cfg.epsilon)
    _write_json(outdir / "dispersion_summary.json", {
        "epsilon": cfg.epsilon, "c": cfg.speed, "L_eps": L_eps,
        "lam_p0_re": lam_p.real, "lam_p0_im": lam_p.imag,
        "lam_pp0": lam_pp.real, "d_eff": -lam_pp.real,
        "d_eff_leading": pred.d_eff_leading,
    })
    return ["critical_curve.csv", "dispersion_summary.json"]


def _converged_train(cfg: ExperimentConfig) -> wavetrain.WaveTrain:
    return wavetrain.wavetrain_at(cfg.reaction_model(), cfg.speed, cfg.epsilon,
                                  n=int(cfg.numerics["n_collocation"]),
                                  tol=float(cfg.numerics["newton_tol"]))


def _scenario_wavetrain_continue(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    c_lo, c_hi = num["c_range"]
    record, trains = wavetrain.continue_in_c(
        cfg.reaction_model(), cfg.epsilon, (float(c_lo), float(c_hi)),
        steps=int(num["c_steps"]), n=int(num["n_collocation"]),
        tol=float(num["newton_tol"]))
    ss = record.sorted_by_c()
    write_csv(outdir / "continuation.csv",
              ["c", "L_eps", "ell", "omega", "amplitude"],
              [np.array([s[i] for s in ss]) for i in range(5)])
    wavetrain.save_wavetrain(trains[-1], outdir / "wavetrain.csv",
                             outdir / "wavetrain.json")
    _write_json(outdir / "continuation_summary.json", {
        "n_samples": len(ss),
        "period_monotone_in_c": record.period_monotone_in_c,
        "max_residual": max(t.residual_norm for t in trains),
    })
    return ["continuation.csv", "wavetrain.csv", "wavetrain.json",
            "continuation_summary.json"]


def _scenario_bloch_spectrum(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    wt = _converged_train(cfg)
    curve = bloch.critical_curve(wt, n_rho=int(num["n_rho"]),
                                 im_window=float(num["im_window"]),
                                 re_floor=float(num["re_floor"]))
    write_csv(outdir / "bloch_curve.csv", ["rho", "re_lambda", "im_lambda"],
              [curve.rho_samples, curve.lam_samples.real, curve.lam_samples.imag])
    omega_prime, lam_pp = bloch.lambda_pp_adjoint(wt)
    _write_json(outdir / "bloch_summary.json", {
        "epsilon": cfg.epsilon, "c": wt.c, "L_eps": wt.L_eps,
        "lam_p0_re": curve.lam_p0.real, "lam_p0_im": curve.lam_p0.imag,
        "lam_pp0": curve.lam_pp0.real, "lam_pp0_adjoint": lam_pp,
        "omega_prime": omega_prime, "d_eff": -lam_pp,
        "max_re": curve.max_re,
        "unstable_rhos": list(map(float, curve.unstable_rhos)),
    })
    wavetrain.save_wavetrain(wt, outdir / "wavetrain.csv", outdir / "wavetrain.json")
    return ["bloch_curve.csv", "bloch_summary.json", "wavetrain.csv", "wavetrain.json"]


def _scenario_deff_sweep(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    eps_list = [float(e) for e in num["epsilons"]]
    if not eps_list:
        raise ConfigError("empty epsilon list")
    mdl = cfg.reaction_model()
    sl = model.singular_limit(mdl, cfg.speed)
    rows = {"epsilon": [], "lam_pp0": [], "d_eff": [], "d_eff_leading": [],
            "L_eps": []}
    for eps in eps_list:
        params = model.ModelParams(a=cfg.a, gamma=cfg.gamma, epsilon=eps, r=cfg.r)
        m_eps = (model.classic_fhn(params) if cfg.model_kind == "classic"
                 else model.modified_fhn(params))
        wt = wavetrain.wavetrain_at(m_eps, cfg.speed, eps,
                                    n=int(num["n_collocation"]),
                                    tol=float(num["newton_tol"]))
        _, lam_pp = bloch.lambda_pp_adjoint(wt)
        rows["epsilon"].append(eps)
        rows["lam_pp0"].append(lam_pp)
        rows["d_eff"].append(-lam_pp)
        rows["d_eff_leading"].append(dispersion.predict(sl, eps).d_eff_leading)
        rows["L_eps"].append(wt.L_eps)
    write_csv(outdir / "deff_sweep.csv", list(rows.keys()),
              [np.array(v) for v in rows.values()])
    le, ld = np.log(rows["epsilon"]), np.log(np.abs(rows["lam_pp0"]))
    slope = float(np.polyfit(le, ld, 1)[0]) if len(eps_list) > 1 else float("nan")
    _write_json(outdir / "deff_sweep_summary.json", {
        "epsilons": rows["epsilon"], "d_eff": rows["d_eff"],
        "loglog_slope": slope,
    })
    return ["deff_sweep.csv", "deff_sweep_summary.json"]


def _scenario_dns_perturb(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    wt = _converged_train(cfg)
    pspec = dict(num["perturbation"])
    pspec.setdefault("seed", cfg.seed)
    pert = dns.Perturbation(**pspec)
    series, snaps = dns.run_perturbation_experiment(
        wt, repeats=int(num["repeats"]), perturbation=pert,
        t_end=float(num["t_end"]), sample_dt=float(num["sample_dt"]),
        dt=float(num["dt"]), dx_target=float(num["dx"]),
        threshold=float(num["threshold"]), keep_snapshots=4)
    write_csv(outdir / "width_series.csv", ["t", "width"],
              [series.times, series.widths])
    est = dns.extract_deff(series, transient_cut=float(num["transient_cut"]))
    _write_json(outdir / "dns_summary.json", {
        "epsilon": cfg.epsilon, "c": wt.c, "L_eps": wt.L_eps,
        "d_eff": est.d_eff, "band": est.band, "slope": est.slope,
        "n_samples": est.n_samples, "seed": cfg.seed,
        "dt": num["dt"], "dx": wt.L_eps / 2 ** int(round(np.log2(wt.L_eps / num["dx"]))),
        "threshold": num["threshold"],
    })
    np.savez_compressed(outdir / "snapshots.npz",
                        **{f"t_{i}": np.array([t]) for i, (t, _) in enumerate(snaps)},
                        **{f"pert_{i}": p for i, (_, p) in enumerate(snaps)})
    return ["width_series.csv", "dns_summary.json", "snapshots.npz"]


def _scenario_instability_demo(cfg: ExperimentConfig, outdir: Path) -> list[str]:
    num = cfg.numerics
    wt = _converged_train(cfg)
    curve = bloch.critical_curve(wt, n_rho=int(num["n_rho"]),
                                 im_window=float(num["im_window"]),
                                 re_floor=float(num["re_floor"]))
    write_csv(outdir / "bloch_curve.csv", ["rho", "re_lambda", "im_lambda"],
              [curve.rho_samples, curve.lam_samples.real, curve.lam_samples.imag])
    flat = [ev for _, evs in curve.window_eigs for ev in evs]
    flat = np.array(flat) if flat else np.zeros(0, dtype=complex)
    write_csv(outdir / "window_spectrum.csv", ["re_lambda", "im_lambda"],
              [flat.real, flat.imag])
    _write_json(outdir / "instability_summary.json", {
        "epsilon": cfg.epsilon, "c": wt.c, "L_eps": wt.L_eps,
        "max_re": curve.max_re,
        "unstable": bool(curve.max_re > 0.0),
        "unstable_rhos": list(map(float, curve.unstable_rhos)),
    })
    return ["bloch_curve.csv", "window_spectrum.csv", "instability_summary.json"]


_RUNNERS = {
    "singular-limit": _scenario_singular_limit,
    "dispersion-curve": _scenario_dispersion_curve,
    "wavetrain-continue": _scenario_wavetrain_continue,
    "bloch-spectrum": _scenario_bloch_spectrum,
    "deff-sweep": _scenario_deff_sweep,
    "dns-perturb": _scenario_dns_perturb,
    "instability-demo": _scenario_instability_demo,
}


def run(cfg: ExperimentConfig, raw: dict | None = None) -> dict:
    """Execute a scenario and write its artifacts plus a manifest."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        artifacts = _RUNNERS[cfg.scenario](cfg, outdir)
    except FHNLabError:
        raise
    except Exception as exc:
        raise ScenarioError(f"{cfg.scenario} failed: {exc}") from exc
    effective = {
        "schema_version": cfg.schema_version,
        "scenario": cfg.scenario,
        "model": {"kind": cfg.model_kind, "a": cfg.a, "gamma": cfg.gamma,
                  "epsilon": cfg.epsilon, "r": cfg.r},
        "speed": cfg.speed,
        "numerics": cfg.numerics,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }
    canon = json.dumps(raw if raw is not None else effective, sort_keys=True)
    manifest = {
        "effective_config": effective,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "version": __version__,
        "wall_time_s": time.time() - started,
        "artifacts": artifacts,
    }
    _write_json(outdir / "manifest.json", manifest)
    return manifest


def compare_report(bloch_summary: dict | None = None,
                   dispersion_summary: dict | None = None,
                   dns_summary: dict | None = None,
                   tol_bloch_analytic: float = 0.10,
                   tol_dns_bloch: float = 0.25) -> dict:
    """Cross-validate diffusivity estimates from up to three pipelines.

    Requires at least two inputs with matching epsilon.  Reports pairwise
    relative discrepancies and pass/fail flags at the configured tolerances.
    """
    present = {name: s for name, s in [("bloch", bloch_summary),
                                       ("dispersion", dispersion_summary),
                                       ("dns", dns_summary)] if s is not None}
    if len(present) < 2:
        raise ConfigError("compare needs at least two summaries")
    eps_vals = {name: float(s["epsilon"]) for name, s in present.items()}
    if max(eps_vals.values()) - min(eps_vals.values()) > 1e-12 * max(eps_vals.values()):
        raise ConfigError(f"mismatched epsilon between inputs: {eps_vals}")
    report = {"epsilon": next(iter(eps_vals.values())), "pairs": {}}
    vals = {}
    if "bloch" in present:
        vals["bloch"] = -float(present["bloch"]["lam_pp0_adjoint"]
                               if "lam_pp0_adjoint" in present["bloch"]
                               else present["bloch"]["lam_pp0"])
    if "dispersion" in present:
        vals["analytic"] = float(present["dispersion"]["d_eff_leading"])
    if "dns" in present:
        vals["dns"] = float(present["dns"]["d_eff"])
    report["d_eff"] = vals
    if "bloch" in vals and "analytic" in vals:
        rel = abs(vals["bloch"] - vals["analytic"]) / abs(vals["analytic"])
        report["pairs"]["bloch_vs_analytic"] = {
            "rel_discrepancy": rel, "tolerance": tol_bloch_analytic,
            "pass": bool(rel <= tol_bloch_analytic),
        }
    if "dns" in vals and "bloch" in vals:
        rel = abs(vals["dns"] - vals["bloch"]) / abs(vals["bloch"])
        report["pairs"]["dns_vs_bloch"] = {
            "rel_discrepancy": rel, "tolerance": tol_dns_bloch,
            "pass": bool(rel <= tol_dns_bloch),
        }
    return report


def _cmd_run(args) -> int:
    cfg, raw = load_config(args.config)
    manifest = run(cfg, raw)
    print(json.dumps({"status": "ok", "output_dir": cfg.output_dir,
                      "wall_time_s": manifest["wall_time_s"]}))
    return 0


def _cmd_validate(args) -> int:
    cfg, _ = load_config(args.config)
    print(json.dumps({"status": "valid", "scenario": cfg.scenario,
                      "effective_numerics": cfg.numerics}, sort_keys=True))
    return 0


def _cmd_compare(args) -> int:
    loaded = {}
    for path in args.files:
        with open(path) as fh:
            data = json.load(fh)
        if "lam_pp0" in data or "lam_pp0_adjoint" in data:
            loaded["bloch"] = data
        elif "d_eff_leading" in data and "d_eff" in data:
            loaded["dispersion"] = data
        elif "slope" in data:
            loaded["dns"] = data
        else:
            raise ConfigError(f"unrecognized summary file {path}")
    report = compare_report(loaded.get("bloch"), loaded.get("dispersion"),
                            loaded.get("dns"),
                            tol_bloch_analytic=args.tol_bloch_analytic,
                            tol_dns_bloch=args.tol_dns_bloch)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fhnlab",
                                     description="wave-train stability laboratory")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.set_defaults(fn=_cmd_run)
    p_val = sub.add_parser("validate", help="schema-check a config")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)
    p_cmp = sub.add_parser("compare", help="cross-validate summaries")
    p_cmp.add_argument("files", nargs="+")
    p_cmp.add_argument("--tol-bloch-analytic", type=float, default=0.10)
    p_cmp.add_argument("--tol-dns-bloch", type=float, default=0.25)
    p_cmp.set_defaults(fn=_cmd_compare)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(json.dumps({"status": "config-error", "error": str(exc)}),
              file=sys.stderr)
        return 1
    except FHNLabError as exc:
        print(json.dumps({"status": "runtime-error",
                          "error_type": type(exc).__name__,
                          "error": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
