"""Canonical experiments: seeded replication fan-out, summary statistics,
and manifest/table artifacts that reproduce the qualitative results end to
end. Configs are flat JSON parameter maps; a manifest embeds its config so a
run can be reproduced from the manifest alone."""

from __future__ import annotations

import datetime
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from . import __version__
from .common import replicated_map, worker_count, write_csv
from .hawkes import (FlatProfile, price_path, rescale_price, simulate_hawkes,
                     soe_fit)
from .heston import roughness_estimate, simulate_hyper_rough, simulate_rough_heston
from .impact import analytic_mi, fit_power_law, macroscopic_mi
from .kernels import POWER_LAW, KernelSpec, mittag_rate, schedule
from .mittag import MittagLefflerParams, ml_cdf
from .riccati import char_functional_mc, h_linear, solve_volterra_riccati

EXPERIMENTS = {}

_REQUIRED = {
    "figure1_impact": {"alpha", "K", "gamma", "seed"},
    "impact_convergence": {"alpha", "K", "gamma", "T_list", "seed"},
    "char_function_bridge": {"alpha", "K", "delta", "u", "T", "paths", "reps", "seed"},
    "roughness_sweep": {"alpha_list", "paths", "steps", "seed"},
    "micro_macro_price": {"alpha", "K", "delta", "T", "reps", "steps", "seed"},
}


def mc_mean_ci(samples, level: float = 0.95):
    """Sample mean with a normal-approximation confidence half-width."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least two samples for a confidence interval")
    if not (0.0 < level < 1.0):
        raise ValueError("confidence level must lie in (0, 1)")
    z = stats.norm.ppf(0.5 * (1.0 + level))
    half = z * samples.std(ddof=1) / math.sqrt(samples.size)
    return float(samples.mean()), float(half)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    parameters: dict
    output_dir: str

    def __post_init__(self):
        if self.experiment not in _REQUIRED:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choose one of {sorted(_REQUIRED)}")
        missing = _REQUIRED[self.experiment] - set(self.parameters)
        if missing:
            raise ValueError(f"missing parameters for {self.experiment}: {sorted(missing)}")
        if "seed" not in self.parameters:
            raise ValueError("seed is mandatory; wall-clock defaults are not allowed")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            doc = json.load(fh)
        if "config" in doc:  # a manifest embeds its config
            doc = doc["config"]
        try:
            return cls(doc["experiment"], dict(doc["parameters"]),
                       doc.get("output_dir", "."))
        except KeyError as exc:
            raise ValueError(f"config is missing the {exc.args[0]!r} key") from None

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "parameters": dict(self.parameters),
                "output_dir": str(self.output_dir)}


@dataclass(frozen=True)
class RunArtifact:
    manifest: dict
    tables: dict
    summary: dict

    @property
    def passed(self) -> bool:
        return all(self.summary.get("flags", {}).values())


# ---------------------------------------------------------------------------
# experiment bodies


def _experiment(name):
    def register(fn):
        EXPERIMENTS[name] = fn
        return fn
    return register


@_experiment("figure1_impact")
def _figure1(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    alpha, K, gamma = p["alpha"], p["K"], p["gamma"]
    t_max = p.get("t_max", 5.0)
    grid = np.linspace(0.0, t_max, int(p.get("grid_points", 501)))
    curve = macroscopic_mi(alpha, K, gamma, FlatProfile(), grid)
    tables = {"impact_curve": out / "impact_curve.csv"}
    curve.to_csv(tables["impact_curve"])
    if alpha == 0.5:
        tables["figure1"] = out / "figure1.csv"
        curve.to_csv(tables["figure1"])
    rise = curve.mi[(grid > 0) & (grid <= 1.0)]
    concave = bool(np.all(np.diff(rise, 2) <= 1e-9)) and bool(np.all(np.diff(rise) > 0))
    after = curve.mi[grid >= 1.0]
    decaying = bool(np.all(np.diff(after) <= 1e-12))
    slope, _ = fit_power_law(curve, "execution")
    summary = {
        "execution_exponent": slope,
        "expected_exponent": 1.0 - alpha,
        "flags": {"concave_rise": concave, "monotone_decay": decaying,
                  "exponent_matches": bool(abs(slope - (1.0 - alpha)) < 0.02)},
    }
    return tables, summary


@_experiment("impact_convergence")
def _impact_convergence(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    alpha, K, gamma = p["alpha"], p["K"], p["gamma"]
    spec = KernelSpec(POWER_LAW, alpha=alpha)
    grid = np.linspace(0.0, p.get("t_max", 2.0), int(p.get("grid_points", 51)))
    limit = macroscopic_mi(alpha, K, gamma, FlatProfile(), grid)
    distances = []
    for T in p["T_list"]:
        params = schedule(T, spec, K, p.get("delta", 1.0), gamma)
        finite = analytic_mi(params, spec, FlatProfile(), grid)
        distances.append(float(np.max(np.abs(finite.mi - limit.mi))))
    tables = {"convergence": out / "convergence.csv"}
    write_csv(tables["convergence"], [np.array(p["T_list"], dtype=float),
                                      np.array(distances)],
              ["T", "sup_distance"], {"alpha": alpha, "K": K, "gamma": gamma})
    summary = {
        "T_list": list(p["T_list"]), "sup_distance": distances,
        "flags": {"monotone_in_T": bool(np.all(np.diff(distances) < 0))},
    }
    return tables, summary


def _hawkes_increments_rep(args):
    """Increments of the rescaled combined event count for one replication."""
    (spec, params, soe, T, seed, n_obs), rep = args
    st = simulate_hawkes(params, spec, T, (seed, rep), engine_name="soe", soe=soe)
    micro = T * np.linspace(0.0, 1.0, n_obs + 1)
    counts = (np.searchsorted(st.buys, micro, side="right")
              + np.searchsorted(st.sells, micro, side="right"))
    x = (1.0 - params.aT) ** 2 / params.delta * counts
    return np.diff(x)


@_experiment("char_function_bridge")
def _char_bridge(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    alpha, K, delta, u = p["alpha"], p["K"], p["delta"], p["u"]
    lam = mittag_rate(K, alpha)
    steps = int(p.get("steps", 2048))
    grid = np.linspace(0.0, 1.0, steps + 1)
    h = h_linear(u)
    sol = solve_volterra_riccati(h, alpha, lam, delta, grid)
    k_ric = complex(sol.K_of_t[-1])

    sim = simulate_rough_heston if alpha > 0.5 else simulate_hyper_rough
    vp, _ = sim(alpha, lam, delta, grid, p["seed"], n_paths=int(p["paths"]))
    k_heston, se_heston = char_functional_mc(np.diff(vp.X, axis=1), grid, h)

    n_obs = int(p.get("observation_points", 256))
    T = float(p["T"])
    spec = KernelSpec(POWER_LAW, alpha=alpha)
    params = schedule(T, spec, K, delta, 0.0)
    soe = soe_fit(spec, int(p.get("soe_terms", 20)), T)
    common = (spec, params, soe, T, p["seed"], n_obs)
    incs = np.array(replicated_map(_hawkes_increments_rep, common, int(p["reps"])))
    k_hawkes, se_hawkes = char_functional_mc(incs, np.linspace(0, 1, n_obs + 1), h)

    z_heston = abs(k_heston - k_ric) / se_heston
    z_hawkes = abs(k_hawkes - k_ric) / se_hawkes
    tables = {"bridge": out / "bridge.csv"}
    write_csv(tables["bridge"],
              [np.array([k_ric.real, k_heston.real, k_hawkes.real]),
               np.array([k_ric.imag, k_heston.imag, k_hawkes.imag]),
               np.array([0.0, se_heston, se_hawkes])],
              ["re_K", "im_K", "stderr"],
              {"alpha": alpha, "u": u, "order": "riccati;heston;hawkes"})
    summary = {
        "K_riccati": [k_ric.real, k_ric.imag],
        "K_heston": [k_heston.real, k_heston.imag], "se_heston": se_heston,
        "K_hawkes": [k_hawkes.real, k_hawkes.imag], "se_hawkes": se_hawkes,
        "z_heston": float(z_heston), "z_hawkes": float(z_hawkes),
        "flags": {"heston_within_3se": bool(z_heston <= 3.0),
                  "hawkes_within_3se": bool(z_hawkes <= 3.0)},
    }
    return tables, summary


@_experiment("roughness_sweep")
def _roughness(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    steps = int(p["steps"])
    grid = np.linspace(0.0, 1.0, steps + 1)
    q_probe = float(p.get("q_probe", 4.0))
    lags = p.get("lags", [2, 4, 8, 16, 32, 64])
    rows = []
    flags = {}
    for alpha in p["alpha_list"]:
        lam = mittag_rate(p.get("K", 1.0), alpha)
        sim = simulate_rough_heston if alpha > 0.5 else simulate_hyper_rough
        vp, _ = sim(alpha, lam, p.get("delta", 1.0), grid, p["seed"],
                    n_paths=int(p["paths"]))
        est = roughness_estimate(vp.X, grid, [1.0, 2.0, q_probe],
                                 [m / steps for m in lags])
        slope, se = est[q_probe]
        target = min(1.0, 2.0 * alpha)
        rows.append((alpha, slope, se, target))
        flags[f"alpha_{alpha}_regularity"] = bool(abs(slope - target) <= 0.1)
        if alpha <= 0.5:
            flags[f"alpha_{alpha}_nondifferentiable"] = bool(slope < 0.95)
        else:
            flags[f"alpha_{alpha}_smooth"] = bool(slope > 0.9)
    tables = {"roughness": out / "roughness.csv"}
    arr = np.array(rows)
    write_csv(tables["roughness"], [arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]],
              ["alpha", "slope_over_q", "stderr", "target"],
              {"q": q_probe, "paths": p["paths"], "steps": steps})
    summary = {"rows": [list(r) for r in rows], "q_probe": q_probe, "flags": flags}
    return tables, summary


def _price_sample_rep(args):
    """Rescaled price at t = 1 from one order-flow replication."""
    (spec, params, soe, T, seed), rep = args
    st = simulate_hawkes(params, spec, T, (seed, rep), engine_name="soe", soe=soe)
    path = price_path(st, spec, params, np.array([0.0, T]))
    return rescale_price(path, params).values[-1]


@_experiment("micro_macro_price")
def _micro_macro(cfg: ExperimentConfig, out: Path):
    p = cfg.parameters
    alpha, K, delta, T = p["alpha"], p["K"], p["delta"], float(p["T"])
    lam = mittag_rate(K, alpha)
    reps = int(p["reps"])
    spec = KernelSpec(POWER_LAW, alpha=alpha)
    params = schedule(T, spec, K, delta, 0.0)
    soe = soe_fit(spec, int(p.get("soe_terms", 20)), T)
    common = (spec, params, soe, T, p["seed"])
    micro = np.array(replicated_map(_price_sample_rep, common, reps))

    steps = int(p["steps"])
    grid = np.linspace(0.0, 1.0, steps + 1)
    sim = simulate_rough_heston if alpha > 0.5 else simulate_hyper_rough
    vp, pp = sim(alpha, lam, delta, grid, (p["seed"], 999_983), n_paths=reps)
    macro = pp.price[:, -1]

    params = MittagLefflerParams(alpha, lam)
    var_theory = 2.0 / delta * integrate.quad(lambda s: ml_cdf(params, s), 0, 1,
                                              limit=100)[0]
    ks = stats.ks_2samp(micro, macro)
    var_micro, var_macro = float(micro.var(ddof=1)), float(macro.var(ddof=1))
    tables = {"price_samples": out / "price_samples.csv"}
    write_csv(tables["price_samples"], [micro, macro],
              ["rescaled_hawkes", "macro_limit"],
              {"alpha": alpha, "T": T, "reps": reps})
    summary = {
        "var_micro": var_micro, "var_macro": var_macro, "var_theory": var_theory,
        "ks_distance": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
        "flags": {
            "variance_within_10pct": bool(abs(var_micro / var_macro - 1.0) <= 0.10),
            "ks_small": bool(ks.statistic <= p.get("ks_threshold", 0.08)),
        },
    }
    return tables, summary


def run_experiment(config: ExperimentConfig) -> RunArtifact:
    """Execute one experiment: tables + summary.json + manifest.json on disk."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables, summary = EXPERIMENTS[config.experiment](config, out)
    manifest = {
        "config": config.as_dict(),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tables": {k: str(v) for k, v in tables.items()},
    }
    summary["experiment"] = config.experiment
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    for name, path in tables.items():
        if not Path(path).exists():
            raise RuntimeError(f"summary references a missing table: {name} -> {path}")
    return RunArtifact(manifest, tables, summary)
