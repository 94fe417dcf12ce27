"""Command-line entry point.

Every command takes a validated :class:`ExperimentConfig`, writes a JSON
report (manifest, manifest hash, seeds, digests of every series), CSV series
and PNG figures into ``out``, prints one ``PASS``/``FAIL`` line per check and
exits nonzero iff a check failed.  ``replay REPORT`` re-executes the embedded
manifest and compares every series bit-exactly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import ergodicity as erg
from ..coefficients import verify_assumptions
from ..flow import cocycle_residual, coupled_ensemble, semiflow_residual
from ..galerkin import solve_galerkin
from ..noise import derive_seed, load_path, sample_path, save_path
from ..solver import NonFiniteError, CFLError, mass_balance_residual, solve_ensemble
from . import io, plots
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class Outcome:
    """What a command produced: named checks, raw series and free-form summary values."""

    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    series: dict[str, np.ndarray] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))


# ---------------------------------------------------------------------------
# seeds and workers


def member_seeds(cfg: ExperimentConfig) -> list[int]:
    """``seeds`` as given, or ``n_paths`` substreams of ``seeds[0]`` when ``params.n_paths`` is set."""
    n = cfg.params.get("n_paths")
    if n is None:
        return [int(s) for s in cfg.seeds]
    return [derive_seed(cfg.seeds[0], i) for i in range(int(n))]


def _split(seq, parts):
    k, r = divmod(len(seq), parts)
    out, i = [], 0
    for p in range(parts):
        j = i + k + (1 if p < r else 0)
        if j > i:
            out.append(seq[i:j])
        i = j
    return out


def _map_members(fn, cfg: ExperimentConfig, seeds: list[int]) -> dict[str, np.ndarray]:
    """Apply ``fn(cfg_dict, seeds)`` to contiguous seed chunks and concatenate along axis 0.

    Members are independent, so the result does not depend on ``workers``.
    """
    workers = min(cfg.workers, len(seeds))
    if workers <= 1:
        return fn(cfg.to_dict(), seeds)
    chunks = _split(seeds, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [cfg.to_dict()] * len(chunks), chunks))
    return {k: np.concatenate([p[k] for p in parts], axis=0) for k in parts[0]}


def _paths_for(cfg: ExperimentConfig, seeds, T: float, path_dir: Path | None = None):
    cs = cfg.coefficient_set()
    if cs.noiseless:
        return None
    basis = cfg.basis()
    if path_dir is not None:
        paths = []
        for s in seeds:
            f = path_dir / f"path_{s}.bin"
            if not f.exists():
                raise FileNotFoundError(
                    f"noise-path file {f} is missing; regenerate it from seed {s} with "
                    f"`conspde simulate --config <manifest.json>` and params.save_paths = true, "
                    f"or remove params.path_dir to regenerate increments from the seed in memory")
            paths.append(load_path(f))
        return paths
    return [sample_path(basis, cfg.step, T, s) for s in seeds]


# ---------------------------------------------------------------------------
# simulate


def _simulate_members(cfg_dict: dict, seeds: list[int]) -> dict[str, np.ndarray]:
    cfg = ExperimentConfig(**cfg_dict)
    cs = cfg.coefficient_set()
    rho0 = cfg.initial_data()
    path_dir = cfg.params.get("path_dir")
    paths = _paths_for(cfg, seeds, cfg.T, None if path_dir is None else Path(path_dir))
    every = cfg.save_every or cfg.T
    if cfg.params.get("solver", "fv") == "galerkin":
        n_modes = int(cfg.params.get("n_modes", cfg.n // 2 - 1))
        trajs = [solve_galerkin(rho0, cfg.T, cs, None if paths is None else p, n_modes, dt=cfg.step,
                                save_every=every) for p in (paths or [None] * len(seeds))]
        out = {k: np.stack([t.series[k] for t in trajs]) for k in trajs[0].series}
        out["times"] = np.stack([trajs[0].times] * len(seeds))
        out["final"] = np.stack([t.final for t in trajs])
        out["residual"] = np.stack([mass_balance_residual(t) for t in trajs])
        return out
    init = np.stack([rho0] * (len(seeds) if paths is not None else 1))
    ens = solve_ensemble(init, 0.0, cfg.T, cs, paths, every, dt=cfg.step, keep_states=False)
    if paths is None and len(seeds) > 1:
        ens = _repeat(ens, len(seeds))
    out = dict(ens.series)
    out["times"] = np.stack([ens.times] * len(ens))
    out["final"] = ens.final
    out["residual"] = np.stack([mass_balance_residual(ens.member(b)) for b in range(len(ens))])
    return out


def _repeat(ens, n):
    from ..solver import EnsembleTrajectory

    return EnsembleTrajectory(ens.grid, ens.times, {k: np.repeat(v, n, axis=0) for k, v in ens.series.items()},
                              np.repeat(ens.final, n, axis=0))


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> Outcome:
    seeds = member_seeds(cfg)
    cs = cfg.coefficient_set()
    if cfg.params.get("save_paths") and not cs.noiseless:
        pdir = out / "paths"
        pdir.mkdir(parents=True, exist_ok=True)
        for s in seeds:
            save_path(sample_path(cfg.basis(), cfg.step, cfg.T, s).materialize(), pdir / f"path_{s}.bin")
    res = _map_members(_simulate_members, cfg, seeds)
    times = res.pop("times")[0]
    final = res.pop("final")
    residual = res.pop("residual")
    o = Outcome()
    o.series = {**{k: v for k, v in res.items()}, "mass_residual": residual, "final": final, "times": times}
    mass0 = res["mass"][:, :1]
    tol = float(cfg.tolerances.get("mass", 1e-12))
    if cs.f.is_zero:
        rel = np.abs(res["mass"] - mass0) / mass0
        o.check("mass_conservation", rel.max() < tol, f"max relative drift {rel.max():.3e} (tol {tol:g})")
    else:
        rel = np.abs(residual) / mass0
        o.check("mass_balance", rel.max() < float(cfg.tolerances.get("mass_balance", 1e-6)),
                f"max relative balance residual {rel.max():.3e}")
    o.check("positivity", bool(np.all(final >= 0)), f"min final value {final.min():.3e}")
    o.check("finite", bool(np.all(np.isfinite(final))), "")
    o.summary = {"seeds": seeds, "final_mass": res["mass"][:, -1].tolist(),
                 "max_mass_drift": float(np.max(np.abs(res["mass"] - mass0)))}
    long = {"member": np.repeat(np.arange(len(seeds)), len(times)), "time": np.tile(times, len(seeds))}
    for k, v in res.items():
        long[k] = v.reshape(-1)
    long["mass_residual"] = residual.reshape(-1)
    io.write_csv(out / "series.csv", long)
    io.write_csv(out / "mass_residual.csv", {"member": long["member"], "time": long["time"],
                                              "mass_minus_initial": (res["mass"] - mass0).reshape(-1)})
    grid = cfg.grid
    if cfg.dim == 1:
        plots.plot_profiles(out / "final_profiles.png", grid.centers_1d, final[: min(8, len(final))],
                            [cfg.T] * min(8, len(final)))
    plots.plot_series(out / "series.png", times, {k: res[k] for k in ("mass", "entropy", "grad_phi")},
                      f"{cfg.preset}, eps={cfg.epsilon}")
    o.files += ["series.csv", "mass_residual.csv", "series.png"] + (["final_profiles.png"] if cfg.dim == 1 else [])
    return o


# ---------------------------------------------------------------------------
# couple


def _couple_members(cfg_dict: dict, seeds: list[int]) -> dict[str, np.ndarray]:
    cfg = ExperimentConfig(**cfg_dict)
    cs = cfg.coefficient_set()
    a = cfg.initial_data()
    b = cfg.initial_data(cfg.params.get("initial2", {"kind": "antiphase", "amplitude": 0.5}))
    paths = _paths_for(cfg, seeds, cfg.T)
    every = cfg.save_every or cfg.step
    tol = float(cfg.tolerances.get("contraction", 5e-3))
    if paths is None:
        reps = coupled_ensemble(a, b, cs, None, cfg.T, tol, every, dt=cfg.step) * len(seeds)
    else:
        reps = coupled_ensemble(a, b, cs, paths, cfg.T, tol, every)
    # the two members, solved separately so replay can compare them one by one
    members = []
    for x in (a, b):
        init = np.stack([x] * (len(seeds) if paths is not None else 1))
        ens = solve_ensemble(init, 0.0, cfg.T, cs, paths, every, dt=cfg.step, keep_states=False)
        members.append(ens if paths is not None else _repeat(ens, len(seeds)))
    return {"times": np.stack([r.times for r in reps]), "distance": np.stack([r.distance for r in reps]),
            "bound": np.stack([r.bound for r in reps]), "max_ratio": np.array([r.max_ratio for r in reps]),
            "violations": np.array([r.violations for r in reps]),
            "member_a_mass": members[0].series["mass"], "member_b_mass": members[1].series["mass"],
            "member_a_final": members[0].final, "member_b_final": members[1].final}


def cmd_couple(cfg: ExperimentConfig, out: Path) -> Outcome:
    seeds = member_seeds(cfg)
    res = _map_members(_couple_members, cfg, seeds)
    times = res.pop("times")[0]
    o = Outcome(series={**res, "times": times})
    worst = float(res["max_ratio"].max())
    nviol = int(res["violations"].sum())
    tol = float(cfg.tolerances.get("contraction", 5e-3))
    o.check("contraction", nviol == 0, f"max d(t)/(C(t) d(0)) = {worst:.6f}, violations {nviol} (tol {tol:g})")
    o.summary = {"seeds": seeds, "max_ratio": worst, "violations": nviol}
    cols = {"pair": np.repeat(np.arange(len(seeds)), len(times)), "time": np.tile(times, len(seeds)),
            "distance": res["distance"].reshape(-1), "bound": res["bound"].reshape(-1)}
    io.write_csv(out / "coupling.csv", cols)
    plots.plot_coupling(out / "coupling.png", times, res["distance"], res["bound"])
    o.files += ["coupling.csv", "coupling.png"]
    return o


# ---------------------------------------------------------------------------
# flowcheck


def _flow_configs(cfg: ExperimentConfig) -> list[tuple[float, float, float, float, int]]:
    """Explicit ``(s, s1, t, shift)`` from params, or ``n_configs`` random aligned draws."""
    dt = cfg.step
    p = cfg.params
    if "s" in p or "shift" in p:
        s = float(p.get("s", 0.0))
        t = float(p.get("t", cfg.T))
        return [(s, float(p.get("s1", 0.5 * (s + t))), t, float(p.get("shift", s)), seed) for seed in cfg.seeds]
    rng = np.random.default_rng(cfg.seeds[0])
    n_steps = int(round(cfg.T / dt))
    out = []
    for i in range(int(p.get("n_configs", 20))):
        a, b, c = sorted(int(v) for v in rng.integers(0, n_steps + 1, 3))
        shift = int(rng.integers(0, n_steps // 2 + 1))
        out.append((a * dt, b * dt, c * dt, shift * dt, derive_seed(cfg.seeds[0], i)))
    return out


def cmd_flowcheck(cfg: ExperimentConfig, out: Path) -> Outcome:
    cs = cfg.coefficient_set()
    rho0 = cfg.initial_data()
    dt = cfg.step
    tol = float(cfg.tolerances.get("flow", 1e-12))
    rows = []
    for s, s1, t, shift, seed in _flow_configs(cfg):
        horizon = max(t, shift + (t - s)) + dt
        path = None if cs.noiseless else sample_path(cfg.basis(), dt, horizon, seed)
        semi = semiflow_residual(rho0, s, s1, t, cs, path, dt=dt)
        if path is None:
            coc = semiflow_residual(rho0, 0.0, 0.0, t - s, cs, None, dt=dt)
        else:
            coc = cocycle_residual(rho0, shift, t - s, cs, path)
        rows.append((s, s1, t, shift, seed, semi, coc))
    arr = np.array([r[:4] + r[5:] for r in rows], dtype=float)
    o = Outcome(series={"configs": arr[:, :4], "semiflow": arr[:, 4], "cocycle": arr[:, 5]})
    o.check("semiflow", arr[:, 4].max() < tol, f"max residual {arr[:, 4].max():.3e} (tol {tol:g})")
    o.check("cocycle", arr[:, 5].max() < tol, f"max residual {arr[:, 5].max():.3e} (tol {tol:g})")
    o.summary = {"seeds": [r[4] for r in rows], "n_configs": len(rows)}
    io.write_csv(out / "flowcheck.csv", {"s": arr[:, 0], "s1": arr[:, 1], "t": arr[:, 2], "shift": arr[:, 3],
                                         "semiflow": arr[:, 4], "cocycle": arr[:, 5]})
    o.files.append("flowcheck.csv")
    return o


# ---------------------------------------------------------------------------
# ergodicity

ERGODICITY_EXPERIMENTS = ("dissipation", "two_point", "occupation", "chapman_kolmogorov", "contractivity",
                          "support", "mixing_selftest")


def cmd_ergodicity(cfg: ExperimentConfig, out: Path) -> Outcome:
    p = cfg.params
    wanted = p.get("experiments", ["dissipation", "chapman_kolmogorov"])
    bad = [e for e in wanted if e not in ERGODICITY_EXPERIMENTS]
    if bad:
        raise ConfigError([f"params.experiments: unknown {bad}; choose from {ERGODICITY_EXPERIMENTS}"])
    cs = cfg.coefficient_set()
    rho0 = cfg.initial_data()
    basis = cfg.basis()
    dt = cfg.step
    n_paths = int(p.get("n_paths", 16))
    seed0 = int(cfg.seeds[0])
    o = Outcome()
    if "dissipation" in wanted:
        Ts = p.get("horizons_T", [0.5, 1.0, 2.0])
        sw = erg.dissipation_sweep(cs, rho0, Ts, n_paths, [derive_seed(seed0, i) for i in range(n_paths)],
                                   noise=basis, dt=dt, save_every=p.get("stride", 10 * dt))
        ratio = sw["stability_ratio"]
        o.check("dissipation_C_stable", ratio <= 2.0, f"C_fit {np.round(sw['C_fit'], 4).tolist()}, ratio {ratio:.3f}")
        o.series["dissipation_C"] = np.array(sw["C_fit"])
        o.summary["dissipation"] = {k: v for k, v in sw.items() if k != "reports"}
        last = sw["reports"][-1]
        plots.plot_series(out / "dissipation.png", last.times, {"psi1": last.psi1_mean,
                                                                  "int psi2": last.psi2_integral_mean})
        o.files.append("dissipation.png")
    if "two_point" in wanted:
        hz = p.get("horizons", [0.5, 1.0, 2.0, 4.0])
        other = cfg.initial_data(p.get("initial2", {"kind": "antiphase", "amplitude": 0.5}))
        st = erg.two_point_run(rho0, other, cs, hz, float(p.get("delta", erg.DEFAULT_DELTA)), n_paths, seed0,
                               basis, dt)
        o.check("two_point_decreasing", st.decreasing,
                f"P(d>delta) {st.estimates.tolist()}, Wilson {np.round(st.ci_low, 3).tolist()}"
                f"-{np.round(st.ci_high, 3).tolist()}")
        o.series["two_point_counts"] = st.counts
        o.summary["two_point"] = st.to_dict()
        plots.plot_two_point(out / "two_point.png", st.horizons, st.estimates, st.ci_low, st.ci_high)
        o.files.append("two_point.png")
    if "mixing_selftest" in wanted:
        fit = erg.mixing_fit(erg.synthetic_two_point(0.3, [2, 4, 8, 16, 32, 64]), n_boot=0)
        o.check("mixing_fit_selftest", abs(fit["alpha_hat"] - 0.3) <= 0.02, f"alpha_hat {fit['alpha_hat']:.6f}")
        o.summary["mixing_selftest"] = fit
    if "occupation" in wanted:
        others = [cfg.initial_data(p.get("initial2", {"kind": "antiphase", "amplitude": 0.5}))]
        T_occ = float(p.get("T_occ", cfg.T))
        occ = erg.occupation_stability([rho0] + others, cs, T_occ, float(p.get("burn_in", 0.2 * T_occ)),
                                       float(p.get("stride", 0.05)),
                                       p.get("feature", "var"), [seed0, derive_seed(seed0, 1)], basis, dt,
                                       int(p.get("n_boot", erg.N_BOOT)))
        o.check("occupation_stability", occ["passed"],
                f"max KR {occ['max_kr']:.4g} vs 2 x floor {2 * occ['noise_floor']:.4g}")
        o.series["occupation_kr"] = np.array([q["kr"] for q in occ["pairs"]])
        o.summary["occupation"] = occ
    if "chapman_kolmogorov" in wanted:
        ck = erg.chapman_kolmogorov_check(rho0, cs, float(p.get("s", 0.5)), float(p.get("t", 1.0)), n_paths,
                                          p.get("feature", "moments"), seed0, basis, dt,
                                          int(p.get("n_boot", erg.N_BOOT)))
        o.check("chapman_kolmogorov", ck["within"], f"distance {ck['distance']:.4g}, band {ck['band']:.4g}")
        o.series["ck"] = np.array([ck["distance"], ck["band"]])
        o.summary["chapman_kolmogorov"] = ck
    if "contractivity" in wanted:
        prof = erg.contractivity_profile(cs, erg.default_family(cfg.grid), cfg.T, dt, p.get("stride", 10 * dt))
        o.check("deterministic_contractivity", prof["contractive"], f"decay rate {prof['decay_rate']:.4g}")
        o.series["C_R"] = np.array(prof["C_R"])
        o.summary["contractivity"] = prof
    if "support" in wanted:
        sp = erg.support_proximity(rho0, cs, cfg.T, float(p.get("support_delta", 1.0)), n_paths, seed0,
                                   basis, dt)
        o.check("support_proximity", sp["probability"] > 0, f"probability {sp['probability']:.3f}")
        o.series["support_integrals"] = np.array(sp["integrals"])
        o.summary["support"] = sp
    o.summary["seeds"] = [seed0]
    return o


# ---------------------------------------------------------------------------
# assumptions and selftest


def cmd_check_assumptions(cfg: ExperimentConfig, out: Path) -> Outcome:
    cs = cfg.coefficient_set()
    p = cfg.params
    rep = verify_assumptions(cs, cfg.F1(), tuple(p.get("xi_range", (1e-6, 1e2))), int(p.get("n_samples", 100)),
                             float(p.get("p", 2.0)))
    o = Outcome()
    for e in rep.entries:
        o.check(e.name, e.status != "violated", f"{e.status}: margin {e.margin:.4g} at {e.worst_point}")
    o.series["margins"] = np.array([e.margin for e in rep.entries], dtype=float)
    o.summary = rep.to_dict()
    return o


def cmd_selftest(cfg: ExperimentConfig, out: Path) -> Outcome:
    """Fast internal consistency checks that need no configuration beyond defaults."""
    from scipy.optimize import linprog

    from ..coefficients import preset
    from ..grid import Grid

    o = Outcome()
    grid = Grid(1, 64)
    x = grid.centers_1d
    rho0 = 1 + 0.5 * np.cos(2 * np.pi * x)
    t, dt = 0.01, 1e-5
    ens = solve_ensemble(rho0[None], 0.0, t, preset("heat"), None, dt=dt)
    exact = 1 + 0.5 * np.exp(-4 * np.pi**2 * t) * np.cos(2 * np.pi * x)
    err = float(np.max(np.abs(ens.final[0] - exact)))
    o.check("heat_accuracy", err < 1e-3, f"L-inf error {err:.3e} on n=64")

    fit = erg.mixing_fit(erg.synthetic_two_point(0.3, [2, 4, 8, 16, 32, 64]), n_boot=0)
    o.check("mixing_fit", abs(fit["alpha_hat"] - 0.3) <= 0.02, f"alpha_hat {fit['alpha_hat']:.6f}")

    rng = np.random.default_rng(cfg.seeds[0])
    worst = 0.0
    for _ in range(10):
        a, b = rng.normal(size=8), rng.normal(size=8)
        kr = erg.kr_distance(erg.EmpiricalMeasure("x", a[:, None]), erg.EmpiricalMeasure("x", b[:, None]))
        cost = np.abs(a[:, None] - b[None, :]).ravel()
        eq = np.vstack([np.kron(np.eye(8), np.ones(8)), np.kron(np.ones(8), np.eye(8))])
        lp = linprog(cost, A_eq=eq, b_eq=np.full(16, 1 / 8), bounds=(0, None), method="highs").fun
        worst = max(worst, abs(kr - lp))
    o.check("kr_vs_lp", worst < 1e-9, f"max |KR - LP| {worst:.2e}")

    basis = cfg.basis()
    path = sample_path(basis, 1e-3, 0.05, cfg.seeds[0])
    cs = preset("sine_gordon", epsilon=0.01)
    g = Grid(1, 32)
    r0 = 1 + 0.3 * np.cos(2 * np.pi * g.centers_1d)
    a1 = solve_ensemble(np.stack([r0, r0]), 0.0, 0.05, cs, [path, path], keep_states=False).final
    a2 = solve_ensemble(r0[None], 0.0, 0.05, cs, [path], keep_states=False).final
    o.check("batch_independence", np.array_equal(a1[0], a2[0]) and np.array_equal(a1[1], a2[0]), "")
    o.series["selftest"] = np.array([err, fit["alpha_hat"], worst])
    o.summary["seeds"] = list(cfg.seeds)
    return o


HANDLERS = {"simulate": cmd_simulate, "couple": cmd_couple, "flowcheck": cmd_flowcheck,
            "ergodicity": cmd_ergodicity, "check-assumptions": cmd_check_assumptions, "selftest": cmd_selftest}


# ---------------------------------------------------------------------------
# run / replay


def _digests(series: dict) -> dict[str, str]:
    return {k: io.digest(v) for k, v in sorted(series.items())}


def report_hash(report: dict) -> str:
    keys = ("manifest_hash", "digests", "checks")
    canon = json.dumps({k: report[k] for k in keys}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def execute(cfg: ExperimentConfig) -> tuple[dict, Outcome]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    outcome = HANDLERS[cfg.command](cfg, out)
    report = {
        "command": cfg.command,
        "manifest": cfg.to_dict(),
        "manifest_hash": cfg.manifest_hash(),
        "seeds": outcome.summary.get("seeds", list(cfg.seeds)),
        "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in outcome.checks],
        "digests": _digests(outcome.series),
        "summary": outcome.summary,
        "files": outcome.files,
    }
    report["report_hash"] = report_hash(report)
    io.write_report(out / "report.json", report)
    (out / "manifest.json").write_text(cfg.to_json())
    return report, outcome


def run(cfg: ExperimentConfig) -> int:
    """Execute ``cfg``, print one line per check and return the exit status."""
    try:
        report, outcome = execute(cfg)
    except (CFLError, ValueError, FileNotFoundError, NonFiniteError) as exc:
        print(f"FAIL {cfg.command}: {exc}")
        return EXIT_USAGE if isinstance(exc, (ConfigError, FileNotFoundError)) else EXIT_FAIL
    for n, ok, d in outcome.checks:
        print(f"{'PASS' if ok else 'FAIL'} {n}: {d}")
    print(f"report {Path(cfg.out) / 'report.json'} hash {report['report_hash']}")
    return EXIT_OK if all(ok for _, ok, _ in outcome.checks) else EXIT_FAIL


def replay(report_path: str | Path, out: str | Path | None = None) -> int:
    """Re-execute a report's manifest and compare every series digest; 0 iff identical."""
    try:
        report = io.read_report(report_path)
    except (OSError, ValueError) as exc:
        print(f"FAIL replay: cannot read report: {exc}")
        return EXIT_USAGE
    try:
        cfg = ExperimentConfig.from_dict(report["manifest"])
    except ConfigError as exc:
        print(f"FAIL replay: {exc}")
        return EXIT_FAIL
    if cfg.manifest_hash() != report["manifest_hash"]:
        print("FAIL replay: manifest does not match its embedded hash (edited manifest or seeds)")
        return EXIT_FAIL
    cfg.out = str(out) if out is not None else str(Path(report_path).parent / "replay")
    try:
        _, outcome = execute(cfg)
    except FileNotFoundError as exc:
        print(f"FAIL replay: {exc}")
        return EXIT_USAGE
    fresh = _digests(outcome.series)
    old = report["digests"]
    bad = sorted(k for k in set(fresh) | set(old) if fresh.get(k) != old.get(k))
    for k in sorted(set(fresh) | set(old)):
        print(f"{'PASS' if k not in bad else 'FAIL'} replay {k}")
    return EXIT_OK if not bad else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conspde", description="Conservative SPDE simulator and verification harness")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON or TOML experiment file")
        sp.add_argument("--seed", type=int, help="replace the seed list by this single seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", type=int, help="worker processes for ensembles")
    rp = sub.add_parser("replay")
    rp.add_argument("report")
    rp.add_argument("--out")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        return replay(args.report, args.out)
    overrides = {"command": args.command}
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    if args.out is not None:
        overrides["out"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = ExperimentConfig.from_dict(overrides)
    except ConfigError as exc:
        for prob in exc.problems:
            print(f"FAIL config: {prob}")
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"FAIL config: {exc}")
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
