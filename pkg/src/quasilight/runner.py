"""Scenario execution: one function per kind, all writing into one output directory."""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .free import centroid, evolve_free, gaussian_packet
from .grid import CollectiveField, ModeGrid, gram_matrix, scaled_delta, to_collective, to_local
from .langevin import MediumParams, drift_diffusion, drift_diffusion_at, moment_oracle, propagate_1d, trajectory_rng
from .output import write_csv, write_field_csv, write_qlf
from .parametric import ConjugatePair, ParametricCoupling, closed_form, conservation_check, integrate_pair
from .paraxial import TransverseGrid, beam_width, check_resolution, gaussian_beam, gaussian_width, paraxial_step
from .scenario import Scenario, ScenarioError
from .spectra import DetectionConfig, pair_spectrum, ou_series

ROUNDTRIP_TOL = 1e-12
GRAM_TOL = 1e-10
DRIFT_TOL = 1e-9


class PhysicsError(RuntimeError):
    """A run-time physics precondition or check failed."""


@dataclass
class RunResult:
    outputs: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _medium(block) -> MediumParams:
    return MediumParams(**block)


def _grid1d(sc: Scenario) -> ModeGrid:
    return ModeGrid(**sc.blocks["grid"])


def build(sc: Scenario) -> dict:
    """Domain objects for a scenario; raises on anything a run would reject up front."""
    b = sc.blocks
    objs = {}
    if sc.kind in ("basis", "free", "linear1d", "spectrum"):
        objs["grid"] = _grid1d(sc)
    if sc.kind == "linear1d":
        objs["medium"] = _medium(b["medium"])
        if b["propagation"]["cell"] >= objs["grid"].N:
            raise ScenarioError([f"propagation.cell = {b['propagation']['cell']} must be < N = {objs['grid'].N}"])
    elif sc.kind == "paraxial":
        g = dict(b["grid"])
        objs["tgrid"] = TransverseGrid(g["Nx"], g["Ny"], g["dx"], g["dy"], g["R"])
        if "medium" in b:
            objs["medium"] = _medium(b["medium"])
    elif sc.kind == "parametric":
        c = b["coupling"]
        objs["coupling"] = ParametricCoupling(c["g"], c["phi"], c["Delta"], c["pump"])
    elif sc.kind == "spectrum":
        objs["medium"] = _medium(b["medium"])
        d = b["detection"]
        if (d["Omega_max"] is None) != (d["Omega_points"] is None):
            raise ScenarioError(["detection.Omega_max and detection.Omega_points must be given together"])
        objs["detection"] = DetectionConfig.from_grid(d["q"], objs["grid"], d["Omega_max"], d["Omega_points"] or 0)
        s = b["series"]
        if s["nperseg"] is not None and s["nperseg"] > s["T"]:
            raise ScenarioError([f"series.nperseg = {s['nperseg']} exceeds series.T = {s['T']}"])
        if "coupling" in b:
            objs["coupling"] = ParametricCoupling(b["coupling"]["g"], b["coupling"]["phi"])
    return objs


def _check_finite(name, rows):
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise PhysicsError(f"non-finite values in {name}")


def _csv(out: Path, name: str, header, rows, result: RunResult):
    _check_finite(name, rows)
    result.outputs.append(write_csv(out / name, header, rows))


def run_basis(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    g = objs["grid"]
    rng = np.random.default_rng(0)
    coll = CollectiveField(g, rng.normal(size=g.N) + 1j * rng.normal(size=g.N))
    back = to_collective(to_local(coll))
    roundtrip = float(np.max(np.abs(back.amps - coll.amps)))
    G = gram_matrix(g, sc.blocks.get("basis", {}).get("oversample", 4))
    off = float(np.max(np.abs(G - np.diag(np.diag(G)))))
    diag = float(np.max(np.abs(np.diag(G) - 1)))
    delta0 = float(scaled_delta(g, 0.0))
    rows = [(g.N, roundtrip, off, diag, delta0 - g.bandwidth)]
    _csv(out, "basis.csv", ["N", "roundtrip_error", "gram_offdiag_max", "gram_diag_error", "delta0_minus_dnu"], rows, res)
    res.summary = {"N": g.N, "roundtrip_error": roundtrip, "gram_offdiag_max": off, "delta0": delta0, "dnu": g.bandwidth}
    if roundtrip >= ROUNDTRIP_TOL or off >= GRAM_TOL:
        raise PhysicsError(f"basis check failed: round trip {roundtrip:.3e}, Gram off-diagonal {off:.3e}")
    return res


def run_free(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    g = objs["grid"]
    p = sc.blocks["packet"]
    f = gaussian_packet(g, p["centre"], p["width"], p["k0"])
    dt = p["t"] / p["steps"]
    rows, prev = [], centroid(f)
    unwrapped = prev
    norm0 = f.power
    for i in range(p["steps"] + 1):
        if i:
            f = evolve_free(f, dt)
            cur = centroid(f)
            unwrapped += (cur - prev + g.L / 2) % g.L - g.L / 2
            prev = cur
        rows.append((i * dt, unwrapped, f.power))
    _csv(out, "packet.csv", ["t", "centroid", "norm"], rows, res)
    t = np.array([r[0] for r in rows])
    x = np.array([r[1] for r in rows])
    velocity = float(np.polyfit(t, x, 1)[0]) if p["t"] > 0 else float("nan")
    drift = float(np.max(np.abs(np.array([r[2] for r in rows]) - norm0)))
    res.summary = {"velocity": velocity, "c": g.c, "norm_drift": drift}
    return res


def run_linear1d(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    g, med = objs["grid"], objs["medium"]
    p = sc.blocks["propagation"]
    ens_cfg = {**{"M": 1000, "seed": 0, "checkpoints": 10}, **sc.blocks.get("ensemble", {})}
    dd = drift_diffusion(med, g)
    boundary = np.full(g.N, p["alpha"])
    ens = propagate_1d(boundary, dd, p["z"], g, M=ens_cfg["M"], seed=ens_cfg["seed"],
                       checkpoints=ens_cfg["checkpoints"], dz=p["dz"], threads=threads)
    _csv(out, "moments.csv", ["z", "re_mean", "im_mean", "power", "sigma"], ens.rows(p["cell"]), res)
    mean, power = moment_oracle(dd, ens.z / g.c, p["alpha"], abs(p["alpha"]) ** 2)
    _csv(out, "oracle.csv", ["z", "re_mean", "im_mean", "power"],
         [(z, m.real, m.imag, q) for z, m, q in zip(ens.z, mean, power)], res)
    res.summary = {"A": [dd.A.real, dd.A.imag], "Q": dd.Q, "M": ens.M}
    return res


def run_paraxial(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    g = sc.blocks["grid"]
    tg = objs["tgrid"]
    p = sc.blocks["propagation"]
    m = g["m"]
    f = gaussian_beam(tg, p["w0"], p["amplitude"])
    try:
        margin = check_resolution(f)
    except ValueError as err:
        raise PhysicsError(str(err)) from err
    dd, rng = None, None
    if "medium" in objs:
        dd = drift_diffusion_at(objs["medium"], g["c"] * m)
        rng = trajectory_rng(sc.blocks.get("ensemble", {}).get("seed", 0), 0)
    every = max(1, p["steps"] // p["snapshots"])
    rows = []

    def record(f):
        rows.append((f.z, beam_width(f, 0), beam_width(f, 1), f.power, float(gaussian_width(m, p["w0"], f.z))))

    record(f)
    for i in range(1, p["steps"] + 1):
        f = paraxial_step(f, p["dz"], m, dd, rng, c=g["c"], a=g["a"])
        if i % every == 0 or i == p["steps"]:
            record(f)
    _csv(out, "widths.csv", ["z", "width_x", "width_y", "power", "width_law"], rows, res)
    _check_finite("field", f.amps.view(float))
    res.outputs.append(write_field_csv(out / "field.csv", f))
    res.outputs.append(write_qlf(out / "field.qlf", f))
    res.summary = {"nyquist_margin": margin, "z": f.z, "final_power": f.power}
    return res


def run_parametric(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    c = objs["coupling"]
    cfg = sc.blocks["coupling"]
    pair = {**{"a1": 1 + 0j, "a2": 0j, "spread": 0.0}, **sc.blocks.get("pair", {})}
    ens = {**{"M": 1, "seed": 0}, **sc.blocks.get("ensemble", {})}
    M = ens["M"]
    a1 = np.full(M, pair["a1"])
    a2 = np.full(M, pair["a2"])
    if pair["spread"] > 0:
        for i in range(M):
            z = trajectory_rng(ens["seed"], i).standard_normal(4)
            a1[i] += pair["spread"] * complex(z[0], z[1])
            a2[i] += pair["spread"] * complex(z[2], z[3])
    traj = integrate_pair(ConjugatePair(a1, a2), c, cfg["z"], cfg["steps"])
    I = traj.I
    drift = np.max(np.abs(I - I[0]), axis=1)
    rows = [r + (d,) for r, d in zip(traj.rows((0,)), drift)]
    _csv(out, "pair.csv", ["z", "n1", "n2", "I", "I_drift"], rows, res)
    rep = conservation_check(np.broadcast_to(I[0], I.shape), I, tol=DRIFT_TOL)
    (out / "conservation.txt").write_text(str(rep) + "\n")
    res.outputs.append(out / "conservation.txt")
    res.summary = {"max_I_drift": rep.max_drift, "M": M}
    if not rep.ok:
        raise PhysicsError(str(rep))
    return res


def run_spectrum(sc: Scenario, objs, out: Path, threads: int) -> RunResult:
    res = RunResult()
    g, cfg = objs["grid"], objs["detection"]
    s = sc.blocks["series"]
    ens = {**{"M": 64, "seed": 0}, **sc.blocks.get("ensemble", {})}
    dd = drift_diffusion(objs["medium"], g)
    if not dd.A.real > 0:
        raise PhysicsError(f"stationary series need an absorbing medium, got Re A = {dd.A.real:.6g}")
    M, T = ens["M"], s["T"]
    a1 = ou_series(dd, s["dt"], T, M, ens["seed"])
    a2 = s["idler_scale"] * ou_series(dd, s["dt"], T, M, ens["seed"], start=M)
    kw = dict(nperseg=s["nperseg"], ordering=s["ordering"])
    header = ["Omega", "K", "K_N", "i2"]
    try:
        s0 = pair_spectrum(a1, a2, s["dt"], cfg, **kw)
        _csv(out, "spectrum.csv", header, s0.rows(), res)
        res.summary = {"n1": s0.n1, "n2": s0.n2, "stationary": s0.stationary}
        if "coupling" in objs:
            pz = closed_form(ConjugatePair(a1, a2), objs["coupling"], sc.blocks["coupling"]["z"])
            sz = pair_spectrum(pz.a1, pz.a2, s["dt"], cfg, **kw)
            _csv(out, "spectrum_out.csv", header, sz.rows(), res)
            lhs = sz.K_N + (sz.n1 + sz.n2) / cfg.dnu
            rhs = s0.K_N + (s0.n1 + s0.n2) / cfg.dnu
            res.summary.update({"n1_out": sz.n1, "n2_out": sz.n2, "conservation_residual": float(np.max(np.abs(lhs - rhs)))})
    except ValueError as err:
        raise PhysicsError(str(err)) from err
    return res


RUNNERS = {
    "basis": run_basis,
    "free": run_free,
    "linear1d": run_linear1d,
    "paraxial": run_paraxial,
    "parametric": run_parametric,
    "spectrum": run_spectrum,
}


def versions() -> dict:
    return {"quasilight": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(sc: Scenario, out, threads: int = 1) -> RunResult:
    """Execute ``sc`` into directory ``out`` and write ``manifest.json`` beside the data."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    objs = build(sc)
    start = time.perf_counter()
    result = RUNNERS[sc.kind](sc, objs, out, threads)
    wall = time.perf_counter() - start
    manifest = {
        "scenario": sc.echo(),
        "source": sc.source,
        "seed": sc.seed,
        "threads": threads,
        "versions": versions(),
        "wall_time_s": wall,
        "outputs": [p.name for p in result.outputs],
        "summary": _jsonable(result.summary),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
