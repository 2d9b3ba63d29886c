"""Sweep orchestration and result files.

One cell per (threshold, seed). Every cell writes its own trajectory CSV;
the merged table, the seed-averaged summary, the optional analytic tables
and the manifest are written single-threaded afterwards. All files start
with a ``# config_hash=... seeds=...`` line and contain no timestamps, so a
manifest can be replayed and compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import ModelSpec, evolve
from .config import ExperimentConfig
from .errors import ConfigError
from .matcher import run_trajectory
from .model import RngStream, build_affinity
from .stats import standard_error, summarize_step

TRAJECTORY_HEADER = ("t,lambda,seed,mean_utility,std_utility,couple_share,"
                     "single_share,married_share,m1,m2,m3,m4")
SUMMARY_HEADER = ("t,lambda,n_seeds,mean_utility,se_mean_utility,std_utility,"
                  "couple_share,married_share")
EXACT_HEADER = "t,b,r,m1,m2,m3,m4"
MANIFEST = "manifest.json"


def fmt(x):
    """12 significant digits, the single number format of every output file."""
    return f"{x:.12g}"


def provenance_line(cfg):
    return f"# config_hash={cfg.hash()} seeds={','.join(str(s) for s in cfg.seeds)}"


def cell_filename(label, seed):
    return f"traj_lambda={label}_seed={seed}.csv"


def trajectory_rows(cfg, label, policy, seed):
    """Simulate one cell and return its CSV data rows (no header)."""
    rng = RngStream(seed)
    A = build_affinity(cfg.n, cfg.offdiag, cfg.diag_spec, rng)
    rows = []

    def observe(state):
        s = summarize_step(state, n_max=4)
        rows.append(",".join([
            str(s.step), label, str(seed), fmt(s.mean_utility), fmt(s.std_utility),
            fmt(s.couple_share), fmt(s.single_share), fmt(s.married_share),
            *(fmt(m) for m in s.moments[1:5])]))

    run_trajectory(A, cfg.steps, policy, cfg.partitions(), rng,
                   keep_states=False, observer=observe)
    return rows


def _write(path, lines):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _run_cell(args):
    cfg_dict, label, seed, out = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    policy = dict(cfg.policies())[label]
    rows = trajectory_rows(cfg, label, policy, seed)
    path = Path(out) / cell_filename(label, seed)
    _write(path, [provenance_line(cfg), TRAJECTORY_HEADER, *rows])
    return str(path)


def _read_rows(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    return lines[2:]


def _summary(cfg, cells):
    """Seed averages per (threshold, t) from the cell tables."""
    out = []
    for label in (lab for lab, _ in cfg.policies()):
        tables = [np.array([r.split(",")[3:] for r in rows], dtype=np.float64)
                  for (lab, _), rows in cells.items() if lab == label]
        stack = np.stack(tables)  # seed x t x column
        for t in range(stack.shape[1]):
            col = stack[:, t, :]
            se = standard_error(col[:, 0])
            out.append(",".join([
                str(t), label, str(stack.shape[0]), fmt(col[:, 0].mean()),
                fmt(se) if math.isfinite(se) else "nan", fmt(col[:, 1].mean()),
                fmt(col[:, 2].mean()), fmt(col[:, 4].mean())]))
    return out


def _analytic_rows(cfg):
    """Mean-field curves (no marriage) in the trajectory schema, plus exact
    rationals and densities when the model allows it."""
    model = ModelSpec(cfg.offdiag, cfg.diag_spec)
    if not (model.exact or (cfg.offdiag.is_continuous and cfg.diag_spec.is_continuous)):
        return None
    states = evolve(model, cfg.analytic_steps, n_max=4)
    rows, exact, dens = [], [], {}
    for s in states:
        m = [float(v) for v in s.population_moments]
        std = math.sqrt(max(m[2] - m[1] ** 2, 0.0))
        rows.append(",".join([str(s.t), "none", "analytic", fmt(m[1]), fmt(std),
                              fmt(float(s.b)), fmt(float(s.r)), fmt(0.0),
                              *(fmt(v) for v in m[1:5])]))
        if s.exact:
            exact.append(",".join([str(s.t), str(s.b), str(s.r),
                                   *(str(v) for v in s.population_moments[1:5])]))
            entry = {"support": [str(v) for v in s.single_density.support],
                     "single": [str(c) for c in s.single_density.coefficients]}
            if s.couple_density is not None:
                entry["couple"] = [str(c) for c in s.couple_density.coefficients]
            dens[str(s.t)] = entry
    return rows, exact, dens


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class SweepResult:
    output_dir: Path
    files: dict
    manifest: Path


def run_sweep(cfg, output_dir=None, workers=None):
    """Run every (threshold, seed) cell of ``cfg`` and write the result files."""
    out = Path(output_dir or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"run.output_dir: cannot write to {out}: {exc.strerror}") from None
    workers = workers or cfg.workers
    labels = [lab for lab, _ in cfg.policies()]
    jobs = [(cfg.to_dict(), lab, seed, str(out)) for lab in labels for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            paths = list(ex.map(_run_cell, jobs))
    else:
        paths = [_run_cell(j) for j in jobs]

    head = provenance_line(cfg)
    cells = {(lab, seed): _read_rows(p) for (_, lab, seed, _), p in zip(jobs, paths)}
    files = [Path(p).name for p in paths]
    merged = [row for key in cells for row in cells[key]]
    _write(out / "trajectories.csv", [head, TRAJECTORY_HEADER, *merged])
    _write(out / "summary.csv", [head, SUMMARY_HEADER, *_summary(cfg, cells)])
    files += ["trajectories.csv", "summary.csv"]

    if cfg.analytic:
        res = _analytic_rows(cfg)
        if res is not None:
            rows, exact, dens = res
            _write(out / "analytic.csv", [head, TRAJECTORY_HEADER, *rows])
            files.append("analytic.csv")
            if exact:
                _write(out / "analytic_exact.csv", [head, EXACT_HEADER, *exact])
                with open(out / "densities.json", "w", encoding="utf-8") as fh:
                    json.dump({"config_hash": cfg.hash(), "seeds": list(cfg.seeds),
                               "steps": dens}, fh, indent=1, sort_keys=True)
                    fh.write("\n")
                files += ["analytic_exact.csv", "densities.json"]

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seeds": list(cfg.seeds),
        "version": __version__,
        "files": {name: sha256_file(out / name) for name in sorted(files)},
    }
    mpath = out / MANIFEST
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return SweepResult(out, manifest["files"], mpath)


def replay(manifest_path, output_dir):
    """Re-run a manifest into ``output_dir``; return the names of files whose
    contents differ (empty when everything reproduces)."""
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        cfg = ExperimentConfig.from_dict(manifest["config"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load manifest {manifest_path}: {exc}") from None
    if os.path.abspath(output_dir) == os.path.abspath(os.path.dirname(manifest_path)):
        raise ConfigError("replay needs a fresh output directory")
    res = run_sweep(cfg, output_dir=output_dir)
    want = manifest["files"]
    return sorted(n for n in set(want) | set(res.files) if want.get(n) != res.files.get(n))


def read_summary(path):
    """``{label: (t array, married_share array, mean_utility array)}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        lines = [l for l in fh.read().splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    i_t, i_l = header.index("t"), header.index("lambda")
    i_m, i_u = header.index("married_share"), header.index("mean_utility")
    for line in lines[1:]:
        f = line.split(",")
        out.setdefault(f[i_l], []).append((int(f[i_t]), float(f[i_m]), float(f[i_u])))
    return {k: tuple(np.array(c) for c in zip(*sorted(v))) for k, v in out.items()}
