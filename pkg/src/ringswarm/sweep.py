"""Parameter sweeps over (r, l_r, c_r, N) with seed averaging.

Every (cell, seed) pair is an independent simulation. Results are keyed by a
hash of the full configuration and appended to a checkpoint log as they
arrive, so an interrupted sweep can resume without recomputing anything.
Final tables are always written in canonical cell order, which keeps them
byte-identical regardless of worker count or resumption.
"""
import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import multiprocessing
import os

import numpy as np
import yaml

from .cbc import cbc_min_sensing_radius
from .core import SwarmParams
from .engine import SimConfig, SimulationError, run

log = logging.getLogger(__name__)

AXES = ("N", "r", "l_r", "c_r")

# tested cautiousness ranges and default grid spacing per strategy
CR_RANGES = {
    "potential": (0.0, 1.0, "linear"),
    "gyro": (0.0, 1.0, "linear"),
    "cbc": (1e-5, 1e5, "log"),
    "orca": (0.1, 10.0, "log"),
}

RECORD_FIELDS = ("strategy", "N", "r", "l_r", "c_r", "seed", "lambda", "mean_fatness",
                 "mean_tangentness", "collisions", "infeasible", "brake", "barrier_breach",
                 "clip_saturated", "cbc_radius_ok", "error")

SCALING_FIXED = dict(r=0.15, l_r=1.0, alpha=0.001, t_d=2.5, beta=1.0, v0=0.12, a_max=0.6)


class SweepConfigError(ValueError):
    pass


@dataclasses.dataclass
class SweepSpec:
    base: SimConfig
    axes: dict
    seeds: list

    def __post_init__(self):
        for name in self.axes:
            if name not in AXES:
                raise SweepConfigError(f"unknown sweep axis {name!r}")
            if len(self.axes[name]) == 0:
                raise SweepConfigError(f"axis {name!r} is empty")
        if not self.seeds:
            raise SweepConfigError("no seeds")
        strategy = self.base.strategy
        if "c_r" in self.axes and strategy in CR_RANGES:
            lo, hi, _ = CR_RANGES[strategy]
            for c in self.axes["c_r"]:
                if not lo - 1e-12 * abs(lo) <= c <= hi * (1 + 1e-12):
                    raise SweepConfigError(
                        f"c_r={c} outside the tested range [{lo}, {hi}] for {strategy}")

    def cells(self):
        """Axis-value dicts in canonical order (N, r, l_r, c_r; given value order)."""
        names = [a for a in AXES if a in self.axes]
        for combo in itertools.product(*(self.axes[a] for a in names)):
            yield dict(zip(names, combo))

    def config_for(self, cell, seed):
        params = dataclasses.replace(self.base.params, **cell)
        return dataclasses.replace(self.base, params=params, seed=int(seed),
                                   snapshot_times=())


@dataclasses.dataclass
class SweepResult:
    spec: SweepSpec
    records: list

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        write_records(self.records, os.path.join(out_dir, "records.csv"))
        summary = {
            "strategy": self.spec.base.strategy,
            "runs": len(self.records),
            "failed": sum(1 for r in self.records if r["error"]),
            "axes": {k: list(map(float, v)) for k, v in self.spec.axes.items()},
            "seeds": list(map(int, self.spec.seeds)),
        }
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def axis_grid(lo, hi, count, scale="linear"):
    """`count` values evenly spaced over [lo, hi], in value or log10 space."""
    if count < 1:
        raise SweepConfigError("axis count must be >= 1")
    if count == 1:
        return [float(lo)]
    if scale == "linear":
        return [float(x) for x in np.linspace(lo, hi, count)]
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise SweepConfigError("log-spaced axis needs a positive range")
        return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), count)]
    raise SweepConfigError(f"unknown axis scale {scale!r}")


def _parse_axis(name, block, strategy):
    if isinstance(block, (list, tuple)):
        return [float(v) for v in block]
    if "values" in block:
        return [float(v) for v in block["values"]]
    if name == "c_r" and strategy in CR_RANGES:
        lo, hi, scale = CR_RANGES[strategy]
    else:
        lo = hi = None
        scale = "linear"
    if "range" in block:
        lo, hi = block["range"]
    if lo is None:
        raise SweepConfigError(f"axis {name!r} needs 'values' or 'range'")
    scale = block.get("scale", scale)
    values = axis_grid(float(lo), float(hi), int(block.get("count", 1)), scale)
    if name == "N":
        values = [int(round(v)) for v in values]
    return values


def spec_from_dict(doc):
    """Build a SweepSpec from the parsed YAML document (see README)."""
    try:
        base = dict(doc.get("base", {}))
        param_names = {f.name for f in dataclasses.fields(SwarmParams)}
        params = SwarmParams(**{k: base.pop(k) for k in list(base) if k in param_names})
        base.pop("snapshot_times", None)
        config = SimConfig(params=params, **base)
        axes = {name: _parse_axis(name, block, config.strategy)
                for name, block in (doc.get("axes") or {}).items()}
        seeds_block = doc.get("seeds", {"base": 0, "count": 1})
        if isinstance(seeds_block, list):
            seeds = [int(s) for s in seeds_block]
        elif "values" in seeds_block:
            seeds = [int(s) for s in seeds_block["values"]]
        else:
            seeds = [int(seeds_block.get("base", 0)) + k for k in range(int(seeds_block["count"]))]
        return SweepSpec(config, axes, seeds)
    except SweepConfigError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise SweepConfigError(str(exc)) from exc


def load_spec(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise SweepConfigError(f"{path}: expected a mapping at top level")
    return spec_from_dict(doc)


def run_key(config):
    """Stable hash of everything that determines a simulation's outcome."""
    doc = dataclasses.asdict(config)
    doc["snapshot_times"] = []
    blob = json.dumps(doc, sort_keys=True, default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _run_one(args):
    key, config = args
    p = config.params
    rec = {
        "strategy": config.strategy, "N": p.N, "r": p.r, "l_r": p.l_r, "c_r": p.c_r,
        "seed": config.seed,
        "cbc_radius_ok": (bool(p.l_r >= cbc_min_sensing_radius(p.c_r, p.a_max, p.v_max, p.D_s))
                          if config.strategy == "cbc" else None),
    }
    try:
        series = run(config)
    except SimulationError as exc:
        rec.update({"lambda": None, "mean_fatness": None, "mean_tangentness": None,
                    "collisions": None, "infeasible": None, "brake": None,
                    "barrier_breach": None, "clip_saturated": None, "error": str(exc)})
        return key, rec
    d = series.diagnostics
    rec.update({
        "lambda": series.lam, "mean_fatness": series.mean_fatness,
        "mean_tangentness": series.mean_tangentness, "collisions": series.collisions,
        "infeasible": d["infeasible"], "brake": d["brake"],
        "barrier_breach": d["barrier_breach"], "clip_saturated": d["clip_saturated"],
        "error": "",
    })
    return key, rec


def _drop_torn_tail(path):
    with open(path, "rb+") as fh:
        data = fh.read()
        if data and not data.endswith(b"\n"):
            fh.truncate(data.rfind(b"\n") + 1)


def _load_checkpoint(path):
    done = {}
    if not os.path.exists(path):
        return done
    _drop_torn_tail(path)
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                # torn final line from an interrupted write
                continue
            done[entry["key"]] = entry["record"]
    return done


def run_sweep(spec, workers=1, checkpoint=None, resume=False):
    """Run every cell x seed and return the records in canonical order.

    With `checkpoint` set, each finished run is appended to that JSONL file;
    ``resume=True`` reuses the runs already logged there.
    """
    jobs = []
    for cell in spec.cells():
        for seed in spec.seeds:
            config = spec.config_for(cell, seed)
            jobs.append((run_key(config), config))

    done = {}
    if checkpoint is not None:
        if resume:
            done = _load_checkpoint(checkpoint)
        elif os.path.exists(checkpoint):
            os.remove(checkpoint)
    todo = [job for job in jobs if job[0] not in done]
    log.info("sweep: %d runs, %d cached, %d to do", len(jobs), len(jobs) - len(todo), len(todo))

    fh = open(checkpoint, "a") if checkpoint is not None else None
    try:
        if workers > 1 and len(todo) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(workers) as pool:
                for key, rec in pool.imap(_run_one, todo, chunksize=1):
                    done[key] = rec
                    _append(fh, key, rec)
        else:
            for job in todo:
                key, rec = _run_one(job)
                done[key] = rec
                _append(fh, key, rec)
    finally:
        if fh is not None:
            fh.close()
    return SweepResult(spec, [done[key] for key, _ in jobs])


def _append(fh, key, rec):
    if fh is None:
        return
    fh.write(json.dumps({"key": key, "record": rec}, sort_keys=True) + "\n")
    fh.flush()


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for rec in records:
            w.writerow([_fmt(rec.get(f)) for f in RECORD_FIELDS])


def read_records(path):
    ints = {"N", "seed", "collisions", "infeasible", "brake", "barrier_breach", "clip_saturated"}
    floats = {"r", "l_r", "c_r", "lambda", "mean_fatness", "mean_tangentness"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if v == "":
                    rec[k] = "" if k in ("error", "strategy") else None
                elif k in ints:
                    rec[k] = int(v)
                elif k in floats:
                    rec[k] = float(v)
                elif k == "cbc_radius_ok":
                    rec[k] = v == "true"
                else:
                    rec[k] = v
            out.append(rec)
    return out


def _records(result):
    return result.records if isinstance(result, SweepResult) else list(result)


def seed_average(result, keys=("N", "r", "l_r", "c_r")):
    """Mean lambda over seeds per cell; runs without a lambda are excluded."""
    groups = {}
    for rec in _records(result):
        groups.setdefault(tuple(rec[k] for k in keys), []).append(rec["lambda"])
    rows = []
    for key, lams in groups.items():
        vals = [v for v in lams if v is not None]
        row = dict(zip(keys, key))
        row["mean_lambda"] = float(np.mean(vals)) if vals else None
        row["n"] = len(vals)
        rows.append(row)
    return rows


def flatten_best_cr(result):
    """Best seed-averaged lambda over c_r for each (N, r, l_r).

    Ties go to the smaller c_r. Cells with no finished run give None.
    """
    flat = {}
    for row in seed_average(result):
        key = (row["N"], row["r"], row["l_r"])
        cur = flat.setdefault(key, {"N": key[0], "r": key[1], "l_r": key[2],
                                    "best_lambda": None, "best_c_r": None})
        lam = row["mean_lambda"]
        if lam is None:
            continue
        best = cur["best_lambda"]
        if best is None or lam > best or (lam == best and row["c_r"] < cur["best_c_r"]):
            cur["best_lambda"] = lam
            cur["best_c_r"] = row["c_r"]
    return list(flat.values())


def average_over_lr(flat):
    """Mean best lambda across the sensing radii for each (N, r)."""
    groups = {}
    for row in flat:
        groups.setdefault((row["N"], row["r"]), []).append(row["best_lambda"])
    out = []
    for (n, r), lams in groups.items():
        vals = [v for v in lams if v is not None]
        out.append({"N": n, "r": r, "mean_lambda": float(np.mean(vals)) if vals else None,
                    "count": len(vals)})
    return out


def scaling_spec(base, n_values, c_r_values, seeds):
    """SweepSpec for the agent-count study with the other parameters pinned."""
    if base.strategy not in ("cbc", "orca"):
        raise SweepConfigError("the scaling study covers only cbc and orca")
    params = dataclasses.replace(base.params, **SCALING_FIXED)
    config = dataclasses.replace(base, params=params)
    return SweepSpec(config, {"N": [int(n) for n in n_values],
                              "c_r": [float(c) for c in c_r_values]}, list(seeds))


def scaling_study(spec, workers=1, checkpoint=None, resume=False):
    """Seed-averaged lambda per (N, c_r) cell.

    Accepts a spec with N and c_r axes; the remaining parameters are forced
    to the study's fixed values.
    """
    if "N" not in spec.axes:
        raise SweepConfigError("scaling study needs an N axis")
    pinned = scaling_spec(spec.base, spec.axes["N"], spec.axes.get("c_r", [spec.base.params.c_r]),
                          spec.seeds)
    result = run_sweep(pinned, workers=workers, checkpoint=checkpoint, resume=resume)
    return scaling_table(result)


def scaling_table(result):
    return [{"N": row["N"], "c_r": row["c_r"], "mean_lambda": row["mean_lambda"], "n": row["n"]}
            for row in seed_average(result)]


def write_table(rows, path, fields=None):
    rows = list(rows)
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row.get(f)) for f in fields])
