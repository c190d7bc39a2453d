"""Vectorized ensembles of independent billiard trajectories.

Trajectory ``t`` draws its starts from its own Philox stream, derived from
``(seed, t)`` only, and is advanced by elementwise array operations in a
chunk whose boundaries depend on the trajectory count alone. Worker count
therefore changes neither the per-trajectory results nor the statistics,
which are computed from the concatenated per-trajectory arrays.
"""

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .config import TUBE, LorentzConfig
from .geometry import sample_invariant_measure

CHUNK = 512
MAX_RESTARTS = 200
CSV_COLUMNS = ("trajectory_id", "checkpoint", "dx", "dy", "returned_by_checkpoint")


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def checkpoint_schedule(M: int, count: int = 10) -> list:
    if M < count:
        raise ValidationError(f"M={M} must be at least the number of checkpoints ({count})")
    return [round(k * M / count) for k in range(1, count + 1)]


@dataclass
class EnsembleStats:
    """Ensemble summary; every field is derived from per-trajectory arrays."""

    trajectories: int
    collisions: int
    seed: int
    checkpoints: list
    drift_mean: list
    drift_se: list
    covariance: list
    covariance_se: list
    return_fraction: list
    return_fraction_se: list
    cell_histogram: dict
    scatterer_visits: list
    resamples: int
    escapes: int
    singular: int
    speed_defect: float = 0.0
    reflection_defect: float = 0.0
    warnings: list = field(default_factory=list)
    displacements: np.ndarray = field(default=None, repr=False)
    first_return: np.ndarray = field(default=None, repr=False)

    def covariance_trace_fit(self) -> dict:
        """Least-squares line through (n, trace Cov(X_n)) and its R^2."""
        n = np.asarray(self.checkpoints, dtype=float)
        tr = np.array([np.trace(np.asarray(c)) for c in self.covariance])
        slope, intercept = np.polyfit(n, tr, 1)
        resid = tr - (slope * n + intercept)
        total = float(((tr - tr.mean()) ** 2).sum())
        r2 = 1.0 - float((resid ** 2).sum()) / total if total > 0 else 0.0
        return {"slope": float(slope), "intercept": float(intercept), "r2": r2}

    def to_dict(self) -> dict:
        return {
            "trajectories": self.trajectories, "collisions": self.collisions, "seed": self.seed,
            "checkpoints": list(self.checkpoints),
            "drift_mean": self.drift_mean, "drift_se": self.drift_se,
            "covariance": self.covariance, "covariance_se": self.covariance_se,
            "covariance_trace_fit": self.covariance_trace_fit(),
            "return_fraction": self.return_fraction, "return_fraction_se": self.return_fraction_se,
            "cell_histogram": self.cell_histogram, "scatterer_visits": self.scatterer_visits,
            "resamples": self.resamples, "escapes": self.escapes, "singular": self.singular,
            "speed_defect": self.speed_defect, "reflection_defect": self.reflection_defect,
            "warnings": list(self.warnings),
        }


def _candidates(config):
    disks, offsets = config._derived["disks"], config._derived["offsets"]
    (a, b), (c, d) = config.translations
    rows = []
    for k, (cx, cy, r, _, _) in enumerate(disks):
        for o in offsets:
            rows.append((cx + o[0] * a + o[1] * c, cy + o[0] * b + o[1] * d, r, k, o[0], o[1]))
    arr = np.array(rows, dtype=float)
    self_index = np.array([offsets.index((0, 0)) + k * len(offsets) for k in range(len(disks))])
    return arr, self_index


def _simulate_chunk(args):
    config, seed, start, stop, M, checkpoints = args
    disks = config._derived["disks"]
    cand, self_index = _candidates(config)
    Cx, Cy, R = cand[:, 0], cand[:, 1], cand[:, 2]
    Kd = cand[:, 3].astype(np.int64)
    Ox, Oy = cand[:, 4].astype(np.int64), cand[:, 5].astype(np.int64)
    R2 = R * R
    (ta, tb), (tc, td) = config.translations
    Tx, Ty = Ox * ta + Oy * tc, Ox * tb + Oy * td
    mirrored = np.array([m for *_, m in disks])
    source = np.array([s for *_, s, _ in disks], dtype=np.int64)
    D = config.cell_dim
    eps, safe = config.eps_tangent, config._derived["safe_flight"]

    n = stop - start
    rngs = [trajectory_rng(seed, t) for t in range(start, stop)]
    qx, qy, vx, vy = (np.empty(n) for _ in range(4))
    lid = np.empty(n, dtype=np.int64)
    cell = np.zeros((n, D), dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    first_return = np.full(n, M + 1, dtype=np.int64)
    disp = np.zeros((n, len(checkpoints), D), dtype=np.int64)
    visits = np.zeros((n, len(config.scatterers)), dtype=np.int64)
    counts = {"resamples": 0, "escapes": 0, "singular": 0, "reflection_defect": 0.0, "speed_defect": 0.0}
    restarts = np.zeros(n, dtype=np.int64)

    def restart(idx):
        for t in idx:
            restarts[t] += 1
            if restarts[t] > MAX_RESTARTS:
                raise ValidationError(
                    f"trajectory {start + t} restarted {MAX_RESTARTS} times without completing {M} collisions; "
                    "raise horizon_cells or lower M")
            le = sample_invariant_measure(rngs[t], config)
            qx[t], qy[t] = le.point
            vx[t], vy[t] = le.velocity
            lid[t] = le.scatterer
            cell[t] = 0
            step[t] = 0
            first_return[t] = M + 1
            visits[t] = 0

    restart(range(n))
    restarts[:] = 0
    cp_index = {c: k for k, c in enumerate(checkpoints)}
    active = np.arange(n)
    while active.size:
        ax, ay = qx[active, None] - Cx, qy[active, None] - Cy
        b = ax * vx[active, None] + ay * vy[active, None]
        cc = ax * ax + ay * ay - R2
        disc = b * b - cc
        ok = (b < 0) & (disc >= 0)
        t = np.where(ok, -b - np.sqrt(np.where(ok, disc, 0.0)), np.inf)
        t[np.arange(active.size), self_index[lid[active]]] = np.inf
        t[t <= 0] = np.inf
        best = np.argmin(t, axis=1)
        rows = np.arange(active.size)
        tau = t[rows, best]
        rel = disc[rows, best] / R2[best]
        near = (b < 0) & (disc < 0) & (disc > -eps * R2) & (-b < tau[:, None])
        near[rows, self_index[lid[active]]] = False
        escape = ~(tau <= safe)
        singular = ~escape & ((rel < eps) | near.any(axis=1))
        bad = escape | singular
        if bad.any():
            counts["escapes"] += int(escape.sum())
            counts["singular"] += int(singular.sum())
            counts["resamples"] += int(bad.sum())
            restart(active[bad])
        good = ~bad
        g, k = active[good], best[good]
        tg = tau[good]
        hx, hy = qx[g] + tg * vx[g], qy[g] + tg * vy[g]
        nx, ny = (hx - Cx[k]) / R[k], (hy - Cy[k]) / R[k]
        norm = np.sqrt(nx * nx + ny * ny)
        nx, ny = nx / norm, ny / norm
        vn = vx[g] * nx + vy[g] * ny
        wx, wy = vx[g] - 2 * vn * nx, vy[g] - 2 * vn * ny
        speed = np.sqrt(wx * wx + wy * wy)
        wx, wy = wx / speed, wy / speed
        if g.size:
            counts["reflection_defect"] = max(counts["reflection_defect"], float(np.abs(speed - 1).max()))
            counts["speed_defect"] = max(counts["speed_defect"], float(np.abs(np.sqrt(wx * wx + wy * wy) - 1).max()))
        disk = Kd[k]
        px = Cx[k] - Tx[k] + R[k] * nx
        py = Cy[k] - Ty[k] + R[k] * ny
        flip = mirrored[disk]
        py = np.where(flip, -py, py)
        wy = np.where(flip, -wy, wy)
        qx[g], qy[g], vx[g], vy[g] = px, py, wx, wy
        lid[g] = source[disk]
        cell[g, 0] += Ox[k]
        if D == 2:
            cell[g, 1] += Oy[k]
        step[g] += 1
        np.add.at(visits, (g, source[disk]), 1)
        home = (cell[g] == 0).all(axis=1) & (first_return[g] > M)
        first_return[g[home]] = step[g[home]]
        for c, kk in cp_index.items():
            at = g[step[g] == c]
            if at.size:
                disp[at, kk] = cell[at]
        active = active[step[active] < M]
    return disp, first_return, visits, counts


def run_ensemble(config: LorentzConfig, N: int, M: int, seed: int, workers: int = 1,
                 checkpoints: list = None, csv_path: str = None) -> EnsembleStats:
    """Simulate N trajectories of M collisions from invariant-measure starts.

    Trajectories that hit a tangency or escape the search horizon are
    restarted from a fresh draw of their own stream and counted.
    """
    if N < 2 or M < 1:
        raise ValidationError("need N >= 2 trajectories and M >= 1 collisions")
    checkpoints = list(checkpoints or checkpoint_schedule(M))
    if checkpoints[-1] != M or sorted(set(checkpoints)) != checkpoints:
        raise ValidationError("checkpoints must increase strictly and end at M")
    jobs = [(config, seed, s, min(s + CHUNK, N), M, checkpoints) for s in range(0, N, CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(j) for j in jobs]
    disp = np.concatenate([p[0] for p in parts])
    first_return = np.concatenate([p[1] for p in parts])
    visits = np.concatenate([p[2] for p in parts]).sum(axis=0)
    totals = {key: sum(p[3][key] for p in parts) for key in ("resamples", "escapes", "singular")}
    totals.update({key: max(p[3][key] for p in parts) for key in ("reflection_defect", "speed_defect")})
    stats = summarize(disp, first_return, visits, totals, config, N, M, seed, checkpoints)
    if csv_path:
        write_csv(csv_path, stats)
    return stats


def _mean(x):
    return math.fsum(x) / len(x)


def summarize(disp, first_return, visits, totals, config, N, M, seed, checkpoints) -> EnsembleStats:
    D = disp.shape[2]
    final = disp[:, -1, :].astype(float) / M
    drift = [_mean(final[:, j]) for j in range(D)]
    drift_se = [float(np.std(final[:, j], ddof=1)) / math.sqrt(N) for j in range(D)]
    covs, cov_se = [], []
    for k in range(len(checkpoints)):
        X = disp[:, k, :].astype(float)
        mu = [_mean(X[:, j]) for j in range(D)]
        C, S = [], []
        for a in range(D):
            row, srow = [], []
            for b in range(D):
                prod = (X[:, a] - mu[a]) * (X[:, b] - mu[b])
                row.append(math.fsum(prod) / (N - 1))
                srow.append(float(np.std(prod, ddof=1)) / math.sqrt(N))
            C.append(row)
            S.append(srow)
        covs.append(C)
        cov_se.append(S)
    frac = [float(np.count_nonzero(first_return <= c)) / N for c in checkpoints]
    frac_se = [math.sqrt(p * (1 - p) / N) for p in frac]
    keys, counts = np.unique(disp[:, -1, :], axis=0, return_counts=True)
    hist = {",".join(str(int(v)) for v in key): int(cnt) for key, cnt in zip(keys, counts)}
    notes = []
    attempts = N + totals["resamples"]
    if totals["resamples"] > 0.01 * attempts:
        notes.append(f"resample rate {totals['resamples'] / attempts:.3%} above 1%: geometry close to tangency "
                     "or horizon too small")
        warnings.warn(notes[-1])
    return EnsembleStats(N, M, seed, checkpoints, drift, drift_se, covs, cov_se, frac, frac_se, hist,
                         [int(v) for v in visits], totals["resamples"], totals["escapes"],
                         totals["singular"], totals["speed_defect"], totals["reflection_defect"],
                         notes, disp, first_return)


def write_csv(path, stats: EnsembleStats):
    """Per-trajectory, per-checkpoint displacements (dy is 0 in tubes)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for t in range(stats.trajectories):
            for k, c in enumerate(stats.checkpoints):
                x = stats.displacements[t, k]
                dy = int(x[1]) if x.shape[0] > 1 else 0
                w.writerow((t, c, int(x[0]), dy, int(stats.first_return[t] <= c)))
