"""Trajectory files, alignment, and APE/RPE metrics.

Trajectories use the TUM text format, one pose per line:

    timestamp tx ty tz qx qy qz qw

APE compares globally aligned absolute poses (Sim3 alignment by default,
matching monocular scale ambiguity); RPE compares relative motions delta
frames apart and needs no alignment. Rotation errors are geodesic angles.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geom import Sim3, quat_normalize, quat_to_rotation, rotation_angle, rotation_to_quat


class TrajectoryFormatError(ValueError):
    pass


@dataclass
class Trajectory:
    """Timestamped poses: times (n,), positions (n, 3), quaternions (n, 4)
    in (qx, qy, qz, qw) order."""

    times: np.ndarray
    positions: np.ndarray
    quaternions: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        n = self.times.shape[0]
        self.positions = np.asarray(self.positions, dtype=float).reshape(n, 3)
        self.quaternions = np.asarray(self.quaternions, dtype=float).reshape(n, 4)
        if n and np.any(np.diff(self.times) <= 0.0):
            bad = int(np.argmax(np.diff(self.times) <= 0.0)) + 1
            raise TrajectoryFormatError(f"timestamps must increase strictly (row {bad + 1})")
        norms = np.linalg.norm(self.quaternions, axis=1)
        if n and np.any(np.abs(norms - 1.0) > 1e-6):
            self.quaternions = self.quaternions / norms[:, None]

    def __len__(self):
        return self.times.shape[0]

    def rotations(self):
        return np.stack([quat_to_rotation(q) for q in self.quaternions])

    def transformed(self, s: Sim3) -> "Trajectory":
        """Apply a similarity transform to every pose."""
        pos = s.apply(self.positions)
        quats = np.stack([rotation_to_quat(s.rotation @ quat_to_rotation(q)) for q in self.quaternions])
        return Trajectory(self.times.copy(), pos, quats)


def read_tum(path) -> Trajectory:
    times, positions, quats = [], [], []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) != 8:
                raise TrajectoryFormatError(f"{path}:{lineno}: expected 8 fields, got {len(fields)}")
            try:
                vals = [float(x) for x in fields]
            except ValueError as exc:
                raise TrajectoryFormatError(f"{path}:{lineno}: {exc}") from exc
            times.append(vals[0])
            positions.append(vals[1:4])
            quats.append(quat_normalize(vals[4:8]))
    if not times:
        raise TrajectoryFormatError(f"{path}: no poses found")
    t = np.asarray(times)
    if np.any(np.diff(t) <= 0.0):
        bad = int(np.argmax(np.diff(t) <= 0.0)) + 1
        raise TrajectoryFormatError(f"{path}: non-increasing timestamp at pose {bad + 1}")
    return Trajectory(t, np.asarray(positions), np.asarray(quats))


def write_tum(traj: Trajectory, path):
    with open(path, "w") as f:
        f.write("# timestamp tx ty tz qx qy qz qw\n")
        for t, p, q in zip(traj.times, traj.positions, traj.quaternions):
            f.write(f"{t:.9f} {p[0]:.9f} {p[1]:.9f} {p[2]:.9f} {q[0]:.9f} {q[1]:.9f} {q[2]:.9f} {q[3]:.9f}\n")


class AssociationError(ValueError):
    pass


def associate(est: Trajectory, gt: Trajectory, max_dt: float = 0.02):
    """Greedy one-to-one nearest-timestamp matching within max_dt.

    Returns (est_indices, gt_indices) as int arrays, ordered by est time.
    """
    if len(est) == 0 or len(gt) == 0:
        raise AssociationError("cannot associate empty trajectories")
    candidates = []
    for i, te in enumerate(est.times):
        j = int(np.searchsorted(gt.times, te))
        for jj in (j - 1, j):
            if 0 <= jj < len(gt):
                dt = abs(te - gt.times[jj])
                if dt <= max_dt:
                    candidates.append((dt, i, jj))
    candidates.sort()
    used_e, used_g = set(), set()
    pairs = []
    for _, i, j in candidates:
        if i in used_e or j in used_g:
            continue
        used_e.add(i)
        used_g.add(j)
        pairs.append((i, j))
    if not pairs:
        raise AssociationError(f"no pose pairs within max_dt = {max_dt} s")
    pairs.sort()
    idx = np.asarray(pairs, dtype=int)
    return idx[:, 0], idx[:, 1]


class DegenerateGeometryError(ValueError):
    pass


def umeyama_align(P, Q, with_scale: bool = True) -> Sim3:
    """Least-squares similarity (or rigid, with_scale=False) transform
    minimizing sum ||s R p_i + t - q_i||^2, reflections corrected."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape or P.ndim != 2 or P.shape[1] != 3:
        raise ValueError("point sets must both be (n, 3)")
    n = P.shape[0]
    if n < 3:
        raise DegenerateGeometryError("need at least 3 point pairs")
    mu_p = P.mean(axis=0)
    mu_q = Q.mean(axis=0)
    Pc = P - mu_p
    Qc = Q - mu_q
    var_p = float((Pc**2).sum() / n)
    cov = Qc.T @ Pc / n
    U, d, Vt = np.linalg.svd(cov)
    if d[1] < 1e-12 * max(d[0], 1e-300) or var_p < 1e-24:
        raise DegenerateGeometryError("point set is collinear or coincident")
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    s = float(np.trace(np.diag(d) @ S) / var_p) if with_scale else 1.0
    if with_scale and not s > 0.0:
        raise DegenerateGeometryError(f"recovered non-positive scale {s}")
    t = mu_q - s * R @ mu_p
    return Sim3(s, R, t)


@dataclass
class MetricStats:
    rmse: float
    mean: float
    median: float
    max: float

    @staticmethod
    def from_errors(errors):
        e = np.asarray(errors, dtype=float)
        return MetricStats(
            rmse=float(np.sqrt(np.mean(e**2))),
            mean=float(np.mean(e)),
            median=float(np.median(e)),
            max=float(np.max(e)),
        )

    def as_dict(self):
        return {"rmse": self.rmse, "mean": self.mean, "median": self.median, "max": self.max}


ALIGN_MODES = ("sim3", "se3", "none")


def ape(est: Trajectory, gt: Trajectory, align: str = "sim3", max_dt: float = 0.02):
    """Absolute pose error after optional trajectory alignment.

    Returns (translation MetricStats [m], rotation MetricStats [rad]).
    """
    if align not in ALIGN_MODES:
        raise ValueError(f"align must be one of {ALIGN_MODES}")
    ie, ig = associate(est, gt, max_dt)
    P = est.positions[ie]
    Q = gt.positions[ig]
    if align != "none":
        transform = umeyama_align(P, Q, with_scale=(align == "sim3"))
    else:
        transform = Sim3.identity()
    P_aligned = transform.apply(P)
    trans_err = np.linalg.norm(P_aligned - Q, axis=1)
    rot_err = []
    for i, j in zip(ie, ig):
        R_est = transform.rotation @ quat_to_rotation(est.quaternions[i])
        R_gt = quat_to_rotation(gt.quaternions[j])
        rot_err.append(rotation_angle(R_est.T @ R_gt))
    return MetricStats.from_errors(trans_err), MetricStats.from_errors(rot_err)


def _se3(R, t):
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def _se3_inv(T):
    out = np.eye(4)
    out[:3, :3] = T[:3, :3].T
    out[:3, 3] = -T[:3, :3].T @ T[:3, 3]
    return out


def rpe(est: Trajectory, gt: Trajectory, delta: int = 1, max_dt: float = 0.02):
    """Relative pose error over motions delta associated frames apart.

    Invariant to rigid pre-transforms of either trajectory. Returns
    (translation MetricStats [m], rotation MetricStats [rad]).
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    ie, ig = associate(est, gt, max_dt)
    if len(ie) <= delta:
        raise ValueError(f"need more than delta={delta} associated poses, have {len(ie)}")
    trans_err, rot_err = [], []
    T_est = [_se3(quat_to_rotation(est.quaternions[i]), est.positions[i]) for i in ie]
    T_gt = [_se3(quat_to_rotation(gt.quaternions[j]), gt.positions[j]) for j in ig]
    for k in range(len(ie) - delta):
        rel_gt = _se3_inv(T_gt[k]) @ T_gt[k + delta]
        rel_est = _se3_inv(T_est[k]) @ T_est[k + delta]
        err = _se3_inv(rel_gt) @ rel_est
        trans_err.append(np.linalg.norm(err[:3, 3]))
        rot_err.append(rotation_angle(err[:3, :3]))
    return MetricStats.from_errors(trans_err), MetricStats.from_errors(rot_err)


@dataclass
class MetricReport:
    ape_translation: MetricStats
    rpe_translation: MetricStats
    ape_rotation: MetricStats
    rpe_rotation: MetricStats

    def as_dict(self):
        return {
            "ape_translation_m": self.ape_translation.as_dict(),
            "rpe_translation_m": self.rpe_translation.as_dict(),
            "ape_rotation_rad": self.ape_rotation.as_dict(),
            "rpe_rotation_rad": self.rpe_rotation.as_dict(),
        }


def evaluate(est: Trajectory, gt: Trajectory, align: str = "sim3", rpe_delta: int = 1,
             max_dt: float = 0.02) -> MetricReport:
    """Full APE + RPE evaluation (RPE always unaligned, standard practice)."""
    ape_t, ape_r = ape(est, gt, align=align, max_dt=max_dt)
    rpe_t, rpe_r = rpe(est, gt, delta=rpe_delta, max_dt=max_dt)
    return MetricReport(ape_t, rpe_t, ape_r, rpe_r)


def synth_odometry(gt: Trajectory, drift=0.0, noise_sigma=0.0, seed=0,
                   rot_sigma=0.0) -> Trajectory:
    """Synthetic noisy odometry: integrate ground-truth relative motions
    corrupted by a constant per-step translation bias (drift, scalar along
    body x or a 3-vector) and zero-mean Gaussian noise. Deterministic per
    seed; sigma = drift = 0 reproduces the input exactly."""
    rng = np.random.Generator(np.random.PCG64(seed))
    drift_vec = np.asarray(drift, dtype=float)
    if drift_vec.ndim == 0:
        drift_vec = np.array([float(drift_vec), 0.0, 0.0])
    R = gt.rotations()
    out_R = [R[0]]
    out_p = [gt.positions[0].copy()]
    for k in range(len(gt) - 1):
        rel_R = R[k].T @ R[k + 1]
        rel_t = R[k].T @ (gt.positions[k + 1] - gt.positions[k])
        if noise_sigma > 0.0:
            rel_t = rel_t + rng.normal(0.0, noise_sigma, 3)
        rel_t = rel_t + drift_vec
        if rot_sigma > 0.0:
            axis_angle = rng.normal(0.0, rot_sigma, 3)
            angle = np.linalg.norm(axis_angle)
            if angle > 0.0:
                from .geom import skew

                K = skew(axis_angle / angle)
                rel_R = rel_R @ (np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K))
        out_p.append(out_p[-1] + out_R[-1] @ rel_t)
        out_R.append(out_R[-1] @ rel_R)
    quats = np.stack([rotation_to_quat(r) for r in out_R])
    return Trajectory(gt.times.copy(), np.stack(out_p), quats)


@dataclass
class ReportEntry:
    trajectory: str
    algorithm: str
    report: MetricReport


def format_report(entries, fmt: str = "markdown") -> str:
    """Benchmark table: Trajectory | Algorithm | APE[m] | RPE[m] | APE[rad]
    | RPE[rad], RMSE values at 3 significant digits, column best bolded
    (ties all bolded) in markdown."""
    if not entries:
        raise ValueError("need at least one report entry")
    if fmt == "json":
        return json.dumps(
            [
                {"trajectory": e.trajectory, "algorithm": e.algorithm, **e.report.as_dict()}
                for e in entries
            ],
            indent=2,
            sort_keys=True,
        )
    if fmt != "markdown":
        raise ValueError(f"unknown report format '{fmt}'")
    cols = [
        ("APE[m]", lambda r: r.ape_translation.rmse),
        ("RPE[m]", lambda r: r.rpe_translation.rmse),
        ("APE[rad]", lambda r: r.ape_rotation.rmse),
        ("RPE[rad]", lambda r: r.rpe_rotation.rmse),
    ]
    best = {name: min(fn(e.report) for e in entries) for name, fn in cols}
    lines = ["| Trajectory | Algorithm | APE[m] | RPE[m] | APE[rad] | RPE[rad] |",
             "|---|---|---|---|---|---|"]
    for e in entries:
        cells = [e.trajectory, e.algorithm]
        for name, fn in cols:
            v = fn(e.report)
            text = f"{v:.3g}"
            if v == best[name]:
                text = f"**{text}**"
            cells.append(text)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)
