"""The sweep experiments behind the ``asqgsk`` subcommands.

Every experiment walks the (SNR, target) grid in a fixed order.  Point ``i``
draws from ``SeedSequence(seed, spawn_key=(i,))``, so results do not depend
on worker scheduling; calibration and the measured run use separate
children of that sequence.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from ..algebra import Constellation
from ..consensus import (
    calibrate_guard_bands,
    consensus_mismatch,
    exchange_indices,
)
from ..errors import CalibrationError, InsufficientData
from ..leakage import csr_symbol_prior, exact_mi_ring, protocol_leakage, uniform_prior
from ..protocol import simulate
from ..recon import default_code_path, load_alist, reconcile_block
from .config import ExperimentConfig
from .emit import Row
from .pipeline import assemble_keys, key_llrs, selection_mask

SELECTION_RULES = ("likelihood", "strength")


@dataclass(frozen=True)
class Point:
    index: int
    snr_db: float
    target: float | None


def grid(cfg: ExperimentConfig, with_targets: bool = True) -> list:
    if not with_targets:
        return [Point(i, s, None) for i, s in enumerate(cfg.snr_db)]
    pts = [(s, t) for t in cfg.target_ier for s in cfg.snr_db]
    return [Point(i, s, t) for i, (s, t) in enumerate(pts)]


def point_seeds(cfg: ExperimentConfig, p: Point):
    calib, run = np.random.SeedSequence(cfg.seed, spawn_key=(p.index,)).spawn(2)
    return calib, run


def _row(cfg, experiment, p, mode, metric, value, n):
    return Row(experiment, cfg.m, float(p.snr_db), p.target, mode, metric, float(value), int(n), cfg.seed)


def _invalid(cfg, experiment, p, exc):
    return [_row(cfg, experiment, p, "invalid", "calibration_error", math.nan, 0)]


def calibrated_run(cfg: ExperimentConfig, p: Point):
    """Guard band for the point, then the measured protocol run."""
    calib, run = point_seeds(cfg, p)
    q = calibrate_guard_bands(p.target, p.snr_db, cfg.gamma, cfg.m, cfg.n_calib_blocks, calib,
                              cfg.quantizer)
    c = Constellation(cfg.m)
    block, rnd, quantizer = simulate(cfg.n_blocks, p.snr_db, c, cfg.gamma, cfg.quantizer, run)
    return q, c, block, rnd, quantizer


def upper_ci(errors: int, trials: int, level: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper bound on an error rate."""
    if trials == 0:
        return math.nan
    if errors >= trials:
        return 1.0
    return float(beta.ppf(level, errors + 1, trials - errors))


# ------------------------------------------------------------------ points

def keyrate_point(cfg: ExperimentConfig, p: Point) -> list:
    try:
        q, c, block, rnd, _ = calibrated_run(cfg, p)
    except CalibrationError as exc:
        return _invalid(cfg, "keyrate", p, exc)
    out = exchange_indices(rnd.samples, q)
    total = out.n_samples
    fixed = out.R_h12.size
    opp = np.union1d(out.R_h12, out.R_h13).size
    rows = [
        _row(cfg, "keyrate", p, "fixed_h12", "key_rate", fixed / total, total),
        _row(cfg, "keyrate", p, "opportunistic", "key_rate", opp / total, total),
        _row(cfg, "keyrate", p, "opportunistic", "relative_gain",
             (opp - fixed) / fixed if fixed else math.nan, total),
        _row(cfg, "keyrate", p, "calibration", "guard_band", q.q_plus, cfg.n_calib_blocks),
    ]
    return rows


def selection_point(cfg: ExperimentConfig, p: Point) -> list:
    try:
        q, c, block, rnd, _ = calibrated_run(cfg, p)
    except CalibrationError as exc:
        return _invalid(cfg, "selection", p, exc)
    out = exchange_indices(rnd.samples, q)
    V = out.V
    rows = [_row(cfg, "selection", p, "calibration", "guard_band", q.q_plus, cfg.n_calib_blocks)]
    if V.size == 0:
        return rows + [_row(cfg, "selection", p, "insufficient", "v_samples", 0, 0)]
    for rule in SELECTION_RULES:
        use12 = selection_mask(rnd, out, rule, c, q, block.sigma2, block.gamma)[V]
        ch = np.where(use12, 0, 1)
        bits = rnd.samples[:, ch, V] > 0
        errors = int(np.sum(bits[1] != bits[0]) + np.sum(bits[2] != bits[0]))
        trials = 2 * V.size
        rows += [
            _row(cfg, "selection", p, rule, "mismatch_rate", errors / trials, trials),
            _row(cfg, "selection", p, rule, "errors", errors, trials),
            _row(cfg, "selection", p, rule, "upper95", upper_ci(errors, trials), trials),
        ]
    return rows


def reconcile_point(cfg: ExperimentConfig, p: Point) -> list:
    try:
        q, c, block, rnd, quantizer = calibrated_run(cfg, p)
    except CalibrationError as exc:
        return _invalid(cfg, "reconcile", p, exc)
    H = load_alist(cfg.ldpc_matrix or default_code_path())
    keys = assemble_keys(rnd, q, cfg.mode, c, block.sigma2, block.gamma)
    L = keys.bits.shape[1]
    rows = [_row(cfg, "reconcile", p, "calibration", "guard_band", q.q_plus, cfg.n_calib_blocks),
            _row(cfg, "reconcile", p, cfg.mode, "key_bits", L, L)]
    if L == 0:
        return rows
    llrs = key_llrs(block, rnd, keys, c, q, quantizer, p.snr_db)
    pre = post = 0.0
    for j in (2, 3):
        res = reconcile_block(keys.bits[0], llrs[j - 2], H, cfg.max_iter, keys.bits[j - 1])
        pre += res.pre_mismatch / 2
        post += res.post_mismatch / 2
        rows += [
            _row(cfg, "reconcile", p, cfg.mode, f"pre_mismatch_node{j}", res.pre_mismatch, L),
            _row(cfg, "reconcile", p, cfg.mode, f"post_mismatch_node{j}", res.post_mismatch, L),
            _row(cfg, "reconcile", p, cfg.mode, f"converged_node{j}", np.mean(res.converged), res.n_frames),
        ]
    rows += [
        _row(cfg, "reconcile", p, cfg.mode, "pre_mismatch", pre, 2 * L),
        _row(cfg, "reconcile", p, cfg.mode, "post_mismatch", post, 2 * L),
        _row(cfg, "reconcile", p, cfg.mode, "disclosed_bits", res.disclosed_bits, L),
    ]
    return rows


def leakage_point(cfg: ExperimentConfig, p: Point) -> list:
    c = Constellation(cfg.m)
    _, run = point_seeds(cfg, p)
    gamma = 10.0 ** (-p.snr_db / 10.0) if cfg.gamma is None else cfg.gamma
    rows = []
    for label, prior in (("uniform", uniform_prior(c)),
                         (cfg.quantizer, csr_symbol_prior(c, gamma, cfg.quantizer))):
        exact = exact_mi_ring(prior, prior, c)
        for k, v in exact.items():
            rows.append(_row(cfg, "leakage", p, f"exact_{label}", k, v, 0))
    try:
        rep = protocol_leakage(cfg.n_blocks, cfg.m, p.snr_db, cfg.gamma, cfg.quantizer, run)
    except InsufficientData:
        return rows + [_row(cfg, "leakage", p, "insufficient", "mi_single_12", math.nan, cfg.n_blocks)]
    for k in ("mi_single_12", "mi_single_13", "mi_joint"):
        rows.append(_row(cfg, "leakage", p, "empirical", k, getattr(rep, k), rep.n))
        rows.append(_row(cfg, "leakage", p, "shuffled_floor", k,
                         getattr(rep, k.replace("mi_", "floor_")), rep.n))
    return rows


def calibrate_point(cfg: ExperimentConfig, p: Point) -> list:
    calib, _ = point_seeds(cfg, p)
    try:
        q = calibrate_guard_bands(p.target, p.snr_db, cfg.gamma, cfg.m, cfg.n_calib_blocks, calib,
                                  cfg.quantizer)
    except CalibrationError as exc:
        return _invalid(cfg, "calibrate", p, exc)
    # re-simulate the calibration draw to report what the chosen band achieves
    _, rnd, _ = simulate(cfg.n_calib_blocks, p.snr_db, Constellation(cfg.m), cfg.gamma, cfg.quantizer,
                         point_seeds(cfg, p)[0])
    keep = np.all(q.in_consensus(rnd.samples), axis=0)
    n = rnd.samples.shape[1] * rnd.samples.shape[2]
    return [
        _row(cfg, "calibrate", p, "calibration", "guard_band", q.q_plus, cfg.n_calib_blocks),
        _row(cfg, "calibrate", p, "calibration", "consensus_mismatch",
             consensus_mismatch(rnd.samples, q), int(keep.sum())),
        _row(cfg, "calibrate", p, "calibration", "consensus_fraction", keep.mean(), n),
    ]


EXPERIMENTS = {
    "keyrate": (keyrate_point, True),
    "selection": (selection_point, True),
    "reconcile": (reconcile_point, True),
    "leakage": (leakage_point, False),
    "calibrate": (calibrate_point, True),
}


def _call(args):
    fn, cfg, p = args
    return fn(cfg, p)


def run_experiment(name: str, cfg: ExperimentConfig) -> list:
    """All rows of one experiment, in grid order regardless of ``cfg.workers``."""
    fn, with_targets = EXPERIMENTS[name]
    jobs = [(fn, cfg, p) for p in grid(cfg, with_targets)]
    if cfg.workers == 1:
        parts = [_call(j) for j in jobs]
    else:
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_call, jobs))
    return [row for part in parts for row in part]


def run_keyrate_experiment(cfg):
    return run_experiment("keyrate", cfg)


def run_selection_experiment(cfg):
    return run_experiment("selection", cfg)


def run_reconciliation_experiment(cfg):
    return run_experiment("reconcile", cfg)


def run_leakage_experiment(cfg):
    return run_experiment("leakage", cfg)


def run_calibration_experiment(cfg):
    return run_experiment("calibrate", cfg)


def all_points_invalid(rows) -> bool:
    return bool(rows) and all(r.mode == "invalid" for r in rows)
