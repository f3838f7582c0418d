"""Configuration-driven command line: sweeps, dynamics scans, training campaigns.

Four subcommands, all reading an INI-style config file:

    tprabi sweep    --config cfg.ini --out DIR [--threads N]
    tprabi dynamics --config cfg.ini --out DIR
    tprabi train    --config cfg.ini --out DIR [--seed N] [--threads N]
    tprabi replay   --config cfg.ini --out DIR

Exit codes: 0 success, 2 config error, 3 partial failure (some cells or
seeds failed).  All CSV output is deterministic for a fixed config/seed:
comma separated, '.' decimal, UTF-8, LF line endings, one comment line
carrying the version and a config hash.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .control import (TrainConfig, initial_state_density, read_best_sequence, replay_best,
                      train_round, write_best_sequence, write_training_log)
from .errors import ConfigError, IntegrationDiverged, TprabiError, ZeroPopulation
from .fock import ModelParams, build_hamiltonian, cavity_ops, embed_cavity
from .lindblad import Dissipation, PulseSequence, propagate, write_trajectory_csv
from .measures import (OBSERVATION_LABELS, entanglement_witness, reduced_state,
                       second_order_correlation, wigner, wigner_negativity_average)
from .spectral import KL_CONVERGED_MAX, dressed_operator, eigendecompose, kl_convergence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


@dataclasses.dataclass
class ExperimentConfig:
    """Effective settings of one CLI invocation."""

    mode: str
    out_dir: str
    model: ModelParams
    dissipation: Dissipation
    threads: int = 1
    # sweep
    g_range: tuple = (0.0, 0.5, 50)
    omega_range: tuple = (0.0, 0.6, 50)
    wigner_points: int = 100
    wigner_extent: float = 5.0
    # dynamics
    scan_omegas: tuple = (0.0, 0.2, 0.4)
    scan_states: tuple = ("ground", "coherent_down")
    # train
    train: TrainConfig | None = None
    n_seeds: int = 20
    base_seed: int = 1
    min_success: int = 15
    # replay
    sequence_file: str = ""
    replay_state: str = "ground"

    def hash(self) -> str:
        # execution details (worker count, output location) must not change
        # the fingerprint of the experiment itself
        plain = _as_plain(self)
        plain.pop("threads", None)
        plain.pop("out_dir", None)
        payload = json.dumps(plain, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _as_plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _as_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_as_plain(x) for x in obj]
    if isinstance(obj, (int, str, bool)) or obj is None:
        return obj
    return repr(obj)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "NaN" if np.isnan(x) else repr(x)
    return str(x)


def _write_csv(path, header: str, rows, config: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# tprabi {__version__} mode={config.mode} config_hash={config.hash()}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# config parsing

def _get(section, key, cast, default):
    if section is None or key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return cast(section[key])
    except ValueError as err:
        raise ConfigError(f"bad value for {key!r}: {err}") from None


def _floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _strings(text: str) -> tuple:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def load_config(path: str, mode: str, out_dir: str, seed_override=None,
                threads: int = 1) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    model_sec = parser["model"] if parser.has_section("model") else None
    model = ModelParams(
        delta_c=_get(model_sec, "delta_c", float, 1.0),
        delta_q=_get(model_sec, "delta_q", float, 1.0),
        g=_get(model_sec, "g", float, 0.3),
        omega=_get(model_sec, "omega", float, 0.0),
        kerr=_get(model_sec, "kerr", float, 0.0),
        m_trunc=_get(model_sec, "m_trunc", int, 60),
    )
    diss_sec = parser["dissipation"] if parser.has_section("dissipation") else None
    dissipation = Dissipation(
        gamma_a=_get(diss_sec, "gamma_a", float, 0.01),
        gamma_sigma=_get(diss_sec, "gamma_sigma", float, 0.01),
        nbar=_get(diss_sec, "nbar", float, 0.0),
        level_cutoff=_get(diss_sec, "level_cutoff", int, 40),
    )
    cfg = ExperimentConfig(mode=mode, out_dir=out_dir, model=model,
                           dissipation=dissipation, threads=max(1, threads))

    if mode == "sweep":
        sec = parser["sweep"] if parser.has_section("sweep") else None
        cfg.g_range = (_get(sec, "g_min", float, 0.0), _get(sec, "g_max", float, 0.5),
                       _get(sec, "g_points", int, 50))
        cfg.omega_range = (_get(sec, "omega_min", float, 0.0),
                           _get(sec, "omega_max", float, 0.6),
                           _get(sec, "omega_points", int, 50))
        cfg.wigner_points = _get(sec, "wigner_points", int, 100)
        cfg.wigner_extent = _get(sec, "wigner_extent", float, 5.0)
        if cfg.g_range[2] < 1 or cfg.omega_range[2] < 1:
            raise ConfigError("point counts must be >= 1")
    elif mode == "dynamics":
        sec = parser["dynamics"] if parser.has_section("dynamics") else None
        cfg.scan_omegas = _get(sec, "omegas", _floats, (0.0, 0.2, 0.4))
        cfg.scan_states = _get(sec, "initial_states", _strings,
                               ("ground", "coherent_down"))
        if not cfg.scan_omegas:
            raise ConfigError("dynamics scan needs at least one omega")
    elif mode == "train":
        sec = parser["train"] if parser.has_section("train") else None
        if sec is None:
            raise ConfigError("train mode requires a [train] section")
        cfg.n_seeds = _get(sec, "n_seeds", int, 20)
        cfg.base_seed = _get(sec, "base_seed", int, None if seed_override is None else 0)
        if seed_override is not None:
            cfg.base_seed = seed_override
        cfg.min_success = _get(sec, "min_success", int, 15)
        cfg.train = TrainConfig(
            params=model,
            omega_max=_get(sec, "omega_max", float, 0.3),
            initial_state=_get(sec, "initial_state", str, "ground"),
            dissipation=dissipation,
            epochs=_get(sec, "epochs", int, 100),
            greedy_eval_margin=_get(sec, "greedy_eval_margin", int, 10),
            seed=cfg.base_seed,
        )
        if cfg.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
    elif mode == "replay":
        sec = parser["replay"] if parser.has_section("replay") else None
        cfg.sequence_file = _get(sec, "sequence_file", str, None)
        cfg.replay_state = _get(sec, "initial_state", str, "ground")
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    return cfg


# ---------------------------------------------------------------------------
# sweep

SWEEP_HEADER = "g,omega,gap,kl,e_t,g2,s_w,converged"


def _sweep_cell(args):
    g, omega, model, wigner_points, wigner_extent = args
    params = dataclasses.replace(model, g=g, omega=omega)
    try:
        spectrum = eigendecompose(build_hamiltonian(params))
        gap = float(spectrum.energies[1] - spectrum.energies[0])
        kl = kl_convergence(params, 1)
        v0 = spectrum.states[:, 0]
        rho = np.outer(v0, v0.conj())
        e_t = entanglement_witness(rho)
        a, a_dag, _ = cavity_ops(params.m_trunc)
        dressed = dressed_operator(spectrum, embed_cavity(a + a_dag))
        try:
            g2 = second_order_correlation(rho, dressed)
        except ZeroPopulation:
            # exact eigenstates carry no dressed excitation; g2 is undefined
            g2 = float("nan")
        grid = wigner(reduced_state(rho, "cavity"),
                      -wigner_extent, wigner_extent, -wigner_extent, wigner_extent,
                      wigner_points, wigner_points)
        s_w = wigner_negativity_average(grid)
        converged = kl <= KL_CONVERGED_MAX
        return (g, omega, gap, kl, e_t, g2, s_w, converged, True)
    except (np.linalg.LinAlgError, ArithmeticError):
        nan = float("nan")
        return (g, omega, nan, nan, nan, nan, nan, False, False)


def run_sweep(config: ExperimentConfig) -> int:
    g_lo, g_hi, g_n = config.g_range
    o_lo, o_hi, o_n = config.omega_range
    gs = np.linspace(g_lo, g_hi, g_n) if g_n > 1 else np.array([g_lo])
    omegas = np.linspace(o_lo, o_hi, o_n) if o_n > 1 else np.array([o_lo])
    tasks = [(float(g), float(om), config.model, config.wigner_points, config.wigner_extent)
             for g in gs for om in omegas]
    if config.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_sweep_cell, tasks, chunksize=4))
    else:
        results = [_sweep_cell(t) for t in tasks]
    rows = [r[:8] for r in results]
    ok = all(r[8] for r in results)
    _write_csv(os.path.join(config.out_dir, "sweep.csv"), SWEEP_HEADER, rows, config)
    return EXIT_OK if ok else EXIT_PARTIAL


# ---------------------------------------------------------------------------
# dynamics scan

DYNAMICS_HEADER = "initial_state,omega,time,E_T," + ",".join(OBSERVATION_LABELS)


def run_dynamics_scan(config: ExperimentConfig) -> int:
    rows = []
    ok = True
    for state_kind in config.scan_states:
        for omega in config.scan_omegas:
            params = dataclasses.replace(config.model, omega=omega)
            try:
                pulse = PulseSequence.from_actions([2] * 30, omega_max=omega)
                rho0 = initial_state_density(state_kind, params)
                traj = propagate(rho0, pulse, params, config.dissipation)
            except (TprabiError, ValueError) as err:
                print(f"dynamics row failed for {state_kind}, omega={omega}: {err}",
                      file=sys.stderr)
                ok = False
                continue
            for i in range(len(traj.times)):
                rows.append((state_kind, omega, float(traj.times[i]), float(traj.et[i]),
                             *map(float, traj.observations[i])))
    _write_csv(os.path.join(config.out_dir, "dynamics.csv"), DYNAMICS_HEADER, rows, config)
    return EXIT_OK if ok else EXIT_PARTIAL


# ---------------------------------------------------------------------------
# training campaign

CAMPAIGN_HEADER = "time,mean,std,baseline_mean,n_seeds"


def _campaign_worker(args):
    train_cfg, out_dir = args
    try:
        result = train_round(train_cfg)
        replayed = replay_best(result.best_pulse, train_cfg)
        write_training_log(result, os.path.join(out_dir, f"seed_{train_cfg.seed}.jsonl"))
        write_best_sequence(result, os.path.join(out_dir, f"seed_{train_cfg.seed}_best.txt"))
        margin = train_cfg.greedy_eval_margin
        freq = [float("nan"), float("nan")]
        if margin > 0 and result.greedy_actions:
            first = [a for ep, acts in result.greedy_actions.items()
                     if ep < margin for a in acts]
            last = [a for ep, acts in result.greedy_actions.items()
                    if ep >= train_cfg.epochs - margin for a in acts]
            if first and last:
                freq = [first.count(0) / len(first), last.count(0) / len(last)]
        return (train_cfg.seed, True, "", replayed.et, freq)
    except TprabiError as err:
        return (train_cfg.seed, False, str(err), None, None)


def run_training_campaign(config: ExperimentConfig) -> int:
    base = config.train
    seeds = [config.base_seed + i for i in range(config.n_seeds)]
    tasks = [(dataclasses.replace(base, seed=s), config.out_dir) for s in seeds]
    if config.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_campaign_worker, tasks))
    else:
        results = [_campaign_worker(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    good = [r for r in results if r[1]]
    failed = [r for r in results if not r[1]]
    for seed, _, msg, _, _ in failed:
        print(f"seed {seed} failed: {msg}", file=sys.stderr)

    baseline = propagate(
        initial_state_density(base.initial_state, base.static_params(),
                              base.coherent_alpha),
        base.pulse_from_actions([0] * base.n_segments),
        base.static_params(), base.dissipation,
    )

    if len(good) >= config.min_success:
        curves = np.stack([r[3] for r in good])
        mean = curves.mean(axis=0)
        std = curves.std(axis=0, ddof=1) if len(good) > 1 else np.zeros_like(mean)
        rows = [(float(baseline.times[i]), float(mean[i]), float(std[i]),
                 float(baseline.et[i]), len(good)) for i in range(len(mean))]
        _write_csv(os.path.join(config.out_dir, "campaign.csv"), CAMPAIGN_HEADER,
                   rows, config)
        freq_rows = [(r[0], float(r[4][0]), float(r[4][1])) for r in good]
        _write_csv(os.path.join(config.out_dir, "action0_frequency.csv"),
                   "seed,first_epochs,last_epochs", freq_rows, config)
    else:
        print(f"only {len(good)} seeds succeeded (< {config.min_success}); "
              "no aggregate written", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK if not failed else EXIT_PARTIAL


# ---------------------------------------------------------------------------
# replay

def run_replay(config: ExperimentConfig) -> int:
    actions, omega_max = read_best_sequence(config.sequence_file)
    train_cfg = TrainConfig(params=config.model, omega_max=omega_max,
                            initial_state=config.replay_state,
                            dissipation=config.dissipation,
                            n_segments=len(actions))
    traj = replay_best(train_cfg.pulse_from_actions(actions), train_cfg)
    out = os.path.join(config.out_dir, "replay.csv")
    write_trajectory_csv(traj, out,
                         comment=f"tprabi {__version__} mode=replay config_hash={config.hash()}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tprabi", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("sweep", "dynamics", "train", "replay"):
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, args.mode, args.out,
                             seed_override=args.seed, threads=args.threads)
    except (ConfigError, KeyError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(config.out_dir, exist_ok=True)
    try:
        if args.mode == "sweep":
            return run_sweep(config)
        if args.mode == "dynamics":
            return run_dynamics_scan(config)
        if args.mode == "train":
            return run_training_campaign(config)
        return run_replay(config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (TprabiError, OSError) as err:
        print(f"run failed: {err}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
