"""``boltzbench`` command line.

Every subcommand reads its inputs from files, writes fixed-name artifacts into
``--out`` and draws all randomness from ``--seed``, split into independent
per-stage streams. Exit status: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields
from pathlib import Path

from .device import (
    NEUTRAL_KNOBS,
    AnnealSchedule,
    DeviceEmulator,
    DeviceProfile,
    load_profile,
    load_schedule,
    with_overrides,
)
from .diagnostics import (
    RetrofitResult,
    SupportError,
    coverage_report,
    distribution_distance,
    empirical_distribution,
    energy_conflicts,
    energy_reconstruction,
    format_table,
    retrofit_alpha,
    save_report,
    save_scan,
)
from .embedding import (
    Embedding,
    EmbeddingError,
    HardwareGraph,
    chimera_graph,
    find_embedding,
    load_embedding,
    parse_edge_list,
    save_embedding,
    unembed,
    validate_embedding,
)
from .ising import DistributionTable, IsingModel, exact_distribution, load_problem, random_model, save_problem
from .rng import stage_rng, stage_seed
from .samplers import SamplerConfig, Sampleset, exact_sample, gibbs_sample, load_sampleset, save_sampleset

PROFILE_ENV = "BOLTZBENCH_PROFILE"

PROBLEM_FILE = "problem.json"
SAMPLESET_FILE = "sampleset.csv"
HARDWARE_SAMPLESET_FILE = "hardware_sampleset.csv"
EMBEDDING_FILE = "embedding.txt"
REPORT_FILE = "report.txt"
SCAN_FILE = "scan.csv"
TABLE_FILE = "table.csv"


def persist(obj, path) -> None:
    """Write any artifact in its owning module's text format."""
    path = Path(path)
    try:
        if isinstance(obj, Sampleset):
            save_sampleset(obj, path)
        elif isinstance(obj, RetrofitResult):
            save_scan(obj, path)
        elif isinstance(obj, DistributionTable):
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(format_table(obj))
        elif isinstance(obj, IsingModel):
            save_problem(obj, path)
        elif isinstance(obj, Embedding):
            save_embedding(obj, path)
        elif isinstance(obj, dict):
            save_report(obj, path)
        else:
            raise TypeError(f"don't know how to persist {type(obj).__name__}")
    except OSError as exc:
        if str(path) in str(exc):
            raise
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _hardware(desc: str) -> HardwareGraph:
    if desc.startswith("chimera:"):
        return chimera_graph(int(desc.split(":", 1)[1]))
    path = Path(desc)
    try:
        return parse_edge_list(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read hardware graph {path}: {exc.strerror}") from exc


def _profile(args) -> DeviceProfile:
    path = args.profile or os.environ.get(PROFILE_ENV)
    profile = load_profile(path) if path else DeviceProfile()
    if args.noise == "off":
        profile = with_overrides(profile, **NEUTRAL_KNOBS)
    knobs = {f.name: getattr(args, f.name) for f in fields(DeviceProfile) if f.name not in ("h_range", "J_range")}
    return with_overrides(profile, **knobs)


def _schedule(args) -> AnnealSchedule:
    sched = load_schedule(args.schedule) if args.schedule else AnnealSchedule()
    d = sched.to_dict()
    for key in ("t_f", "pause_s", "pause_duration"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    return AnnealSchedule.from_dict(d)


def _embedding(args, model: IsingModel, hardware: HardwareGraph) -> Embedding:
    gamma = args.chain_strength
    if args.embedding == "auto":
        return find_embedding(model, hardware, seed=stage_seed(args.seed, "embedding"), chain_strength=gamma or 1.0)
    return load_embedding(args.embedding, gamma)


def cmd_gen(args) -> None:
    rng = stage_rng(args.seed, "gen")
    model = random_model(args.spins, args.density, tuple(args.h_range), tuple(args.j_range), rng)
    persist(model, Path(args.out) / PROBLEM_FILE)


def cmd_sample(args) -> None:
    if args.reads < 1:
        raise ValueError("--reads must be >= 1")
    out = Path(args.out)
    model = load_problem(args.problem)
    report: dict = {"sampler": args.sampler, "reads": args.reads, "seed": args.seed}
    if args.sampler == "gibbs":
        config = SamplerConfig(stage_seed(args.seed, "sampling"), args.reads, args.sweeps, args.burn_in)
        ss = gibbs_sample(model, args.beta, config)
        report["beta"] = float(args.beta)
    elif args.sampler == "exact":
        ss = exact_sample(exact_distribution(model, args.beta), args.reads, stage_seed(args.seed, "exact"))
        report["beta"] = float(args.beta)
    else:
        profile, schedule = _profile(args), _schedule(args)
        if args.reads > profile.max_reads:
            # checked before any embedding work so the error is immediate
            raise ValueError(f"sampleset cap exceeded: {args.reads} reads > max_reads={profile.max_reads}")
        hardware = emb = None
        if args.embedding != "none":
            hardware = _hardware(args.hardware)
            emb = _embedding(args, model, hardware)
        dev = DeviceEmulator(profile, hardware, args.sweeps, args.burn_in)
        ss = dev.sample(model, schedule, args.reads, args.seed, emb)
        report["alpha"] = float(dev.last_alpha)
        report["scale"] = float(dev.last_scale)
        if emb is not None:
            persist(emb, out / EMBEDDING_FILE)
            persist(ss, out / HARDWARE_SAMPLESET_FILE)
            ss, frac = unembed(ss, emb, model, args.policy, stage_seed(args.seed, "unembed"))
            report["break_fraction"] = frac
            report["max_chain_length"] = emb.max_chain_length()
    persist(ss, out / SAMPLESET_FILE)
    persist(report, out / REPORT_FILE)


def cmd_embed(args) -> None:
    model = load_problem(args.problem)
    hardware = _hardware(args.hardware)
    emb = find_embedding(
        model, hardware, seed=stage_seed(args.seed, "embedding"), chain_strength=args.chain_strength, max_restarts=args.restarts
    )
    persist(emb, Path(args.out) / EMBEDDING_FILE)
    persist(
        {"variables": emb.num_variables, "qubits": len(emb.qubits()), "max_chain_length": emb.max_chain_length()},
        Path(args.out) / REPORT_FILE,
    )


def cmd_unembed(args) -> None:
    model = load_problem(args.problem)
    emb = load_embedding(args.embedding, args.chain_strength)
    ss, frac = unembed(load_sampleset(args.sampleset), emb, model, args.policy, stage_seed(args.seed, "unembed"))
    persist(ss, Path(args.out) / SAMPLESET_FILE)
    persist({"policy": args.policy, "break_fraction": frac, "reads_kept": ss.total_reads}, Path(args.out) / REPORT_FILE)


def cmd_validate(args) -> None:
    model = load_problem(args.problem)
    emb = load_embedding(args.embedding)
    problems = validate_embedding(emb, _hardware(args.hardware), model)
    report = {"valid": "no" if problems else "yes", "violations": len(problems)}
    for i, text in enumerate(problems):
        report[f"violation_{i}"] = text
    persist(report, Path(args.out) / REPORT_FILE)
    if problems:
        raise ValueError(f"invalid embedding: {problems[0]}")


def _kl_or_none(p, q):
    try:
        return distribution_distance(p, q, "kl")
    except SupportError:
        return None


def cmd_diagnose(args) -> None:
    model = load_problem(args.problem)
    ss = load_sampleset(args.sampleset)
    oracle = exact_distribution(model, args.beta)
    emp = empirical_distribution(ss)
    cov = coverage_report(ss, model, args.beta)
    report = dict(cov.as_dict())
    report["beta"] = float(args.beta)
    report["tv"] = distribution_distance(emp, oracle, "tv")
    report["kl"] = _kl_or_none(emp, oracle)
    report["tv_reconstruction"] = distribution_distance(energy_reconstruction(ss, args.beta), oracle, "tv")
    report["energy_conflict"] = energy_conflicts(ss)
    persist(report, Path(args.out) / REPORT_FILE)


def cmd_retrofit(args) -> None:
    model = load_problem(args.problem)
    ss = load_sampleset(args.sampleset)
    result = retrofit_alpha(ss, model, args.metric, tuple(args.interval))
    persist(result, Path(args.out) / SCAN_FILE)
    persist(
        {"metric": args.metric, "alpha": result.alpha, "distance": result.distance, "evaluations": len(result.scan)},
        Path(args.out) / REPORT_FILE,
    )


def cmd_reconstruct(args) -> None:
    ss = load_sampleset(args.sampleset)
    table = energy_reconstruction(ss, args.beta)
    persist(table, Path(args.out) / TABLE_FILE)
    report = {"beta": float(args.beta), "states": len(table), "energy_conflict": energy_conflicts(ss)}
    if args.problem:
        oracle = exact_distribution(load_problem(args.problem), args.beta)
        report["tv_reconstruction"] = distribution_distance(table, oracle, "tv")
        report["tv_empirical"] = distribution_distance(empirical_distribution(ss), oracle, "tv")
        report["discovered_mass"] = coverage_report(ss, load_problem(args.problem), args.beta).discovered_mass
    persist(report, Path(args.out) / REPORT_FILE)


def cmd_compare(args) -> None:
    a = empirical_distribution(load_sampleset(args.first))
    b = empirical_distribution(load_sampleset(args.second))
    report = {"tv": distribution_distance(a, b, "tv"), "kl": _kl_or_none(a, b)}
    persist(report, Path(args.out) / REPORT_FILE)


def _add_device_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("device")
    g.add_argument("--profile", help=f"profile JSON (default: ${PROFILE_ENV}, else built-in)")
    g.add_argument("--schedule", help="schedule JSON")
    g.add_argument("--noise", choices=["on", "off"], default="on", help="'off' neutralizes every imperfection")
    for f in fields(DeviceProfile):
        if f.name in ("h_range", "J_range"):
            continue
        kind = int if f.name == "max_reads" else float
        g.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind)
    g.add_argument("--t-f", dest="t_f", type=float)
    g.add_argument("--pause-s", dest="pause_s", type=float)
    g.add_argument("--pause-duration", dest="pause_duration", type=float)
    g.add_argument("--embedding", default="none", help="none | auto | path to an embedding file")
    g.add_argument("--hardware", default="chimera:4", help="chimera:M or an edge-list file")
    g.add_argument("--chain-strength", type=float)
    g.add_argument("--policy", choices=["majority", "discard"], default="majority")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boltzbench", description="Boltzmann sampling benchmark harness.")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)
        return p

    p = cmd("gen", cmd_gen, "random Ising problem")
    p.add_argument("--spins", type=int, required=True)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--h-range", type=float, nargs=2, default=[-1.0, 1.0], metavar=("LO", "HI"))
    p.add_argument("--j-range", type=float, nargs=2, default=[-1.0, 1.0], metavar=("LO", "HI"))

    p = cmd("sample", cmd_sample, "draw a sampleset")
    p.add_argument("--problem", required=True)
    p.add_argument("--sampler", choices=["gibbs", "exact", "device"], default="gibbs")
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature (gibbs, exact)")
    p.add_argument("--sweeps", type=int, default=10, help="sweeps between recorded reads")
    p.add_argument("--burn-in", type=int, default=1000)
    _add_device_flags(p)

    p = cmd("embed", cmd_embed, "minor-embed a problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--hardware", default="chimera:4")
    p.add_argument("--chain-strength", type=float, default=1.0)
    p.add_argument("--restarts", type=int, default=64)

    p = cmd("unembed", cmd_unembed, "hardware reads to logical reads")
    p.add_argument("--problem", required=True)
    p.add_argument("--sampleset", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--chain-strength", type=float)
    p.add_argument("--policy", choices=["majority", "discard"], default="majority")

    p = cmd("validate", cmd_validate, "check an embedding against problem and hardware")
    p.add_argument("--problem", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--hardware", default="chimera:4")

    p = cmd("diagnose", cmd_diagnose, "coverage and distances to the exact law")
    p.add_argument("--problem", required=True)
    p.add_argument("--sampleset", required=True)
    p.add_argument("--beta", type=float, default=1.0)

    p = cmd("retrofit", cmd_retrofit, "fit the effective alpha")
    p.add_argument("--problem", required=True)
    p.add_argument("--sampleset", required=True)
    p.add_argument("--metric", choices=["tv", "kl"], default="tv")
    p.add_argument("--interval", type=float, nargs=2, default=[0.0, 4.0], metavar=("LO", "HI"))

    p = cmd("reconstruct", cmd_reconstruct, "Boltzmann law over discovered states")
    p.add_argument("--sampleset", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--problem", help="optional, to score against the exact law")

    p = cmd("compare", cmd_compare, "distance between two samplesets")
    p.add_argument("first")
    p.add_argument("second")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ValueError, OSError, TypeError, EmbeddingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
