"""Command-line experiment runner.

Exit codes: 0 success, 2 configuration error, 3 fixture mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from . import adversary, bell, verification as ver
from .adversary import HONEST, Depolarizing, DeviationModel, PauliChannel
from .angles import Angle
from .mbqc import sample_pattern
from .reports import make_report, render, write_jsonl
from .states import InvalidInput, MixedState, average_density, make_blind_state

EXIT_OK, EXIT_CONFIG, EXIT_FIXTURE = 0, 2, 3

DEFAULTS = {
    "seed": 20170101,
    "shots": 10_000,
    "p": 0.5,
    "noise": None,
    "adversary": None,
    "format": "json",
    "out": None,
    "count": 100,
    "trap_choice": "catalog",
    "full_blindness": False,
    "transcripts": None,
}
CONFIG_KEYS = set(DEFAULTS) | {"command"}


class ConfigError(Exception):
    pass


class FixtureMismatch(Exception):
    pass


def child_seeds(seed: int, k: int) -> list[int]:
    """Independent sub-seeds for the stages of a chained command."""
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def resolve_noise(noise) -> Optional[float]:
    if noise is None:
        return None
    if isinstance(noise, str) and noise.lower() == "calibrated":
        return bell.calibrate_depolarizing()
    try:
        q = float(noise)
    except (TypeError, ValueError):
        raise ConfigError(f"--noise must be a rate in [0, 1] or 'calibrated', got {noise!r}")
    if not 0 <= q <= 1:
        raise ConfigError(f"--noise must be in [0, 1], got {q}")
    return q


def resolve_model(cfg: dict) -> DeviationModel:
    """Adversary file if given, else depolarizing noise, else honest."""
    if cfg.get("adversary"):
        try:
            return adversary.load(cfg["adversary"])
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot load adversary {cfg['adversary']!r}: {exc}")
    q = cfg.get("noise_rate")
    return HONEST if q is None else Depolarizing(q)


def _model_doc(model: DeviationModel) -> dict:
    return model.to_json()


def exact_pass_probability(spec: ver.TrapSpec, model: DeviationModel) -> float:
    """Exact probability the trap parity check passes, averaged over r_trap."""
    total = 0.0
    for r_trap in (0, 1):
        pat = spec.pattern(r_trap)
        dist = adversary.deviated_distribution(pat, model)
        m = np.arange(16) ^ pat.r_mask
        ok = (np.bitwise_count(m & spec.support_mask) & 1) == spec.expected_parity
        total += 0.5 * float(dist[ok].sum())
    return total


def sampled_pass_probability(spec: ver.TrapSpec, model: DeviationModel, shots: int, rng: np.random.Generator) -> float:
    r_trap = rng.integers(2, size=shots)
    passes = 0
    for r in (0, 1):
        k = int((r_trap == r).sum())
        if not k:
            continue
        pat = spec.pattern(r)
        raw = sample_pattern(pat, k, rng, model)
        m = raw ^ pat.r_mask
        passes += int(((np.bitwise_count(m & spec.support_mask) & 1) == spec.expected_parity).sum())
    return passes / shots


def cmd_trap_suite(cfg: dict) -> dict:
    mismatched = ver.check_fixture()
    if mismatched:
        raise FixtureMismatch(f"trap parity fixture disagrees with the oracle: {mismatched}")
    model = resolve_model(cfg)
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for spec in ver.trap_catalog():
        rows.append({
            "trap": spec.name,
            "trap_index": spec.trap_index,
            "label": spec.label,
            "thetas": [t.eighths for t in spec.thetas],
            "deltas": [d.eighths for d in spec.deltas],
            "stabilizer": spec.stabilizer.letters,
            "support": [q + 1 for q in spec.support],
            "expected_parity": spec.expected_parity,
            "pass_exact_honest": exact_pass_probability(spec, HONEST),
            "pass_exact": exact_pass_probability(spec, model),
            "pass_sampled": sampled_pass_probability(spec, model, cfg["shots"], rng),
        })
    results = {"model": _model_doc(model), "shots": cfg["shots"], "min_pass_sampled": min(r["pass_sampled"] for r in rows)}
    return make_report("trap-suite", cfg, results, rows)


def cmd_bell(cfg: dict) -> dict:
    model = resolve_model(cfg)
    exact_ideal = bell.exact_chsh()
    exact_model = bell.exact_chsh(model)
    sampled, est = bell.sampled_chsh(cfg["shots"], model, np.random.default_rng(cfg["seed"]))
    rows = [{**est[k].to_json(), "E_exact": exact_model.E[k], **bell.bell_settings()[k].to_json()} for k in bell.LABELS]
    sweep = bell.noise_sweep(np.round(np.linspace(0.0, 0.1, 11), 4))
    results = {
        "model": _model_doc(model),
        "S_exact_ideal": exact_ideal.S,
        "S_exact": exact_model.S,
        "S_sampled": sampled.S,
        "S_stderr": sampled.S_stderr,
        "experiment_S": bell.EXPERIMENT_S,
        "experiment_S_err": bell.EXPERIMENT_S_ERR,
        "noise_sweep": [{"q": q, "S": s} for q, s in sweep],
    }
    return make_report("bell", cfg, results, rows)


def cmd_verify_session(cfg: dict) -> dict:
    model = resolve_model(cfg)
    comp = bell.bell_settings()["ab"].computation()
    res = ver.run_verified_session(cfg["shots"], cfg["p"], comp, model, np.random.default_rng(cfg["seed"]),
                                   trap_choice=cfg["trap_choice"], full_blindness=cfg["full_blindness"])
    if cfg.get("transcripts"):
        write_jsonl((t.to_json() for t in res.transcripts()), cfg["transcripts"])
    results = {"model": _model_doc(model), "computation": comp.name, "report": res.report.to_json()}
    if model.is_pauli_type:
        rates = adversary.exact_error_rates(model, comp, trap_choice=cfg["trap_choice"])
        results["exact"] = {"epsilon": rates.epsilon, "t_avg": rates.t_avg,
                            "epsilon_bound_exact": ver.epsilon_bound(rates.t_avg, cfg["p"])}
    return make_report("verify-session", cfg, results, [res.report.to_json()])


def cmd_detection_table(cfg: dict) -> dict:
    computed = ver.detection_table()
    rows = []
    mismatches = []
    for cls, row in computed.items():
        ref = ver.REFERENCE_DETECTION_TABLE[cls]
        if row != ref:
            mismatches.append(str(cls))
        rows.append({
            "class": str(cls),
            **{s.letters: "pass" if ok else "detect" for s, ok in zip(ver.STABILIZERS, row.passes)},
            "undetected": row.undetected,
            "matches_table": row == ref,
        })
    undetected = sorted({str(ver.classify_pauli(p)) for p in ver.undetected_strings()})
    results = {"mismatches": mismatches, "undetected_classes": undetected, "num_undetected_strings": len(ver.undetected_strings())}
    doc = make_report("detection-table", cfg, results, rows)
    if mismatches or undetected != ["ACCA", "CCCC"]:
        raise FixtureMismatch(json.dumps(results), doc)
    return doc


def bound_sweep_case(seed: int, p: float, shots: int, trap_choice: str = "catalog") -> dict:
    """One random Pauli channel: exact rates and one sampled session."""
    rng = np.random.default_rng(seed)
    support = int(rng.integers(2, 9))
    model = PauliChannel.random(rng, support=support, identity_weight=float(rng.uniform(0.5, 0.99)))
    comp = bell.bell_settings()["ab"].computation()
    rates = adversary.exact_error_rates(model, comp, trap_choice=trap_choice)
    res = ver.run_verified_session(shots, p, comp, model, rng, trap_choice=trap_choice)
    rep = res.report
    return {
        "seed": seed,
        "channel": model.to_json()["terms"],
        "epsilon_exact": rates.epsilon,
        "t_exact": rates.t_avg,
        "exact_bound": 4 * rates.t_avg / p,
        "exact_ok": rates.epsilon <= 4 * rates.t_avg / p + 1e-12,
        "t_sampled": rep.t_avg,
        "t_upper": rep.wilson_interval[1],
        "epsilon_bound": rep.epsilon_bound,
        "epsilon_empirical": rep.empirical_epsilon,
        "sampled_ok": rep.empirical_epsilon is not None and rep.empirical_epsilon <= rep.epsilon_bound,
    }


def cmd_bound_sweep(cfg: dict) -> dict:
    seeds = child_seeds(cfg["seed"], cfg["count"])
    rows = [bound_sweep_case(s, cfg["p"], cfg["shots"], cfg["trap_choice"]) for s in seeds]
    results = {
        "count": len(rows),
        "exact_ok": sum(r["exact_ok"] for r in rows),
        "sampled_ok": sum(r["sampled_ok"] for r in rows),
        "p": cfg["p"],
    }
    return make_report("bound-sweep", cfg, results, rows)


def blindness_summary() -> dict:
    grid = [make_blind_state(Angle(k)) for k in range(8)]
    avg = average_density(grid)
    dist_avg = avg.distance(MixedState.maximally_mixed(1))
    worst = 0.0
    for delta in range(8):
        for phi in range(8):
            # given delta and phi, theta = delta - phi - pi r with r uniform
            pair = [make_blind_state(Angle(delta - phi - 4 * r)) for r in (0, 1)]
            worst = max(worst, average_density(pair).distance(MixedState.maximally_mixed(1)))
    return {"average_vs_maximally_mixed": dist_avg, "worst_conditional_on_delta": worst}


def cmd_blindness(cfg: dict) -> dict:
    return make_report("blindness", cfg, blindness_summary())


def cmd_reproduce_paper(cfg: dict) -> dict:
    s_trap, s_bell, s_bound = child_seeds(cfg["seed"], 3)
    q = bell.calibrate_depolarizing()
    noisy = {**cfg, "noise_rate": q, "adversary": None}
    trap = cmd_trap_suite({**noisy, "seed": s_trap})
    det = cmd_detection_table(cfg)
    bl = cmd_bell({**noisy, "seed": s_bell, "shots": max(cfg["shots"], 1)})
    bound = cmd_bound_sweep({**cfg, "seed": s_bound, "noise_rate": None})
    strip = lambda d: {k: d[k] for k in ("results", "rows") if k in d}
    results = {
        "calibrated_depolarizing_rate": q,
        "seeds": {"trap-suite": s_trap, "bell": s_bell, "bound-sweep": s_bound},
        "blindness": blindness_summary(),
        "trap_suite": strip(trap),
        "detection_table": strip(det),
        "bell": strip(bl),
        "bound_sweep": strip(bound),
    }
    return make_report("reproduce-paper", cfg, results)


COMMANDS = {
    "trap-suite": cmd_trap_suite,
    "bell": cmd_bell,
    "verify-session": cmd_verify_session,
    "detection-table": cmd_detection_table,
    "bound-sweep": cmd_bound_sweep,
    "blindness": cmd_blindness,
    "reproduce-paper": cmd_reproduce_paper,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blindverify", description="Verifiable blind MBQC simulator and experiment runner.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file; command-line flags override it")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--shots", type=int, help="shots per setting, or runs per session")
    ap.add_argument("--p", type=float, help="trap probability")
    ap.add_argument("--noise", help="per-qubit depolarizing rate, or 'calibrated'")
    ap.add_argument("--adversary", help="JSON deviation model file")
    ap.add_argument("--count", type=int, help="number of random channels for bound-sweep")
    ap.add_argument("--trap-choice", dest="trap_choice", choices=["catalog", "index", "stabilizer"])
    ap.add_argument("--full-blindness", dest="full_blindness", action="store_const", const=True)
    ap.add_argument("--transcripts", help="write session transcripts as JSON lines")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=["json", "csv"])
    return ap


def load_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}")
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if doc.get("command") not in (None, args.command):
            raise ConfigError(f"config is for {doc['command']!r}, not {args.command!r}")
        cfg.update({k: v for k, v in doc.items() if k != "command"})
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2 ** 64:
        raise ConfigError("seed must be a 64-bit nonnegative integer")
    if not isinstance(cfg["shots"], int) or cfg["shots"] < 1:
        raise ConfigError("shots must be a positive integer")
    if not isinstance(cfg["count"], int) or cfg["count"] < 1:
        raise ConfigError("count must be a positive integer")
    if not 0 < float(cfg["p"]) <= 1:
        raise ConfigError("p must be in (0, 1]")
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    cfg["noise_rate"] = resolve_noise(cfg["noise"])
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    doc = None
    code = EXIT_OK
    try:
        cfg = load_config(args)
        doc = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FixtureMismatch as exc:
        print(f"fixture mismatch: {exc.args[0]}", file=sys.stderr)
        doc = exc.args[1] if len(exc.args) > 1 else None
        code = EXIT_FIXTURE
    if doc is not None:
        text = render(doc, cfg["format"])
        if cfg["out"]:
            with open(cfg["out"], "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
