"""Command-line front end.

Subcommands:
    train        fit an RBM with one-step contrastive divergence, save it
    sample       run one sampler chain, save the sample dump
    test         Crossmatch test between two sample dumps
    sweep-params EPEff comparison across digital sampler presets/configs
    sweep-leak   EPEff/fidelity sweep over leak densities
    null-check   self-vs-self calibration of the test pipeline

All randomness hangs off the required --seed flag; repeated invocations with
the same inputs are byte-identical. Commands read an optional JSON run
config (--config); unknown keys anywhere in it are rejected. Long-running
commands announce a {"event": "start", ...} line on stderr before the main
loop; failures print one {"error": ..., "message": ...} JSON line on stderr
and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .formats import (ModelFormatError, load_idx_images, load_model, load_samples,
                      save_model, save_samples, synth_dataset)
from .harness import (HISTOGRAM_EDGES, EnergyModel, SamplerSpec, TrialPlan,
                      leak_density_sweep, parameter_sweep, run_trials)
from .neuro import (PRESET_CONFIGS, AnalogConfig, DigitalSamplerConfig,
                    run_analog_chain, run_digital_chain)
from .rbm import (ChainSettings, RbmModel, SampleBatch, TrainConfig, cd1_train,
                  random_model, run_chain)
from .reports import (histogram_csv, outcome_json, stats_json, svg_bar_chart,
                      svg_line_chart, sweep_csv)
from .rng import derive_rng

__all__ = ["main", "load_run_config", "ConfigError"]


class ConfigError(ValueError):
    """A run config failed schema validation."""


_ROOT_KEYS = {"model", "data", "chain", "sampler_a", "sampler_b", "trials",
              "energy", "sweep", "out_dir"}
_MODEL_KEYS = {
    "random": {"kind", "n_visible", "n_hidden", "sigma"},
    "file": {"kind", "path"},
    "train": {"kind", "n_hidden", "epochs", "learning_rate", "batch_size", "init_sigma"},
}
_DATA_KEYS = {
    "synth": {"kind", "dataset", "r", "count", "noise"},
    "idx": {"kind", "path", "threshold"},
}
_CHAIN_KEYS = {"burn_in", "thin", "init"}
_SAMPLER_KEYS = {
    "ideal": {"kind"},
    "digital": {"kind", "window", "threshold", "threshold_bits", "leak", "scale",
                "leak_density", "random_groups"},
    "analog": {"kind", "capacitance", "g_leak", "threshold", "v_reset", "noise_sigma",
               "dt", "window", "noise_density"},
    "bernoulli": {"kind", "rate", "n_bits"},
}
_TRIALS_KEYS = {"num_trials", "n_per_trial", "matching"}
_ENERGY_KEYS = {"e_active", "e_core_static", "core_size"}
_SWEEP_KEYS = {"configs", "densities"}
_SWEEP_CONFIG_KEYS = {"label", "window", "threshold", "threshold_bits", "leak",
                      "scale", "leak_density"}

DEFAULT_DENSITIES = (2, 5, 10, 50, 100, 200, 255)


def _default_config() -> dict:
    return {
        "model": {"kind": "random", "n_visible": 16, "n_hidden": 8, "sigma": 0.4},
        "data": {"kind": "synth", "dataset": "two-cluster", "r": 16, "count": 512,
                 "noise": 0.1},
        "chain": {"burn_in": 1000, "thin": 10, "init": "random-uniform"},
        "sampler_a": {"kind": "ideal"},
        "sampler_b": {"kind": "ideal"},
        "trials": {"num_trials": 2000, "n_per_trial": 50, "matching": "auto"},
        "energy": {"e_active": 1.0, "e_core_static": 10.0, "core_size": 256},
        "sweep": {},
        "out_dir": ".",
    }


def _check_keys(obj, allowed, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _check_kinded(obj, tables, where: str) -> str:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where} must be an object with a 'kind' key")
    kind = obj["kind"]
    if kind not in tables:
        raise ConfigError(f"{where}.kind must be one of {sorted(tables)}, got {kind!r}")
    _check_keys(obj, tables[kind], where)
    return kind


def validate_run_config(user: dict) -> None:
    _check_keys(user, _ROOT_KEYS, "config")
    if "model" in user:
        _check_kinded(user["model"], _MODEL_KEYS, "model")
    if "data" in user:
        _check_kinded(user["data"], _DATA_KEYS, "data")
    if "chain" in user:
        _check_keys(user["chain"], _CHAIN_KEYS, "chain")
    for side in ("sampler_a", "sampler_b"):
        if side in user:
            _check_kinded(user[side], _SAMPLER_KEYS, side)
    if "trials" in user:
        _check_keys(user["trials"], _TRIALS_KEYS, "trials")
    if "energy" in user:
        _check_keys(user["energy"], _ENERGY_KEYS, "energy")
    if "sweep" in user:
        _check_keys(user["sweep"], _SWEEP_KEYS, "sweep")
        for i, entry in enumerate(user["sweep"].get("configs", [])):
            _check_keys(entry, _SWEEP_CONFIG_KEYS, f"sweep.configs[{i}]")
    if "out_dir" in user and not isinstance(user["out_dir"], str):
        raise ConfigError("out_dir must be a string")


def load_run_config(path) -> dict:
    """Parse, validate, and fill in defaults for a run config file."""
    cfg = _default_config()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        validate_run_config(user)
        for key, value in user.items():
            if isinstance(value, dict) and "kind" not in value:
                cfg[key].update(value)
            else:
                cfg[key] = value
    return cfg


def _model_from_config(cfg: dict, seed: int) -> RbmModel:
    spec = cfg["model"]
    if spec["kind"] == "random":
        return random_model(spec["n_visible"], spec["n_hidden"], spec["sigma"], seed)
    if spec["kind"] == "file":
        return load_model(spec["path"])
    if spec["kind"] == "train":
        data = _dataset_from_config(cfg, seed)
        hyper = TrainConfig(epochs=spec.get("epochs", 20),
                            learning_rate=spec.get("learning_rate", 0.1),
                            batch_size=spec.get("batch_size", 32),
                            init_sigma=spec.get("init_sigma", 0.01))
        return cd1_train(data, data.shape[1], spec["n_hidden"], hyper, seed)
    raise ConfigError(f"model kind {spec['kind']!r} not usable here")


def _dataset_from_config(cfg: dict, seed: int) -> np.ndarray:
    spec = cfg["data"]
    if spec["kind"] == "synth":
        return synth_dataset(spec["dataset"], spec["r"], spec["count"],
                             spec["noise"], seed)
    return load_idx_images(spec["path"], spec.get("threshold", 0.5))


def _settings_from_config(cfg: dict, n_samples: int) -> ChainSettings:
    chain = cfg["chain"]
    return ChainSettings(n_samples=n_samples, burn_in=chain["burn_in"],
                         thin=chain["thin"], init=chain["init"])


def _digital_from(spec: dict) -> DigitalSamplerConfig:
    return DigitalSamplerConfig(
        window=spec["window"], threshold=spec["threshold"],
        threshold_bits=spec["threshold_bits"], leak=spec["leak"], scale=spec["scale"],
        leak_density=spec.get("leak_density", 1),
        random_groups=spec.get("random_groups", False))


def _analog_from(spec: dict) -> AnalogConfig:
    fields = {k: v for k, v in spec.items() if k != "kind"}
    return AnalogConfig(**fields)


def _sampler_from_config(spec: dict, model: RbmModel,
                         settings: ChainSettings) -> SamplerSpec:
    kind = spec["kind"]
    if kind == "ideal":
        return SamplerSpec.ideal(model, settings)
    if kind == "digital":
        return SamplerSpec.digital(model, settings, _digital_from(spec))
    if kind == "analog":
        return SamplerSpec.analog(model, settings, _analog_from(spec))
    return SamplerSpec.bernoulli(spec["rate"], spec["n_bits"])


def _energy_from_config(cfg: dict) -> EnergyModel:
    e = cfg["energy"]
    return EnergyModel(e_active=e["e_active"], e_core_static=e["e_core_static"],
                       core_size=e["core_size"])


def _trial_fields(cfg: dict, args) -> tuple[int, int, str]:
    t = cfg["trials"]
    num_trials = getattr(args, "trials", None)
    n_per_trial = getattr(args, "n_per_trial", None)
    matching = getattr(args, "matching", None)
    return (num_trials if num_trials is not None else t["num_trials"],
            n_per_trial if n_per_trial is not None else t["n_per_trial"],
            matching if matching is not None else t["matching"])


def _out_dir(cfg: dict, args) -> Path:
    out = Path(args.out) if args.out is not None else Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _announce(command: str, **fields) -> None:
    print(json.dumps({"event": "start", "command": command, **fields}),
          file=sys.stderr, flush=True)


def _emit(path: Path, text: str) -> None:
    path.write_bytes(text.encode("ascii"))
    print(str(path))


# --- subcommands ------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if cfg["model"]["kind"] != "train":
        cfg["model"] = {"kind": "train", "n_hidden": 8}
    out = _out_dir(cfg, args)
    data = _dataset_from_config(cfg, args.seed)
    spec = cfg["model"]
    hyper = TrainConfig(epochs=spec.get("epochs", 20),
                        learning_rate=spec.get("learning_rate", 0.1),
                        batch_size=spec.get("batch_size", 32),
                        init_sigma=spec.get("init_sigma", 0.01))
    model, history = cd1_train(data, data.shape[1], spec["n_hidden"], hyper,
                               args.seed, return_history=True)
    path = out / "model.txt"
    save_model(model, path)
    print(json.dumps({"model": str(path), "epochs": hyper.epochs,
                      "final_reconstruction_error": history[-1]}, indent=2))
    return 0


def cmd_sample(args) -> int:
    cfg = load_run_config(args.config)
    out = _out_dir(cfg, args)
    _, n_per_trial, _ = _trial_fields(cfg, args)
    spec = cfg["sampler_a"]
    settings = _settings_from_config(cfg, n_per_trial)
    if spec["kind"] == "bernoulli":
        bits = (derive_rng(args.seed, 0xBE).random((n_per_trial, spec["n_bits"]))
                < spec["rate"]).astype(np.uint8)
        batch = SampleBatch(samples=bits,
                            sampler_id=f"bernoulli(rate={spec['rate']:g},bits={spec['n_bits']})",
                            seed=args.seed, settings=settings)
    else:
        model = _model_from_config(cfg, args.seed)
        if spec["kind"] == "ideal":
            batch = run_chain(model, settings, args.seed)
        elif spec["kind"] == "digital":
            batch = run_digital_chain(model, settings, _digital_from(spec), args.seed)
        else:
            batch = run_analog_chain(model, settings, _analog_from(spec), args.seed)
    path = out / "samples.txt"
    save_samples(batch, path)
    print(str(path))
    return 0


def cmd_test(args) -> int:
    from .crossmatch import crossmatch_test
    x = load_samples(args.samples_a)
    y = load_samples(args.samples_b)
    method = args.matching if args.matching is not None else "auto"
    outcome = crossmatch_test(x, y, method=method, tie_seed=args.seed)
    doc = outcome_json(outcome)
    sys.stdout.write(doc)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "outcome.json").write_bytes(doc.encode("ascii"))
    return 0


def _sweep_configs(cfg: dict) -> list[tuple[str, DigitalSamplerConfig]]:
    entries = cfg["sweep"].get("configs")
    if not entries:
        return list(PRESET_CONFIGS)
    return [(e["label"], _digital_from(e)) for e in entries]


def cmd_sweep_params(args) -> int:
    cfg = load_run_config(args.config)
    out = _out_dir(cfg, args)
    num_trials, n_per_trial, matching = _trial_fields(cfg, args)
    model = _model_from_config(cfg, args.seed)
    settings = _settings_from_config(cfg, n_per_trial)
    configs = _sweep_configs(cfg)
    _announce("sweep-params", num_configs=len(configs), num_trials=num_trials,
              n_per_trial=n_per_trial)
    reports = parameter_sweep(model, configs, settings, n_per_trial=n_per_trial,
                              num_trials=num_trials, base_seed=args.seed,
                              energy_model=_energy_from_config(cfg), matching=matching)
    _emit(out / "sweep_params.csv", sweep_csv(reports))
    _emit(out / "epeff_bars.svg",
          svg_bar_chart([r.label for r in reports], [r.epeff for r in reports],
                        "Energy Performance Efficiency by sampler config", "EPEff"))
    return 0


def cmd_sweep_leak(args) -> int:
    cfg = load_run_config(args.config)
    out = _out_dir(cfg, args)
    num_trials, n_per_trial, matching = _trial_fields(cfg, args)
    model = _model_from_config(cfg, args.seed)
    settings = _settings_from_config(cfg, n_per_trial)
    densities = cfg["sweep"].get("densities") or list(DEFAULT_DENSITIES)
    if cfg["sampler_b"]["kind"] == "digital":
        base = _digital_from(cfg["sampler_b"])
    else:
        base = dict(PRESET_CONFIGS)["G2"]
    _announce("sweep-leak", densities=list(densities), num_trials=num_trials,
              n_per_trial=n_per_trial)
    reports = leak_density_sweep(model, base, densities, settings,
                                 n_per_trial=n_per_trial, num_trials=num_trials,
                                 base_seed=args.seed,
                                 energy_model=_energy_from_config(cfg), matching=matching)
    labels = [str(d) for d in densities]
    _emit(out / "sweep_leak.csv", sweep_csv(reports))
    _emit(out / "leak_mean_p.svg",
          svg_line_chart(labels, {"mean p": [r.mean_p for r in reports]},
                         "Fidelity vs leak density", "leak density", "mean p-value"))
    _emit(out / "leak_epeff.svg",
          svg_line_chart(labels, {"EPEff": [r.epeff for r in reports]},
                         "EPEff vs leak density", "leak density", "EPEff"))
    return 0


def cmd_null_check(args) -> int:
    cfg = load_run_config(args.config)
    out = _out_dir(cfg, args)
    num_trials, n_per_trial, matching = _trial_fields(cfg, args)
    model = _model_from_config(cfg, args.seed)
    settings = _settings_from_config(cfg, n_per_trial)
    spec = _sampler_from_config(cfg["sampler_a"], model, settings)
    plan = TrialPlan(sampler_a=spec, sampler_b=spec, n_per_trial=n_per_trial,
                     num_trials=num_trials, base_seed=args.seed, matching=matching)
    _announce("null-check", num_trials=num_trials, n_per_trial=n_per_trial,
              sampler=spec.label())
    stats = run_trials(plan)
    doc = stats_json(stats, {"sampler": spec.label(), "n_per_trial": n_per_trial})
    sys.stdout.write(doc)
    _emit(out / "null_check.csv", histogram_csv(stats, HISTOGRAM_EDGES))
    (out / "null_check.json").write_bytes(doc.encode("ascii"))
    return 0


# --- argument parsing --------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, config=True, out=True, trials=True,
                matching=True) -> None:
    p.add_argument("--seed", type=int, required=True,
                   help="master seed; controls every random draw")
    if config:
        p.add_argument("--config", metavar="PATH", help="JSON run config")
    if out:
        p.add_argument("--out", metavar="DIR", help="output directory")
    if trials:
        p.add_argument("--trials", type=int, metavar="N", help="number of trials")
        p.add_argument("--n-per-trial", type=int, metavar="N",
                       help="samples per group per trial")
    if matching:
        p.add_argument("--matching", choices=["optimal", "greedy"],
                       help="matching method (default: optimal up to 400 pooled points)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsmatch",
        description="Crossmatch fidelity testing and EPEff tuning for RBM Gibbs samplers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit an RBM with CD-1 and save it")
    _add_common(p, trials=False, matching=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="run one sampler chain and dump samples")
    _add_common(p, matching=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("test", help="Crossmatch test between two sample dumps")
    p.add_argument("samples_a", help="first sample dump")
    p.add_argument("samples_b", help="second sample dump")
    _add_common(p, config=False, trials=False)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("sweep-params", help="EPEff sweep across sampler configs")
    _add_common(p)
    p.set_defaults(func=cmd_sweep_params)

    p = sub.add_parser("sweep-leak", help="EPEff/fidelity sweep over leak densities")
    _add_common(p)
    p.set_defaults(func=cmd_sweep_leak)

    p = sub.add_parser("null-check", help="self-vs-self calibration report")
    _add_common(p)
    p.set_defaults(func=cmd_null_check)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelFormatError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
