"""Repeated-trial orchestration: sampler pairs, p-value statistics, energy, EPEff.

A trial plan names two sample sources (side 0 and side 1). Each trial i
derives fresh per-side chain streams from (base_seed, trial, side) and a
matching tie-break seed from (base_seed, trial, 2), generates n_per_trial
samples per side, and runs the Crossmatch test. Trials are independent by
construction: results are identical whatever the batching, and adding trials
never perturbs earlier ones.

Energy is a two-coefficient linear model (active neuron-ticks plus static
core-ticks) in arbitrary units; the paper-style efficiency figure EPEff is
mean p-value per unit energy, so only rankings across configurations are
meaningful, not the absolute numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .chains import IdealKernel, run_chains
from .crossmatch import crossmatch_test
from .neuro import (AnalogConfig, AnalogKernel, DigitalKernel, DigitalSamplerConfig,
                    ResourceEstimate, _group_perms, resource_estimate)
from .rbm import ChainSettings, RbmModel
from .rng import derive_rng, seed_sequence

__all__ = [
    "SamplerSpec",
    "TrialPlan",
    "PValueStats",
    "EnergyModel",
    "EpeffReport",
    "run_trials",
    "pvalue_stats",
    "energy_estimate",
    "epeff",
    "gibbs_ticks",
    "parameter_sweep",
    "leak_density_sweep",
]

_TIE_SIDE = 2  # seed-path slot used for the matching tie-break, after sides 0/1

HISTOGRAM_EDGES = np.round(np.arange(0.0, 1.0001, 0.05), 10)


@dataclass(frozen=True)
class SamplerSpec:
    """One side of a trial plan: which sampler, on which model, how driven.

    kind "bernoulli" is a model-free product-Bernoulli(rate)^n_bits source,
    useful as a calibration/power reference.
    """

    kind: str
    model: RbmModel | None = None
    settings: ChainSettings | None = None
    digital_cfg: DigitalSamplerConfig | None = None
    analog_cfg: AnalogConfig | None = None
    rate: float | None = None
    n_bits: int | None = None

    def __post_init__(self):
        if self.kind in ("ideal", "digital", "analog"):
            if self.model is None or self.settings is None:
                raise ValueError(f"{self.kind} sampler needs a model and chain settings")
            if self.kind == "digital" and self.digital_cfg is None:
                raise ValueError("digital sampler needs a DigitalSamplerConfig")
            if self.kind == "analog" and self.analog_cfg is None:
                raise ValueError("analog sampler needs an AnalogConfig")
        elif self.kind == "bernoulli":
            if self.rate is None or self.n_bits is None:
                raise ValueError("bernoulli source needs rate and n_bits")
            if not 0.0 <= self.rate <= 1.0:
                raise ValueError(f"rate must be in [0, 1], got {self.rate}")
            if self.n_bits < 1:
                raise ValueError(f"n_bits must be >= 1, got {self.n_bits}")
        else:
            raise ValueError(f"unknown sampler kind: {self.kind!r}")

    @staticmethod
    def ideal(model: RbmModel, settings: ChainSettings) -> "SamplerSpec":
        return SamplerSpec(kind="ideal", model=model, settings=settings)

    @staticmethod
    def digital(model: RbmModel, settings: ChainSettings,
                cfg: DigitalSamplerConfig) -> "SamplerSpec":
        return SamplerSpec(kind="digital", model=model, settings=settings, digital_cfg=cfg)

    @staticmethod
    def analog(model: RbmModel, settings: ChainSettings, cfg: AnalogConfig) -> "SamplerSpec":
        return SamplerSpec(kind="analog", model=model, settings=settings, analog_cfg=cfg)

    @staticmethod
    def bernoulli(rate: float, n_bits: int) -> "SamplerSpec":
        return SamplerSpec(kind="bernoulli", rate=rate, n_bits=n_bits)

    def label(self) -> str:
        if self.kind == "ideal":
            return "ideal"
        if self.kind == "digital":
            return self.digital_cfg.label()
        if self.kind == "analog":
            return self.analog_cfg.label()
        return f"bernoulli(rate={self.rate:g},bits={self.n_bits})"


@dataclass(frozen=True)
class TrialPlan:
    sampler_a: SamplerSpec
    sampler_b: SamplerSpec
    n_per_trial: int
    num_trials: int
    base_seed: int
    matching: str = "auto"

    def __post_init__(self):
        if self.n_per_trial < 2:
            raise ValueError(f"n_per_trial must be >= 2, got {self.n_per_trial}")
        if self.num_trials < 1:
            raise ValueError(f"num_trials must be >= 1, got {self.num_trials}")
        if self.matching not in ("auto", "optimal", "greedy"):
            raise ValueError(f"unknown matching method: {self.matching!r}")


@dataclass(frozen=True)
class PValueStats:
    """Aggregate of one plan's p-values.

    histogram uses fixed bins of width 0.05 over [0, 1]. ks_vs_uniform is the
    two-sided sup distance between the empirical CDF and Uniform[0,1];
    d_plus is the one-sided excess sup(F_hat(x) - x), the quantity bounded
    by the conservative-null calibration contract.
    """

    p_values: np.ndarray
    mean_p: float
    histogram: np.ndarray
    ks_vs_uniform: float
    d_plus: float


@dataclass(frozen=True)
class EnergyModel:
    """Linear energy coefficients, arbitrary units (no published figures exist)."""

    e_active: float = 1.0
    e_core_static: float = 10.0
    core_size: int = 256

    def __post_init__(self):
        if self.e_active <= 0 or self.e_core_static <= 0:
            raise ValueError("energy coefficients must be positive")
        if self.core_size < 1:
            raise ValueError(f"core_size must be >= 1, got {self.core_size}")


@dataclass(frozen=True)
class EpeffReport:
    label: str
    mean_p: float
    energy: float
    epeff: float
    resources: ResourceEstimate

    def __post_init__(self):
        if abs(self.epeff * self.energy - self.mean_p) > 1e-12:
            raise ValueError("epeff must equal mean_p / energy")


def pvalue_stats(p_values) -> PValueStats:
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        raise ValueError("no p-values to aggregate")
    if (p <= 0).any() or (p > 1).any():
        raise ValueError("p-values must lie in (0, 1]")
    hist, _ = np.histogram(p, bins=HISTOGRAM_EDGES)
    srt = np.sort(p)
    ranks = np.arange(1, p.size + 1) / p.size
    d_plus = float(np.max(ranks - srt))
    d_minus = float(np.max(srt - (ranks - 1 / p.size)))
    return PValueStats(p_values=p, mean_p=float(p.mean()), histogram=hist,
                       ks_vs_uniform=max(d_plus, d_minus, 0.0), d_plus=max(d_plus, 0.0))


def _side_kernel(spec: SamplerSpec, base_seed: int):
    if spec.kind == "ideal":
        return IdealKernel(spec.model)
    if spec.kind == "digital":
        return DigitalKernel(spec.model, spec.digital_cfg,
                             *_group_perms(spec.model, spec.digital_cfg, base_seed))
    if spec.kind == "analog":
        return AnalogKernel(spec.model, spec.analog_cfg)
    return None  # bernoulli: sampled directly, no chain


def _side_samples(spec: SamplerSpec, kernel, plan: TrialPlan, side: int,
                  trials: Sequence[int]) -> np.ndarray:
    if spec.kind == "bernoulli":
        out = np.empty((len(trials), plan.n_per_trial, spec.n_bits), dtype=np.uint8)
        for row, trial in enumerate(trials):
            u = derive_rng(plan.base_seed, trial, side, 1).random((plan.n_per_trial, spec.n_bits))
            out[row] = u < spec.rate
        return out
    settings = replace(spec.settings, n_samples=plan.n_per_trial)
    paths = [(trial, side) for trial in trials]
    return run_chains(kernel, settings, plan.base_seed, paths)


def tie_seed_for_trial(base_seed: int, trial: int) -> int:
    """The matching tie-break seed used by run_trials for a given trial."""
    return int(seed_sequence(base_seed, trial, _TIE_SIDE).generate_state(1, np.uint64)[0])


def run_trials(plan: TrialPlan, block_size: int = 64) -> PValueStats:
    """Run every trial of the plan and aggregate the Crossmatch p-values.

    Trial i draws side samples from streams seeded at (base_seed, i, side)
    for side in {0, 1} and breaks matching ties with tie_seed_for_trial's
    stream; block_size only batches chain execution and never changes any
    result.
    """
    kernel_a = _side_kernel(plan.sampler_a, plan.base_seed)
    kernel_b = _side_kernel(plan.sampler_b, plan.base_seed)
    p_values = np.empty(plan.num_trials)
    for start in range(0, plan.num_trials, block_size):
        trials = range(start, min(start + block_size, plan.num_trials))
        xs = _side_samples(plan.sampler_a, kernel_a, plan, 0, trials)
        ys = _side_samples(plan.sampler_b, kernel_b, plan, 1, trials)
        for row, trial in enumerate(trials):
            outcome = crossmatch_test(xs[row], ys[row], method=plan.matching,
                                      tie_seed=tie_seed_for_trial(plan.base_seed, trial))
            p_values[trial] = outcome.p_value
    return pvalue_stats(p_values)


def energy_estimate(resources: ResourceEstimate, ticks: int, em: EnergyModel) -> float:
    """Active plus static energy for a deployment held busy for `ticks` ticks."""
    if ticks < 1:
        raise ValueError(f"ticks must be >= 1, got {ticks}")
    return (resources.total_neurons * ticks * em.e_active
            + resources.cores * ticks * em.e_core_static)


def epeff(mean_p: float, energy: float) -> float:
    """Energy Performance Efficiency: mean p-value per unit energy."""
    if energy <= 0:
        raise ValueError(f"energy must be positive, got {energy}")
    return mean_p / energy


def gibbs_ticks(settings: ChainSettings, n_per_trial: int, window: int) -> int:
    """Hardware ticks per trial: each Gibbs step updates 2 layers of `window` ticks."""
    return (settings.burn_in + n_per_trial * settings.thin) * 2 * window


def _digital_report(model: RbmModel, label: str, cfg: DigitalSamplerConfig,
                    settings: ChainSettings, n_per_trial: int, num_trials: int,
                    base_seed: int, em: EnergyModel, matching: str,
                    reference: SamplerSpec) -> EpeffReport:
    plan = TrialPlan(sampler_a=reference,
                     sampler_b=SamplerSpec.digital(model, settings, cfg),
                     n_per_trial=n_per_trial, num_trials=num_trials,
                     base_seed=base_seed, matching=matching)
    stats = run_trials(plan)
    resources = resource_estimate(model.n_visible + model.n_hidden,
                                  cfg.leak_density, em.core_size)
    energy = energy_estimate(resources, gibbs_ticks(settings, n_per_trial, cfg.window), em)
    return EpeffReport(label=label, mean_p=stats.mean_p, energy=energy,
                       epeff=epeff(stats.mean_p, energy), resources=resources)


def parameter_sweep(model: RbmModel, labeled_configs, settings: ChainSettings,
                    *, n_per_trial: int = 50, num_trials: int = 200, base_seed: int,
                    energy_model: EnergyModel = EnergyModel(),
                    matching: str = "auto") -> list[EpeffReport]:
    """Ideal-vs-digital EPEff reports for each (label, config), best EPEff first.

    Every config is evaluated under the same base_seed, so identical configs
    produce identical reports.
    """
    if not labeled_configs:
        raise ValueError("no sampler configs to sweep")
    reference = SamplerSpec.ideal(model, settings)
    reports = [
        _digital_report(model, label, cfg, settings, n_per_trial, num_trials,
                        base_seed, energy_model, matching, reference)
        for label, cfg in labeled_configs
    ]
    return sorted(reports, key=lambda r: r.epeff, reverse=True)


def leak_density_sweep(model: RbmModel, cfg: DigitalSamplerConfig, densities,
                       settings: ChainSettings, *, n_per_trial: int = 50,
                       num_trials: int = 200, base_seed: int,
                       energy_model: EnergyModel = EnergyModel(),
                       matching: str = "auto") -> list[EpeffReport]:
    """EPEff across leak densities, judged against the density-1 sampler.

    The reference side is the same digital config at leak_density=1; reports
    come back in the given density order (the sweep curve), not EPEff-sorted.
    """
    densities = list(densities)
    if not densities:
        raise ValueError("no leak densities to sweep")
    base = replace(cfg, leak_density=1)
    reference = SamplerSpec.digital(model, settings, base)
    return [
        _digital_report(model, f"ld={d}", replace(cfg, leak_density=d), settings,
                        n_per_trial, num_trials, base_seed, energy_model, matching,
                        reference)
        for d in densities
    ]
