"""Simulated hardware samplers: digital stochastic I&F neurons and analog LIF neurons.

The digital neuron realizes an approximately sigmoidal activation with four
knobs: a sampling window of `window` iterations, a deterministic threshold,
a `threshold_bits`-bit uniform stochastic threshold offset, and a Bernoulli(0.5)
stochastic leak added each iteration. A unit's sample is 1 iff the neuron
spikes in any window iteration; the membrane potential is never reset inside
the window. Weights and biases are premultiplied by `scale` to use the
integer threshold range.

Leak sharing: `leak_density` = number of data units fed by one shared leak
draw. Units in a layer are partitioned into consecutive index blocks of that
size (or a seeded permutation of the layer when `random_groups` is set);
within a block all units see the same leak coin at each window iteration.

The analog neuron integrates  C du/dt = -g_L u + I + sigma * xi(t)  by
Euler-Maruyama, spiking and resetting at a fixed threshold; noise draws can
likewise be shared across `noise_density`-sized unit groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .chains import run_chains
from .rbm import ChainSettings, GibbsState, RbmModel, SampleBatch
from .rng import derive_rng

__all__ = [
    "DigitalSamplerConfig",
    "DigitalNeuronState",
    "AnalogConfig",
    "ResourceEstimate",
    "PRESET_CONFIGS",
    "digital_neuron_sample",
    "digital_spike_prob_exact",
    "digital_gibbs_step",
    "run_digital_chain",
    "analog_lif_sample",
    "run_analog_chain",
    "resource_estimate",
    "DigitalKernel",
    "AnalogKernel",
]

_DP_WINDOW_LIMIT = 32


def _presets() -> tuple:
    # The seven bundled digital sampler presets, G1 through G7, as
    # (window, threshold, threshold_bits, leak, scale).
    table = {
        "G1": (1, -130, 8, 0, 50),
        "G2": (1, -80, 8, 102, 50),
        "G3": (2, 0, 8, 100, 50),
        "G4": (8, 79, 9, 49, 50),
        "G5": (16, 50, 9, 15, 30),
        "G6": (16, 100, 10, 30, 50),
        "G7": (16, 633, 8, 90, 100),
    }
    return tuple(
        (name, DigitalSamplerConfig(window=w, threshold=vt, threshold_bits=tm,
                                    leak=leak, scale=scale))
        for name, (w, vt, tm, leak, scale) in table.items())


@dataclass(frozen=True)
class DigitalSamplerConfig:
    """Digital sampling-neuron parameters.

    window:         iterations per sample (>= 1)
    threshold:      deterministic spike threshold (integer, may be negative)
    threshold_bits: bit width of the uniform stochastic threshold offset (1..31)
    leak:           magnitude added per Bernoulli(0.5) leak success (integer)
    scale:          multiplier applied to net inputs before sampling (> 0)
    leak_density:   data units per shared leak draw (>= 1)
    random_groups:  permute units before blocking into leak groups
    """

    window: int
    threshold: int
    threshold_bits: int
    leak: int
    scale: float
    leak_density: int = 1
    random_groups: bool = False

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not 1 <= self.threshold_bits <= 31:
            raise ValueError(f"threshold_bits must be in 1..31, got {self.threshold_bits}")
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.leak_density < 1:
            raise ValueError(f"leak_density must be >= 1, got {self.leak_density}")

    def label(self) -> str:
        base = (f"digital(window={self.window},threshold={self.threshold},"
                f"bits={self.threshold_bits},leak={self.leak},scale={self.scale:g}")
        if self.leak_density != 1:
            base += f",ld={self.leak_density}"
        return base + ")"


@dataclass
class DigitalNeuronState:
    """Membrane potential of one digital sampling neuron (scaled units)."""

    V: float

    def __post_init__(self):
        self.V = float(self.V)
        if not math.isfinite(self.V):
            raise ValueError("membrane potential must be finite")


@dataclass(frozen=True)
class AnalogConfig:
    """Leaky integrate-and-fire neuron parameters for the analog sampler.

    Integration runs `window` Euler-Maruyama steps of size dt per sample;
    the sample is 1 iff the neuron spikes at least once. noise_density is
    the number of units fed by one shared Gaussian noise source.
    """

    # Defaults are tuned so the spike frequency over a window tracks the
    # logistic curve of the input current to within ~0.03.
    capacitance: float = 1.0
    g_leak: float = 1.0
    threshold: float = 0.8
    v_reset: float = 0.0
    noise_sigma: float = 1.4
    dt: float = 0.025
    window: int = 40
    noise_density: int = 1

    def __post_init__(self):
        if self.capacitance <= 0 or self.g_leak <= 0:
            raise ValueError("capacitance and g_leak must be > 0")
        if self.noise_sigma <= 0:
            raise ValueError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.threshold <= self.v_reset:
            raise ValueError("threshold must exceed v_reset")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.noise_density < 1:
            raise ValueError(f"noise_density must be >= 1, got {self.noise_density}")
        # Euler step must keep the leak update contractive.
        if self.g_leak * self.dt / self.capacitance >= 1.0:
            raise ValueError("g_leak * dt / capacitance must be < 1 for a stable step")

    def label(self) -> str:
        base = (f"analog(C={self.capacitance:g},gL={self.g_leak:g},theta={self.threshold:g},"
                f"reset={self.v_reset:g},sigma={self.noise_sigma:g},dt={self.dt:g},"
                f"window={self.window}")
        if self.noise_density != 1:
            base += f",nd={self.noise_density}"
        return base + ")"


@dataclass(frozen=True)
class ResourceEstimate:
    """Crossbar neuron accounting for one sampler deployment."""

    data_neurons: int
    leak_neurons: int
    total_neurons: int
    cores: int
    utilization: float
    core_size: int = 256


def resource_estimate(num_units: int, leak_density: int, core_size: int = 256) -> ResourceEstimate:
    """Neurons and cores needed for num_units data units at a given leak density.

    Each data unit occupies one neuron; every group of leak_density units adds
    one shared leak neuron. Utilization counts only data neurons against the
    allocated core capacity.
    """
    if num_units < 1:
        raise ValueError(f"num_units must be >= 1, got {num_units}")
    if leak_density < 1:
        raise ValueError(f"leak_density must be >= 1, got {leak_density}")
    if core_size < 1:
        raise ValueError(f"core_size must be >= 1, got {core_size}")
    leak_neurons = -(-num_units // leak_density)
    total = num_units + leak_neurons
    cores = -(-total // core_size)
    return ResourceEstimate(
        data_neurons=num_units,
        leak_neurons=leak_neurons,
        total_neurons=total,
        cores=cores,
        utilization=num_units / (cores * core_size),
        core_size=core_size,
    )


def _consecutive_groups(n_units: int, density: int, perm: np.ndarray | None) -> np.ndarray:
    """Group index of every unit: consecutive blocks of `density`, optionally permuted."""
    slots = np.arange(n_units) // density
    if perm is None:
        return slots
    group_of_unit = np.empty(n_units, dtype=np.int64)
    group_of_unit[np.asarray(perm)] = slots
    return group_of_unit


def _window_spikes(v0: np.ndarray, cfg: DigitalSamplerConfig, u_leak: np.ndarray,
                   u_thresh: np.ndarray, group_of_unit: np.ndarray) -> np.ndarray:
    """Spike indicator per unit over one sampling window.

    v0: (..., m) scaled initial potentials; u_leak: (..., window, g) uniforms
    for the shared leak coins; u_thresh: (..., window, m) uniforms for the
    stochastic threshold. Iteration order per the neuron dynamics: add the
    leak, then compare against threshold + floor(u * 2^bits).
    """
    leak_hits = (u_leak < 0.5)[..., group_of_unit]
    V = v0[..., None, :] + cfg.leak * np.cumsum(leak_hits, axis=-2, dtype=np.float64)
    levels = np.floor(u_thresh * float(1 << cfg.threshold_bits))
    return (V >= cfg.threshold + levels).any(axis=-2)


def digital_neuron_sample(v_initial, cfg: DigitalSamplerConfig,
                          rng: np.random.Generator, size: int | None = None):
    """Sample one digital neuron initialized at membrane potential v_initial.

    Returns a single 0/1 int, or an array of `size` independent samples.
    Consumes window (or size x window) leak uniforms followed by the same
    number of threshold uniforms from `rng`.
    """
    if isinstance(v_initial, DigitalNeuronState):
        v_initial = v_initial.V
    v0 = float(v_initial)
    if not math.isfinite(v0):
        raise ValueError("v_initial must be finite")
    n = 1 if size is None else int(size)
    u_leak = rng.random((n, cfg.window, 1))
    u_thresh = rng.random((n, cfg.window, 1))
    spikes = _window_spikes(np.full((n, 1), v0), cfg, u_leak, u_thresh, np.zeros(1, dtype=np.int64))
    bits = spikes[:, 0].astype(np.uint8)
    return int(bits[0]) if size is None else bits


def digital_spike_prob_exact(v_initial: float, cfg: DigitalSamplerConfig) -> float:
    """Exact spike probability of the digital neuron, by dynamic programming.

    Tracks the no-spike survival mass split by the number of leak successes:
    each iteration halves the mass into the leak/no-leak branches and scales
    by the per-iteration survival 1 - p_step(V). Requires window <= 32.
    """
    if cfg.window > _DP_WINDOW_LIMIT:
        raise ValueError(f"window {cfg.window} too large for exact DP (limit {_DP_WINDOW_LIMIT})")
    v0 = float(v_initial)
    if not math.isfinite(v0):
        raise ValueError("v_initial must be finite")
    m = float(1 << cfg.threshold_bits)

    def p_step(V: np.ndarray) -> np.ndarray:
        return np.clip(np.floor(V - cfg.threshold) + 1.0, 0.0, m) / m

    # survive[k]: probability of no spike so far with k leak successes
    survive = np.zeros(cfg.window + 1)
    survive[0] = 1.0
    for t in range(1, cfg.window + 1):
        prev = survive.copy()
        entered = 0.5 * prev
        entered[1:t + 1] += 0.5 * prev[:t]
        V = v0 + cfg.leak * np.arange(cfg.window + 1, dtype=np.float64)
        survive = entered * (1.0 - p_step(V))
    return float(1.0 - survive.sum())


class DigitalKernel:
    """Block Gibbs update where every unit is sampled by the digital neuron."""

    def __init__(self, model: RbmModel, cfg: DigitalSamplerConfig,
                 hidden_perm: np.ndarray | None = None,
                 visible_perm: np.ndarray | None = None):
        self.model = model
        self.cfg = cfg
        self.n_visible = model.n_visible
        nh, nv, w = model.n_hidden, model.n_visible, cfg.window
        self._g_h = _consecutive_groups(nh, cfg.leak_density, hidden_perm)
        self._g_v = _consecutive_groups(nv, cfg.leak_density, visible_perm)
        self._ng_h = int(self._g_h.max()) + 1
        self._ng_v = int(self._g_v.max()) + 1
        # Per-step uniform layout: leak_h, thresh_h, leak_v, thresh_v.
        self._cuts = np.cumsum([w * self._ng_h, w * nh, w * self._ng_v, w * nv])
        self.n_uniforms_per_step = int(self._cuts[-1])
        self.n_normals_per_step = 0

    def _update_layer(self, net, u_leak_flat, u_thresh_flat, group_of_unit, n_groups):
        w = self.cfg.window
        m = net.shape[-1]
        u_leak = u_leak_flat.reshape(net.shape[0], w, n_groups)
        u_thresh = u_thresh_flat.reshape(net.shape[0], w, m)
        spikes = _window_spikes(self.cfg.scale * net, self.cfg, u_leak, u_thresh, group_of_unit)
        return spikes.astype(np.float64)

    def step(self, v, u, z):
        m = self.model
        c = self._cuts
        net_h = v @ m.W + m.b_h
        h = self._update_layer(net_h, u[:, :c[0]], u[:, c[0]:c[1]], self._g_h, self._ng_h)
        net_v = h @ m.W.T + m.b_v
        return self._update_layer(net_v, u[:, c[1]:c[2]], u[:, c[2]:c[3]], self._g_v, self._ng_v)


def _group_perms(model: RbmModel, cfg: DigitalSamplerConfig, seed: int):
    if not cfg.random_groups:
        return None, None
    # One wiring per run: the permutation models a fixed crossbar layout.
    return (derive_rng(seed, 0xD0, 0).permutation(model.n_hidden),
            derive_rng(seed, 0xD0, 1).permutation(model.n_visible))


def digital_gibbs_step(model: RbmModel, state: GibbsState, cfg: DigitalSamplerConfig,
                       rng: np.random.Generator,
                       hidden_perm: np.ndarray | None = None,
                       visible_perm: np.ndarray | None = None) -> GibbsState:
    """One block Gibbs update with digital-neuron sampling of every unit.

    Draw order from `rng`: (window, groups_h) leak uniforms, (window, n_hidden)
    threshold uniforms, then the visible-layer equivalents. Matches the
    batched chain kernel draw for draw.
    """
    if not state.matches(model):
        raise ValueError("state dimensions do not match model")
    kernel = DigitalKernel(model, cfg, hidden_perm, visible_perm)
    w = cfg.window
    net_h = state.v.astype(np.float64) @ model.W + model.b_h
    u_leak = rng.random((1, w * kernel._ng_h))
    u_thresh = rng.random((1, w * model.n_hidden))
    h = kernel._update_layer(net_h[None, :], u_leak, u_thresh, kernel._g_h, kernel._ng_h)
    net_v = h @ model.W.T + model.b_v
    u_leak = rng.random((1, w * kernel._ng_v))
    u_thresh = rng.random((1, w * model.n_visible))
    v = kernel._update_layer(net_v, u_leak, u_thresh, kernel._g_v, kernel._ng_v)
    return GibbsState(v=v[0].astype(np.uint8), h=h[0].astype(np.uint8))


def run_digital_chain(model: RbmModel, settings: ChainSettings, cfg: DigitalSamplerConfig,
                      seed: int, sampler_id: str | None = None) -> SampleBatch:
    """Run one digital-sampler chain and collect its thinned visible samples."""
    kernel = DigitalKernel(model, cfg, *_group_perms(model, cfg, seed))
    samples = run_chains(kernel, settings, seed, [()])[0]
    return SampleBatch(samples=samples, sampler_id=sampler_id or cfg.label(),
                       seed=seed, settings=settings)


def _lif_window(currents: np.ndarray, cfg: AnalogConfig, z: np.ndarray,
                group_of_unit: np.ndarray) -> np.ndarray:
    """Spike indicator per unit after `window` Euler-Maruyama steps from reset.

    currents: (..., m); z: (..., window, g) standard normals, shared within
    noise groups. Spiking resets the membrane to v_reset and is latched.
    """
    decay = 1.0 - cfg.g_leak * cfg.dt / cfg.capacitance
    drive = (cfg.dt / cfg.capacitance) * currents
    noise_gain = (cfg.noise_sigma / cfg.capacitance) * math.sqrt(cfg.dt)
    u = np.full(currents.shape, cfg.v_reset, dtype=np.float64)
    spiked = np.zeros(currents.shape, dtype=bool)
    for w in range(z.shape[-2]):
        u = u * decay + drive + noise_gain * z[..., w, group_of_unit]
        hit = u >= cfg.threshold
        spiked |= hit
        u = np.where(hit, cfg.v_reset, u)
    return spiked


def analog_lif_sample(input_current, cfg: AnalogConfig, rng: np.random.Generator,
                      size: int | None = None):
    """Sample one analog LIF neuron driven by a constant input current.

    Returns a 0/1 int (or array of `size` samples); consumes window (or
    size x window) standard normals from `rng`.
    """
    current = float(input_current)
    if not math.isfinite(current):
        raise ValueError("input_current must be finite")
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, cfg.window, 1))
    spikes = _lif_window(np.full((n, 1), current), cfg, z, np.zeros(1, dtype=np.int64))
    bits = spikes[:, 0].astype(np.uint8)
    return int(bits[0]) if size is None else bits


class AnalogKernel:
    """Block Gibbs update where every unit is sampled by the analog LIF neuron."""

    def __init__(self, model: RbmModel, cfg: AnalogConfig):
        self.model = model
        self.cfg = cfg
        self.n_visible = model.n_visible
        self._g_h = _consecutive_groups(model.n_hidden, cfg.noise_density, None)
        self._g_v = _consecutive_groups(model.n_visible, cfg.noise_density, None)
        self._ng_h = int(self._g_h.max()) + 1
        self._ng_v = int(self._g_v.max()) + 1
        self.n_uniforms_per_step = 0
        # Per-step normal layout: hidden noise then visible noise.
        self.n_normals_per_step = cfg.window * (self._ng_h + self._ng_v)

    def step(self, v, u, z):
        m = self.model
        w = self.cfg.window
        cut = w * self._ng_h
        net_h = v @ m.W + m.b_h
        z_h = z[:, :cut].reshape(-1, w, self._ng_h)
        h = _lif_window(net_h, self.cfg, z_h, self._g_h).astype(np.float64)
        net_v = h @ m.W.T + m.b_v
        z_v = z[:, cut:].reshape(-1, w, self._ng_v)
        return _lif_window(net_v, self.cfg, z_v, self._g_v).astype(np.float64)


def run_analog_chain(model: RbmModel, settings: ChainSettings, cfg: AnalogConfig,
                     seed: int, sampler_id: str | None = None) -> SampleBatch:
    """Run one analog-sampler chain and collect its thinned visible samples."""
    samples = run_chains(AnalogKernel(model, cfg), settings, seed, [()])[0]
    return SampleBatch(samples=samples, sampler_id=sampler_id or cfg.label(),
                       seed=seed, settings=settings)


PRESET_CONFIGS = _presets()
