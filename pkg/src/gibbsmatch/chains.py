"""Batched Gibbs-chain execution with per-chain random streams.

All chain runners (ideal, digital, analog) share one engine. Each chain owns
three derived Philox streams -- init, uniform draws, Gaussian draws -- so a
batch of chains produces bit-identical output to running the same chains one
at a time, in any order. Kernels declare how many uniforms/normals one full
Gibbs step consumes per chain; the engine pre-draws them in chunks (chunking
does not move any stream, numpy generators fill arrays sequentially).
"""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np
from scipy.special import expit

from .rbm import ChainSettings, RbmModel
from .rng import derive_rng

__all__ = ["GibbsKernel", "IdealKernel", "run_chains"]

# Sub-stream tags appended to a chain's path.
_INIT, _UNIFORM, _NORMAL = 0, 1, 2

_CHUNK_TARGET_BYTES = 32 << 20


class GibbsKernel(Protocol):
    n_visible: int
    n_uniforms_per_step: int
    n_normals_per_step: int

    def step(self, v: np.ndarray, u: np.ndarray | None, z: np.ndarray | None) -> np.ndarray:
        """Advance a (batch, n_visible) 0/1 float state by one full Gibbs step."""
        ...


class IdealKernel:
    """Sigmoid block update: resample h from v, then v from h (the software benchmark)."""

    def __init__(self, model: RbmModel):
        self.model = model
        self.n_visible = model.n_visible
        self.n_uniforms_per_step = model.n_hidden + model.n_visible
        self.n_normals_per_step = 0

    def step(self, v, u, z):
        m = self.model
        nh = m.n_hidden
        ph = expit(v @ m.W + m.b_h)
        h = (u[:, :nh] < ph).astype(np.float64)
        pv = expit(h @ m.W.T + m.b_v)
        return (u[:, nh:] < pv).astype(np.float64)


def _initial_states(settings: ChainSettings, n_visible: int, seed: int,
                    paths: Sequence[tuple]) -> np.ndarray:
    v = np.empty((len(paths), n_visible), dtype=np.float64)
    if settings.init == "random-uniform":
        for c, path in enumerate(paths):
            v[c] = derive_rng(seed, *path, _INIT).random(n_visible) < 0.5
    else:
        vec = settings.init_vector
        if vec.shape != (n_visible,):
            raise ValueError(f"init_vector has shape {vec.shape}, expected ({n_visible},)")
        v[:] = vec
    return v


def run_chains(kernel: GibbsKernel, settings: ChainSettings, seed: int,
               paths: Sequence[tuple]) -> np.ndarray:
    """Run one chain per path; returns (n_chains, n_samples, n_visible) bits.

    Chain c draws from streams (seed, *paths[c], tag); its output depends
    only on (kernel, settings, seed, paths[c]).
    """
    n_chains = len(paths)
    if n_chains == 0:
        return np.empty((0, settings.n_samples, kernel.n_visible), dtype=np.uint8)

    v = _initial_states(settings, kernel.n_visible, seed, paths)
    nu = kernel.n_uniforms_per_step
    nz = kernel.n_normals_per_step
    u_rngs = [derive_rng(seed, *p, _UNIFORM) for p in paths] if nu else None
    z_rngs = [derive_rng(seed, *p, _NORMAL) for p in paths] if nz else None

    per_step_bytes = 8 * n_chains * max(nu + nz, 1)
    chunk = int(np.clip(_CHUNK_TARGET_BYTES // per_step_bytes, 1, 64))

    out = np.empty((n_chains, settings.n_samples, kernel.n_visible), dtype=np.uint8)
    recorded = 0
    step = 0
    total = settings.total_steps
    while step < total:
        k = min(chunk, total - step)
        U = np.stack([g.random((k, nu)) for g in u_rngs]) if u_rngs else None
        Z = np.stack([g.standard_normal((k, nz)) for g in z_rngs]) if z_rngs else None
        for t in range(k):
            v = kernel.step(v,
                            U[:, t] if U is not None else None,
                            Z[:, t] if Z is not None else None)
            step += 1
            done = step - settings.burn_in
            if done > 0 and done % settings.thin == 0 and recorded < settings.n_samples:
                out[:, recorded] = v
                recorded += 1
    return out
