"""Quantify how faithfully hardware-style Gibbs samplers reproduce an RBM.

The package couples three things: exact/ideal RBM Gibbs sampling, simulated
neuromorphic samplers (digital stochastic integrate-and-fire and analog LIF
neurons), and the Crossmatch two-sample test that turns "do these samplers
agree?" into calibrated p-values. On top sit repeated-trial harnesses, an
energy model, and EPEff sweeps for choosing sampler configurations.
"""

from .crossmatch import CrossmatchOutcome, crossmatch_test, null_pmf, p_value
from .harness import (EnergyModel, EpeffReport, PValueStats, SamplerSpec, TrialPlan,
                      epeff, leak_density_sweep, parameter_sweep, run_trials)
from .neuro import (AnalogConfig, DigitalSamplerConfig, ResourceEstimate,
                    digital_spike_prob_exact, resource_estimate, run_analog_chain,
                    run_digital_chain)
from .rbm import (ChainSettings, GibbsState, RbmModel, SampleBatch, TrainConfig,
                  cd1_train, energy, exact_visible_marginal, gibbs_step,
                  log_partition_exact, random_model, run_chain)

__version__ = "0.1.0"
