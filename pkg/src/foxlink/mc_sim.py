"""Monte-Carlo oracle built from the generative channel models.

Only parameter types are shared with the analytic modules; nothing here
evaluates a closed form.  Each batch draws from its own stream spawned from
the configured seed, so results do not depend on the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from . import _accel
from .errors import SpecError
from .params import FixedGain, GenKParams, MalagaParams, ModulationScheme, RelaySystem, malaga_derive

__all__ = [
    "Estimate",
    "SimConfig",
    "conditional_error",
    "estimate_mean",
    "sample_e2e_snr",
    "sample_fso_snr",
    "sample_genk",
    "sample_sir",
    "simulate_ber",
    "simulate_capacity",
    "simulate_outage",
]


@dataclass(frozen=True)
class SimConfig:
    samples: int = 1_000_000
    seed: int = 0
    batches: int = 20

    def __post_init__(self):
        object.__setattr__(self, "samples", int(self.samples))
        if self.samples < 10_000:
            raise SpecError("at least 10^4 samples are required")
        if self.batches < 10:
            raise SpecError("at least 10 batches are required")
        if not 0 <= self.seed < 2**64:
            raise SpecError("seed must be a 64-bit unsigned integer")

    @property
    def per_batch(self) -> int:
        return self.samples // self.batches


@dataclass(frozen=True)
class Estimate:
    mean: float
    stdError: float
    samples: int

    def covers(self, value: float, k: float = 3.0) -> bool:
        return abs(value - self.mean) <= k * self.stdError

    def to_dict(self):
        return {"mean": self.mean, "std_error": self.stdError, "samples": self.samples}


# ----------------------------------------------------------------------------
# channel samplers
# ----------------------------------------------------------------------------


def sample_fso_snr(p: MalagaParams, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """gamma_1 = mu_r (X Y H_p / ((g + Omega') h))^r.

    X ~ Gamma(alpha, 1/alpha) is the large-scale term.  Y is the squared
    magnitude of a Nakagami-beta shadowed coherent part plus circular
    Gaussian scatter of power g.  H_p = U^{1/xi^2} with U uniform is the
    pointing loss.
    """
    if not isinstance(p.beta, int):
        raise SpecError("beta must be an integer")
    d = malaga_derive(p)
    X = rng.gamma(p.alpha, 1.0 / p.alpha, size)
    G = rng.gamma(p.beta, 1.0 / p.beta, size)
    los = math.sqrt(p.Omega) * np.exp(1j * p.phase_a) + math.sqrt(2.0 * p.b0 * p.rho) * np.exp(1j * p.phase_b)
    scatter = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(p.g / 2.0)
    Y = np.abs(np.sqrt(G) * los + scatter) ** 2
    Hp = rng.random(size) ** (1.0 / p.xi**2)
    irradiance = X * Y * Hp / ((p.g + p.coherent_power) * d.h)
    return d.mu_r * irradiance**p.r


def sample_genk(p: GenKParams, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Gamma(multiplicity m, 1/m) fading times Gamma(kappa, meanPower/kappa) shadowing."""
    return rng.gamma(p.shape, 1.0 / p.m, size) * rng.gamma(p.kappa, p.meanPower / p.kappa, size)


def sample_sir(desired: GenKParams, interf: GenKParams, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return sample_genk(desired, rng, size) / sample_genk(interf, rng, size)


def sample_e2e_snr(sys: RelaySystem, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    g1 = sample_fso_snr(sys.fso, rng, size)
    g2 = sample_sir(sys.rf, sys.interf, rng, size)
    if isinstance(sys.scheme, FixedGain):
        return _accel.fixed_gain_sinr(g1, g2, sys.scheme.C)
    return _accel.csi_sinr(g1, g2)


# ----------------------------------------------------------------------------
# estimation
# ----------------------------------------------------------------------------


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FOXLINK_THREADS", "1")))
    except ValueError:
        return 1


def _run_batches(fn, cfg: SimConfig) -> np.ndarray:
    """fn(rng, n) -> per-batch statistic (scalar or 1-d); stacked in batch order."""
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.batches)
    n = cfg.per_batch

    def one(ss):
        return np.atleast_1d(np.asarray(fn(np.random.default_rng(ss), n), float))

    workers = _workers()
    if workers == 1:
        rows = [one(ss) for ss in streams]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, streams))
    return np.vstack(rows)


def _summarise(batch_means: np.ndarray, cfg: SimConfig) -> list[Estimate]:
    mean = batch_means.mean(axis=0)
    se = batch_means.std(axis=0, ddof=1) / math.sqrt(cfg.batches)
    total = cfg.per_batch * cfg.batches
    return [Estimate(float(m), float(s), total) for m, s in zip(mean, se)]


def estimate_mean(draw, cfg: SimConfig) -> Estimate:
    """Batch-means estimate of E[draw(rng, n)]."""
    return _summarise(_run_batches(lambda rng, n: draw(rng, n).mean(), cfg), cfg)[0]


def simulate_outage(sys: RelaySystem, gammaTh, cfg: SimConfig):
    """Fraction of end-to-end SNR samples below each threshold.

    A scalar threshold gives one Estimate; a sequence gives a list that
    shares the same samples.
    """
    th = np.atleast_1d(np.asarray(gammaTh, float))
    if np.any(th < 0):
        raise SpecError("thresholds must be non-negative")

    def fn(rng, n):
        g = np.sort(sample_e2e_snr(sys, rng, n))
        return np.searchsorted(g, th, side="left") / n

    est = _summarise(_run_batches(fn, cfg), cfg)
    return est[0] if np.ndim(gammaTh) == 0 else est


def conditional_error(mod: ModulationScheme, snr: np.ndarray) -> np.ndarray:
    """(phi/2) sum_j Q(p, q_j snr), the regularised upper incomplete Gamma; exact Q(sqrt(2 snr)) for BPSK."""
    out = np.zeros_like(snr)
    for qj in mod.q:
        out += gammaincc(mod.p, qj * snr)
    return 0.5 * mod.phi * out


def simulate_ber(sys: RelaySystem, mod: ModulationScheme, cfg: SimConfig) -> Estimate:
    return estimate_mean(lambda rng, n: conditional_error(mod, sample_e2e_snr(sys, rng, n)), cfg)


def simulate_capacity(sys: RelaySystem, cfg: SimConfig) -> Estimate:
    """E[log2(1 + gamma)] / 2."""
    return estimate_mean(lambda rng, n: 0.5 * np.log2(1.0 + sample_e2e_snr(sys, rng, n)), cfg)
