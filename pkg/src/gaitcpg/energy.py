"""Event-count energy model.

Spiking operation costs are counted per synaptic accumulate: an interneuron
spike lands on its 20-neuron target pool; a calf motor spike reaches 19 pool
mates plus one interneuron; a thigh motor spike additionally reaches one IIN
and the 20 thigh neurons of each other limb (60 axons); a limit-inhibition
event charges one accumulate per neuron of the inhibited pool per step.
Inter-limb accumulates are charged even while the shared weight is zero: the
operation happens structurally. The policy-network comparison charges one
multiply plus one add per weight per inference at the control rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cpg import N_LIMBS

PICOJOULE = 1e-12


@dataclass(frozen=True)
class OpCosts:
    """Energy per arithmetic operation (J); 45 nm process figures."""

    eps_mult: float = 3.7 * PICOJOULE
    eps_add: float = 0.9 * PICOJOULE


def fanout_ops(pool_size: int = 20, n_limbs: int = N_LIMBS) -> dict[str, int]:
    """Accumulates charged per event, by event category."""
    return {
        "inhi": pool_size,
        "calf": (pool_size - 1) + 1,
        "thigh": (pool_size - 1) + 1 + 1 + pool_size * (n_limbs - 1),
        "limit": pool_size,
    }


@dataclass
class FiringTally:
    """Cumulative event counts over some simulated interval."""

    inhi: int = 0          # inhibitory interneuron spikes (V1/V2b + IIN)
    calf: int = 0          # calf motor-pool spikes
    thigh: int = 0         # thigh motor-pool spikes
    limit_events: int = 0  # (inhibited pool, step) pairs
    elapsed_s: float = 0.0

    def add_step(self, activity, dt: float) -> None:
        self.inhi += activity.inhibitory_count
        self.calf += activity.calf_count
        self.thigh += activity.thigh_count
        self.limit_events += int(activity.limit_flags.sum())
        self.elapsed_s += dt

    def rates(self) -> dict[str, float]:
        """Population firing/event frequencies (Hz) over the tallied interval."""
        if self.elapsed_s <= 0:
            raise ValueError("tally covers no simulated time")
        return {
            "inhi": self.inhi / self.elapsed_s,
            "calf": self.calf / self.elapsed_s,
            "thigh": self.thigh / self.elapsed_s,
            "limit": self.limit_events / self.elapsed_s,
        }


def tally_ops(tally: FiringTally, pool_size: int = 20) -> int:
    """Exact accumulate count for every event in the tally."""
    ops = fanout_ops(pool_size)
    return (tally.inhi * ops["inhi"] + tally.calf * ops["calf"]
            + tally.thigh * ops["thigh"] + tally.limit_events * ops["limit"])


def p_policy(layer_dims: list[int], f_control: float,
             costs: OpCosts = OpCosts()) -> float:
    """Power (W) of a feed-forward policy network run at f_control Hz."""
    macs = sum(d_in * d_out for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]))
    return f_control * macs * (costs.eps_mult + costs.eps_add)


def p_snn_cpg(freqs: dict[str, float], costs: OpCosts = OpCosts(),
              pool_size: int = 20) -> float:
    """Power (W) of the spiking controller from category firing rates (Hz)."""
    ops = fanout_ops(pool_size)
    rate = sum(freqs[k] * ops[k] for k in ("inhi", "calf", "thigh", "limit"))
    return rate * costs.eps_add


def estimate_frequencies(tallies: list[FiringTally]) -> dict[str, float]:
    """Mean of session-wise average frequencies, per category."""
    if not tallies:
        raise ValueError("need at least one session tally")
    keys = ("inhi", "calf", "thigh", "limit")
    per_session = [t.rates() for t in tallies]
    return {k: sum(r[k] for r in per_session) / len(per_session) for k in keys}


@dataclass
class EnergyReport:
    freqs: dict[str, float]
    p_snn: float
    p_policy: float

    @property
    def ratio(self) -> float:
        return self.p_policy / self.p_snn if self.p_snn > 0 else float("inf")

    def lines(self) -> list[str]:
        out = [f"f_{k}_hz,{v!r}" for k, v in self.freqs.items()]
        out.append(f"p_snn_w,{self.p_snn!r}")
        out.append(f"p_policy_w,{self.p_policy!r}")
        out.append(f"policy_over_snn,{self.ratio!r}")
        return out


def energy_report(tallies: list[FiringTally],
                  layer_dims: list[int] = [42, 128, 128, 12],
                  f_control: float = 100.0,
                  costs: OpCosts = OpCosts()) -> EnergyReport:
    """Full comparison from per-session tallies."""
    freqs = estimate_frequencies(tallies)
    return EnergyReport(
        freqs=freqs,
        p_snn=p_snn_cpg(freqs, costs),
        p_policy=p_policy(layer_dims, f_control, costs),
    )
