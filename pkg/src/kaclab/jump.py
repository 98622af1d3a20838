"""Exact event-driven simulation of the Kac jump processes.

Covers the closed system, system + one/two finite reservoirs, and the
Maxwellian-thermostat idealizations.  All collision intensities are
velocity-independent (Maxwellian molecules), so the total jump rate is a
constant of the configuration and the event-driven simulation is exact.

Energy channels (e_S, e_plus, e_minus) are reported in temperature
units: e = (1/3n) sum_i ||v_i||^2, so a block at equilibrium Gamma_T has
channel value T.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .kinetics import check_temperature, collide, sample_maxwellian, sample_unit_sphere
from .rng import RandomSource

TOPOLOGIES = (
    "system_only",
    "one_reservoir",
    "two_reservoirs",
    "one_thermostat",
    "two_thermostats",
)

LAMBDA_S = 1.0  # time unit fixed by the system mean free flight

_RESERVOIR_TOPOLOGIES = ("one_reservoir", "two_reservoirs")
_THERMOSTAT_TOPOLOGIES = ("one_thermostat", "two_thermostats")


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator combination runs, with rates and temperatures.

    One-sided topologies use the ``plus`` reservoir/thermostat only;
    T_minus is ignored there.
    """

    M: int
    topology: str = "two_reservoirs"
    N: int = 0
    lambda_R: float = 1.0
    mu: float = 1.0
    T_plus: float = 1.0
    T_minus: float = 0.0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.has_reservoir and self.N < 2:
            raise ValueError("reservoir topologies need N >= 2")
        if self.lambda_R < 0:
            raise ValueError("lambda_R must be >= 0")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        check_temperature(self.T_plus)
        if self.two_sided:
            check_temperature(self.T_minus)
            if self.T_plus < self.T_minus:
                raise ValueError("require T_plus >= T_minus")

    @property
    def has_reservoir(self) -> bool:
        return self.topology in _RESERVOIR_TOPOLOGIES

    @property
    def has_thermostat(self) -> bool:
        return self.topology in _THERMOSTAT_TOPOLOGIES

    @property
    def two_sided(self) -> bool:
        return self.topology in ("two_reservoirs", "two_thermostats")

    def category_rates(self):
        """(code, rate) pairs for every event category with positive rate."""
        cats = []
        if self.M >= 2:
            cats.append((_kernels.CAT_SYSTEM, LAMBDA_S * self.M / 2.0))
        if self.has_reservoir:
            res_rate = self.lambda_R * self.N / 2.0
            if res_rate > 0:
                cats.append((_kernels.CAT_RES_PLUS, res_rate))
                if self.two_sided:
                    cats.append((_kernels.CAT_RES_MINUS, res_rate))
            inter = self.mu * self.M
            if inter > 0:
                cats.append((_kernels.CAT_INTER_PLUS, inter))
                if self.two_sided:
                    cats.append((_kernels.CAT_INTER_MINUS, inter))
        if self.has_thermostat:
            inter = self.mu * self.M
            if inter > 0:
                cats.append((_kernels.CAT_THERMO_PLUS, inter))
                if self.two_sided:
                    cats.append((_kernels.CAT_THERMO_MINUS, inter))
        return cats


def total_rate(spec: GeneratorSpec) -> float:
    """Total jump intensity of the configuration."""
    return float(sum(rate for _, rate in spec.category_rates()))


@dataclass
class VelocityBlock:
    """Full microstate: system velocities plus optional reservoir blocks."""

    system: np.ndarray                      # (M, 3)
    reservoir_plus: np.ndarray | None = None   # (N, 3)
    reservoir_minus: np.ndarray | None = None  # (N, 3)
    time: float = 0.0

    def copy(self) -> "VelocityBlock":
        return VelocityBlock(
            system=self.system.copy(),
            reservoir_plus=None if self.reservoir_plus is None else self.reservoir_plus.copy(),
            reservoir_minus=None if self.reservoir_minus is None else self.reservoir_minus.copy(),
            time=self.time,
        )

    def blocks(self):
        out = [("system", self.system)]
        if self.reservoir_plus is not None:
            out.append(("reservoir_plus", self.reservoir_plus))
        if self.reservoir_minus is not None:
            out.append(("reservoir_minus", self.reservoir_minus))
        return out

    def total_energy(self) -> float:
        return float(sum(np.sum(b * b) for _, b in self.blocks()))

    def total_momentum(self) -> np.ndarray:
        return np.sum([b.sum(axis=0) for _, b in self.blocks()], axis=0)


class ZeroRateError(RuntimeError):
    """Raised when asked to step a configuration with no events."""


# ---------------------------------------------------------------------------
# observable channels (temperature units)

def _e_channel(arr: np.ndarray) -> float:
    return float(np.sum(arr * arr) / (3.0 * arr.shape[0]))


CHANNELS = {
    "e_S": lambda s: _e_channel(s.system),
    "e_plus": lambda s: _e_channel(s.reservoir_plus),
    "e_minus": lambda s: _e_channel(s.reservoir_minus),
    # mean pure fourth moment over system coordinates
    "m4_S": lambda s: float(np.mean(s.system ** 4)),
}


def default_channels(spec: GeneratorSpec):
    names = ["e_S"]
    if spec.has_reservoir:
        names.append("e_plus")
        if spec.two_sided:
            names.append("e_minus")
    return names


# ---------------------------------------------------------------------------
# simulation

def _empty3() -> np.ndarray:
    return np.zeros((0, 3))


def _kernel_blocks(state: VelocityBlock):
    rp = state.reservoir_plus if state.reservoir_plus is not None else _empty3()
    rm = state.reservoir_minus if state.reservoir_minus is not None else _empty3()
    return state.system, rp, rm


def step(state: VelocityBlock, spec: GeneratorSpec, rng: RandomSource) -> VelocityBlock:
    """Apply one jump event (exponential holding time + one collision)."""
    cats = spec.category_rates()
    rate = sum(r for _, r in cats)
    if rate <= 0.0:
        raise ZeroRateError("total jump rate is zero for this configuration")
    out = state.copy()
    dt = rng.exponential() / rate
    out.time = state.time + dt

    u = rng.uniform() * rate
    acc = 0.0
    code = cats[-1][0]
    for c, r in cats:
        acc += r
        if u <= acc:
            code = c
            break

    K = _kernels
    omega = sample_unit_sphere(rng)
    if code == K.CAT_SYSTEM:
        i, j = _uniform_pair(spec.M, rng)
        out.system[i], out.system[j] = collide(out.system[i], out.system[j], omega)
    elif code in (K.CAT_RES_PLUS, K.CAT_RES_MINUS):
        blk = out.reservoir_plus if code == K.CAT_RES_PLUS else out.reservoir_minus
        i, j = _uniform_pair(spec.N, rng)
        blk[i], blk[j] = collide(blk[i], blk[j], omega)
    elif code in (K.CAT_INTER_PLUS, K.CAT_INTER_MINUS):
        blk = out.reservoir_plus if code == K.CAT_INTER_PLUS else out.reservoir_minus
        i = int(rng.uniform() * spec.N)
        j = int(rng.uniform() * spec.M)
        blk[i], out.system[j] = collide(blk[i], out.system[j], omega)
    else:
        T = spec.T_plus if code == K.CAT_THERMO_PLUS else spec.T_minus
        j = int(rng.uniform() * spec.M)
        w = sample_maxwellian(T, rng)
        out.system[j], _ = collide(out.system[j], w, omega)
    return out


def _uniform_pair(n: int, rng: RandomSource):
    i = int(rng.uniform() * n)
    j = int(rng.uniform() * (n - 1))
    if j >= i:
        j += 1
    return i, j


def evolve(state: VelocityBlock, spec: GeneratorSpec, t_end: float,
           rng: RandomSource) -> VelocityBlock:
    """Evolve the microstate to t_end by the exact jump process.

    Randomness is consumed from ``rng`` in deterministic chunks; the
    result depends only on (state, spec, t_end, stream).
    """
    return evolve_counted(state, spec, t_end, rng)[0]


def evolve_counted(state: VelocityBlock, spec: GeneratorSpec, t_end: float,
                   rng: RandomSource):
    """Like :func:`evolve` but also returns the number of applied events."""
    if t_end < state.time:
        raise ValueError("t_end must be >= state.time")
    out = state.copy()
    rate = total_rate(spec)
    if t_end == state.time or rate <= 0.0:
        out.time = t_end
        return out, 0

    sys_v, rp_v, rm_v = _kernel_blocks(out)
    cats = spec.category_rates()
    codes = np.array([c for c, _ in cats], dtype=np.int64)
    cum = np.cumsum([r for _, r in cats])
    sqrt_tp = math.sqrt(spec.T_plus)
    sqrt_tm = math.sqrt(spec.T_minus) if spec.two_sided else 0.0

    t = out.time
    total_events = 0
    while True:
        expected = rate * (t_end - t)
        n = int(expected + 10.0 * math.sqrt(expected + 1.0) + 16.0)
        exps = rng.exponential(size=n)
        unis = rng.uniform(size=(n, 3))
        norms = rng.normal(size=(n, 6))
        applied, t, done = _kernels.run_events(
            sys_v, rp_v, rm_v, t, t_end, codes, cum, rate,
            sqrt_tp, sqrt_tm, exps, unis, norms)
        total_events += applied
        if done:
            break
    out.time = t_end
    return out, total_events


# ---------------------------------------------------------------------------
# initial samplers

def maxwellian_sampler(T0: float):
    """Product-Maxwellian initial condition at temperature T0 for the system.

    Reservoir blocks, when present, are drawn from Gamma at their own
    temperatures per the spec's initial product states.
    """
    check_temperature(T0)

    def sampler(spec: GeneratorSpec, rng: RandomSource) -> VelocityBlock:
        sys_v = sample_maxwellian(T0, rng, size=spec.M)
        rp = rm = None
        if spec.has_reservoir:
            rp = sample_maxwellian(spec.T_plus, rng, size=spec.N)
            if spec.two_sided:
                rm = sample_maxwellian(spec.T_minus, rng, size=spec.N)
        return VelocityBlock(system=sys_v, reservoir_plus=rp, reservoir_minus=rm)

    return sampler


def two_temperature_sampler(T_a: float, T_b: float, weight: float = 0.5):
    """Mixture initial condition: each replica draws Gamma_Ta or Gamma_Tb."""
    check_temperature(T_a)
    check_temperature(T_b)

    def sampler(spec: GeneratorSpec, rng: RandomSource) -> VelocityBlock:
        T0 = T_a if rng.uniform() < weight else T_b
        return maxwellian_sampler(T0)(spec, rng)

    return sampler


# ---------------------------------------------------------------------------
# ensembles

@dataclass
class TrajectoryRecord:
    """Ensemble-averaged observable trajectories with standard errors."""

    times: np.ndarray
    channels: dict  # name -> (mean array, stderr array), stderr NaN at K=1
    event_count: int
    replicas: int
    snapshots: dict = field(default_factory=dict)  # (time, block) -> (K, n, 3)


def run_ensemble(spec: GeneratorSpec, initial_sampler, K: int, observables,
                 times, seed: int = 0, workers: int = 1,
                 snapshot_times=(), snapshot_blocks=("system",)) -> TrajectoryRecord:
    """Run K independent replicas (stream_id = replica index).

    ``observables`` is a list of channel names from :data:`CHANNELS` or a
    dict name -> callable(VelocityBlock).  Snapshots, when requested,
    persist per-replica velocities of the named blocks at the matching
    observation times.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted")
    if isinstance(observables, dict):
        obs = dict(observables)
    else:
        obs = {name: CHANNELS[name] for name in observables}
    names = list(obs)

    snapshot_times = [float(t) for t in snapshot_times]
    for t in snapshot_times:
        if not np.any(np.isclose(times, t)):
            raise ValueError(f"snapshot time {t} not among observation times")

    values = np.empty((K, len(times), len(names)))
    events = np.zeros(K, dtype=np.int64)
    snaps = {}
    if snapshot_times:
        probe_rng = RandomSource(seed, 0)
        probe = initial_sampler(spec, probe_rng)
        sizes = {name: arr.shape[0] for name, arr in probe.blocks()}
        for t in snapshot_times:
            for b in snapshot_blocks:
                snaps[(t, b)] = np.empty((K, sizes[b], 3))

    def run_range(lo, hi):
        for r in range(lo, hi):
            rng = RandomSource(seed, r)
            state = initial_sampler(spec, rng)
            n_ev = 0
            for ti, t in enumerate(times):
                state, applied = evolve_counted(state, spec, t, rng)
                n_ev += applied
                for oi, name in enumerate(names):
                    values[r, ti, oi] = obs[name](state)
                for st in snapshot_times:
                    if np.isclose(t, st):
                        for b in snapshot_blocks:
                            snaps[(st, b)][r] = dict(state.blocks())[b]
            events[r] = n_ev

    if workers <= 1 or K < 2 * workers:
        run_range(0, K)
    else:
        bounds = np.linspace(0, K, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(run_range, bounds[i], bounds[i + 1])
                    for i in range(workers)]
            for f in futs:
                f.result()

    channels = {}
    for oi, name in enumerate(names):
        mean = values[:, :, oi].mean(axis=0)
        if K > 1:
            stderr = values[:, :, oi].std(axis=0, ddof=1) / math.sqrt(K)
        else:
            stderr = np.full(len(times), np.nan)
        channels[name] = (mean, stderr)
    return TrajectoryRecord(times=times, channels=channels,
                            event_count=int(events.sum()), replicas=K,
                            snapshots=snaps)


# ---------------------------------------------------------------------------
# snapshot dump format: rows of "replica_index,particle_index,vx,vy,vz"

def write_snapshot_csv(path, arr: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("replica_index,particle_index,vx,vy,vz\r\n")
        for r in range(arr.shape[0]):
            for p in range(arr.shape[1]):
                fh.write("%d,%d,%.17g,%.17g,%.17g\r\n"
                         % (r, p, arr[r, p, 0], arr[r, p, 1], arr[r, p, 2]))


def read_snapshot_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    K = int(data[:, 0].max()) + 1
    P = int(data[:, 1].max()) + 1
    out = np.empty((K, P, 3))
    out[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2:5]
    return out


# ---------------------------------------------------------------------------
# coupled reservoir / thermostat ensembles

def run_coupled_ensemble(spec: GeneratorSpec, T0: float, K: int,
                         t_end: float, seed: int = 0, workers: int = 1):
    """K coupled pairs of (reservoir run, thermostat run) system blocks.

    ``spec`` must be a two-reservoir configuration; the coupled copy
    realizes the matching two-thermostat dynamics on the same event
    skeleton with maximally coupled interaction partners, so the
    difference between the two system blocks estimates the
    finite-reservoir effect with far smaller variance than independent
    runs.  Both copies start from the same Gamma_T0 system draw.
    Returns (reservoir_samples, thermostat_samples), each (K, M, 3).
    """
    if spec.topology != "two_reservoirs":
        raise ValueError("coupled ensembles need a two_reservoirs spec")
    if K < 1:
        raise ValueError("K must be >= 1")
    check_temperature(T0)
    rate = total_rate(spec)
    cats = spec.category_rates()
    codes = np.array([c for c, _ in cats], dtype=np.int64)
    cum = np.cumsum([r for _, r in cats])
    sqrt_tp = math.sqrt(spec.T_plus)
    sqrt_tm = math.sqrt(spec.T_minus)

    res_out = np.empty((K, spec.M, 3))
    ther_out = np.empty((K, spec.M, 3))

    def run_range(lo, hi):
        for r in range(lo, hi):
            rng = RandomSource(seed, r)
            sys_v = sample_maxwellian(T0, rng, size=spec.M)
            til_v = sys_v.copy()
            rp_v = sample_maxwellian(spec.T_plus, rng, size=spec.N)
            rm_v = sample_maxwellian(spec.T_minus, rng, size=spec.N)
            touched_p = np.zeros(spec.N, dtype=np.uint8)
            touched_m = np.zeros(spec.N, dtype=np.uint8)
            t = 0.0
            while True:
                expected = rate * (t_end - t)
                n = int(expected + 10.0 * math.sqrt(expected + 1.0) + 16.0)
                exps = rng.exponential(size=n)
                unis = rng.uniform(size=(n, 3))
                norms = rng.normal(size=(n, 6))
                _, t, done = _kernels.run_coupled_events(
                    sys_v, til_v, rp_v, rm_v, touched_p, touched_m,
                    t, t_end, codes, cum, rate, sqrt_tp, sqrt_tm,
                    exps, unis, norms)
                if done:
                    break
            res_out[r] = sys_v
            ther_out[r] = til_v

    if workers <= 1 or K < 2 * workers:
        run_range(0, K)
    else:
        bounds = np.linspace(0, K, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(run_range, bounds[i], bounds[i + 1])
                    for i in range(workers)]
            for f in futs:
                f.result()
    return res_out, ther_out
