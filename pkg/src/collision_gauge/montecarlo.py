"""Event-by-event sampling of gas collisions on the sensor.

This module is the brute-force counterpart of ``kinetics``: it draws
individual collisions from the same microphysics (flux-weighted arrival
speeds, Bernoulli choice of specular versus diffuse, thermalized
re-emission) and emits Poisson-timed event streams.  Agreement between
its histograms and the closed forms is the main cross-check of both.

Sampling recipe per collision:

- incoming normal speed from the flux-weighted Maxwell density
  p(v) dv = (v / vbar^2) exp(-v^2 / 2 vbar^2) dv, via the exact inverse
  CDF v = vbar sqrt(-2 ln(1 - u));
- scatter kind Bernoulli(alpha);
- specular: impulse 2 m_g v_in along the surface normal;
- diffuse: outgoing normal speed drawn from the same flux-weighted
  density (cosine-law re-emission) at the wall temperature, impulse
  m_g (v_in + v_out);
- projected readout (sphere): the patch orientation cosine mu is
  uniform on [-1, 1] and the axis impulse is the normal transfer times
  mu, stored signed.  Tangential momentum exchange in diffuse
  scattering is off by default so the sampled axis spectra correspond
  to the normal-transfer kernels; ``include_tangential=True`` adds the
  in-plane Maxwellian exchange for studies that need it.

A wall held at a different temperature than the gas re-emits diffuse
molecules at the accommodation-scaled surface temperature
``alpha * T_surface``; the analytic module rejects that case, this one
supports it.

Determinism: the stream is generated in fixed-duration chunks, each
from its own generator seeded by hashing (seed, species index, chunk
index) through ``numpy.random.SeedSequence``.  Chunks are independent,
so they can be produced in any order or in parallel without changing
the merged, time-sorted result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import DomainError
from .kinetics import GasSpecies, MomentumSpectrum, SensorGeometry

KIND_SPECULAR = 0
KIND_DIFFUSE = 1
KIND_LABELS = ("specular", "diffuse")

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CollisionEvent:
    """One collision: arrival time, normal-direction impulse magnitude,
    scatter kind, species, and (for projected readout) the signed axis
    component."""

    time: Optional[float]
    impulse: float
    kind: str
    species: str
    axis_impulse: Optional[float] = None


@dataclass
class EventStream:
    """A time-ordered set of collisions stored as parallel arrays.

    ``impulses`` holds the (nonnegative) surface-normal momentum
    transfer; ``axis_impulses`` is present only for projected-axis
    readout and is signed.  ``kinds`` uses KIND_SPECULAR / KIND_DIFFUSE.
    """

    duration: float
    times: np.ndarray
    impulses: np.ndarray
    kinds: np.ndarray
    species_index: np.ndarray
    species_names: list
    sensor: SensorGeometry
    axis_impulses: Optional[np.ndarray] = None
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        for name in ("impulses", "kinds", "species_index"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"event stream arrays disagree in length ({name})")
        if self.axis_impulses is not None and len(self.axis_impulses) != n:
            raise DomainError("event stream arrays disagree in length (axis_impulses)")
        if n and (self.times[0] < 0.0 or self.times[-1] > self.duration):
            raise DomainError("event times must lie within [0, duration]")
        if n and np.any(np.diff(self.times) < 0.0):
            raise DomainError("event times must be sorted")

    def __len__(self):
        return len(self.times)

    @property
    def analysis_impulses(self):
        """Magnitudes the detection/inference chain sees: |axis| for a
        projected readout, the normal transfer otherwise."""
        if self.axis_impulses is not None:
            return np.abs(self.axis_impulses)
        return self.impulses

    def events(self) -> Iterator[CollisionEvent]:
        axis = self.axis_impulses
        for i in range(len(self.times)):
            yield CollisionEvent(
                time=float(self.times[i]),
                impulse=float(self.impulses[i]),
                kind=KIND_LABELS[self.kinds[i]],
                species=self.species_names[self.species_index[i]],
                axis_impulse=None if axis is None else float(axis[i]),
            )

    def select(self, mask):
        """New stream containing the masked subset (same duration)."""
        return EventStream(
            duration=self.duration,
            times=self.times[mask],
            impulses=self.impulses[mask],
            kinds=self.kinds[mask],
            species_index=self.species_index[mask],
            species_names=self.species_names,
            sensor=self.sensor,
            axis_impulses=None if self.axis_impulses is None else self.axis_impulses[mask],
            seed=self.seed,
            metadata=dict(self.metadata),
        )


def _flux_speed(u, vbar):
    """Inverse CDF of the flux-weighted normal-speed density."""
    return vbar * np.sqrt(-2.0 * np.log1p(-u))


def _emission_temperature(species: GasSpecies, sensor: SensorGeometry, alpha):
    if sensor.surface_temperature is None:
        return species.temperature
    return alpha * sensor.surface_temperature


def _draw_impulses(n, species: GasSpecies, sensor: SensorGeometry, rng,
                   include_tangential=False):
    """Vectorized core sampler; returns (normal impulses, kinds, axis or None)."""
    alpha = sensor.accommodation if species.accommodation is None else species.accommodation
    m = species.mass
    vbar = species.thermal_velocity

    v_in = _flux_speed(rng.random(n), vbar)
    diffuse = rng.random(n) < alpha
    t_out = _emission_temperature(species, sensor, alpha)
    vbar_out = math.sqrt(t_out / species.temperature) * vbar if t_out != species.temperature \
        else vbar
    v_out = _flux_speed(rng.random(n), vbar_out)

    dp_normal = np.where(diffuse, m * (v_in + v_out), 2.0 * m * v_in)
    kinds = diffuse.astype(np.uint8)

    axis = None
    if sensor.readout == "projected_axis":
        mu = rng.uniform(-1.0, 1.0, n)
        axis = dp_normal * mu
        if include_tangential:
            # in-plane exchange: incoming and outgoing tangential velocity
            # components along the axis-tangent direction are independent
            # Maxwellians; specular reflection conserves them exactly
            vbar_t_out = vbar_out
            dpt = m * (rng.standard_normal(n) * vbar - rng.standard_normal(n) * vbar_t_out)
            axis = axis + np.where(diffuse, dpt, 0.0) * np.sqrt(1.0 - mu**2)
    return dp_normal, kinds, axis


def sample_impulses(n, species: GasSpecies, sensor: SensorGeometry, rng,
                    include_tangential=False):
    """Draw ``n`` collision impulses (no arrival times).

    Returns (impulses, kinds) for an isotropic readout and
    (impulses, kinds, axis_impulses) for a projected one.
    """
    if n < 0:
        raise DomainError(f"sample count must be non-negative, got {n}")
    dp, kinds, axis = _draw_impulses(int(n), species, sensor, rng, include_tangential)
    if axis is None:
        return dp, kinds
    return dp, kinds, axis


def sample_impulse(species: GasSpecies, sensor: SensorGeometry, rng) -> CollisionEvent:
    """Draw a single collision; the event carries no arrival time."""
    dp, kinds, axis = _draw_impulses(1, species, sensor, rng)
    return CollisionEvent(
        time=None,
        impulse=float(dp[0]),
        kind=KIND_LABELS[kinds[0]],
        species=species.name,
        axis_impulse=None if axis is None else float(axis[0]),
    )


def arrival_rate(species: GasSpecies, sensor: SensorGeometry):
    """Total collision rate n A vbar / sqrt(2 pi), all impulses counted."""
    return species.density * sensor.area * species.thermal_velocity / _SQRT_2PI


def sample_event_stream(duration, species_list: Sequence[GasSpecies],
                        sensor: SensorGeometry, seed, chunk_duration=None,
                        include_tangential=False) -> EventStream:
    """Generate a Poisson-timed collision stream for a gas mixture.

    Each species arrives as an independent homogeneous Poisson process
    at its full collision rate; impulses are drawn per event.  The
    stream is reproducible: the same (seed, parameters) always yield
    the same events.  ``chunk_duration`` partitions the timeline for
    generation (default: one chunk); it is part of the parameters.
    """
    if duration <= 0.0:
        raise DomainError(f"duration must be positive, got {duration}")
    species_list = list(species_list)
    if chunk_duration is None:
        chunk_duration = duration
    if chunk_duration <= 0.0:
        raise DomainError(f"chunk duration must be positive, got {chunk_duration}")
    n_chunks = max(1, math.ceil(duration / chunk_duration))
    projected = sensor.readout == "projected_axis"

    times, dps, kinds, spidx, axes = [], [], [], [], []
    for i_sp, sp in enumerate(species_list):
        rate = arrival_rate(sp, sensor)
        for i_ch in range(n_chunks):
            t0 = i_ch * chunk_duration
            t1 = min(duration, t0 + chunk_duration)
            if t1 <= t0:
                continue
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence((seed, i_sp, i_ch))))
            count = rng.poisson(rate * (t1 - t0))
            t = np.sort(rng.random(count)) * (t1 - t0) + t0
            dp, kind, axis = _draw_impulses(count, sp, sensor, rng, include_tangential)
            times.append(t)
            dps.append(dp)
            kinds.append(kind)
            spidx.append(np.full(count, i_sp, dtype=np.uint16))
            if projected:
                axes.append(axis)

    if times:
        times = np.concatenate(times)
        dps = np.concatenate(dps)
        kinds = np.concatenate(kinds)
        spidx = np.concatenate(spidx)
        axis_all = np.concatenate(axes) if projected else None
        order = np.lexsort((spidx, times))
        times, dps, kinds, spidx = times[order], dps[order], kinds[order], spidx[order]
        if projected:
            axis_all = axis_all[order]
    else:
        times = np.empty(0)
        dps = np.empty(0)
        kinds = np.empty(0, dtype=np.uint8)
        spidx = np.empty(0, dtype=np.uint16)
        axis_all = np.empty(0) if projected else None

    return EventStream(
        duration=duration,
        times=times,
        impulses=dps,
        kinds=kinds,
        species_index=spidx,
        species_names=[sp.name for sp in species_list],
        sensor=sensor,
        axis_impulses=axis_all,
        seed=seed,
        metadata={
            "chunk_duration": chunk_duration,
            "n_chunks": n_chunks,
            "include_tangential": include_tangential,
            "rates": [arrival_rate(sp, sensor) for sp in species_list],
        },
    )


def histogram_spectrum(impulses, duration, bins=100, dp_range=None,
                       metadata=None) -> MomentumSpectrum:
    """Histogram estimate of the rate density from raw impulse values.

    Values are counts / (duration * bin width); errors are Poisson.
    """
    if duration <= 0.0:
        raise DomainError("duration must be positive")
    data = np.asarray(impulses, dtype=float)
    if dp_range is None:
        hi = float(data.max()) * (1 + 1e-9) if len(data) else 1.0
        dp_range = (0.0, hi)
    counts, edges = np.histogram(data, bins=bins, range=dp_range)
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    density = counts / (duration * widths)
    errors = np.sqrt(counts) / (duration * widths)
    meta = {"kind": "empirical", "n_events": int(len(data)), "duration_s": float(duration)}
    meta.update(metadata or {})
    return MomentumSpectrum(
        dp=centers, density=density, errors=errors, bin_edges=edges, metadata=meta)


def empirical_spectrum(stream: EventStream, bins=100, dp_range=None) -> MomentumSpectrum:
    """Histogram estimate of the rate density from an event stream.

    Uses the analysis impulses (|axis| for projected readout).
    """
    return histogram_spectrum(
        stream.analysis_impulses, stream.duration, bins=bins, dp_range=dp_range,
        metadata={
            "species": stream.species_names,
            "readout": stream.sensor.readout,
        },
    )


def spectrum_chi_square(stream: EventStream, rate_density, bins=100,
                        dp_range=None, min_expected=10.0):
    """Pearson chi-square of binned event counts against an analytic density.

    ``rate_density`` maps impulse (kg m/s) to events/s/(kg m/s) and must
    describe the same impulse variable the stream's analysis impulses
    use.  Expected counts are duration times the bin integral of the
    density (7-point Gauss-Legendre per bin; the final bin's expectation
    is extended to infinity so the partition is exhaustive).  Adjacent
    bins are merged until every expected count reaches ``min_expected``.
    Returns (chi2, dof, p_value).
    """
    data = stream.analysis_impulses
    if dp_range is None:
        hi = float(data.max()) * (1 + 1e-9) if len(data) else 1.0
        dp_range = (0.0, hi)
    counts, edges = np.histogram(data, bins=bins, range=dp_range)
    # events above the last edge belong to the (open-ended) final bin
    counts = counts.astype(float)
    counts[-1] += np.count_nonzero(data >= edges[-1])

    nodes, weights = np.polynomial.legendre.leggauss(7)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    samples = mid[:, None] + half[:, None] * nodes[None, :]
    dens = np.asarray(rate_density(samples.ravel()), dtype=float).reshape(samples.shape)
    expected = stream.duration * (dens @ weights) * half
    tail, _ = integrate.quad(lambda dp: float(rate_density(dp)), edges[-1], np.inf, limit=200)
    expected[-1] += stream.duration * tail

    # merge adjacent bins until each expectation is usable
    merged_obs, merged_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            merged_obs.append(acc_o)
            merged_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if merged_exp:
            merged_obs[-1] += acc_o
            merged_exp[-1] += acc_e
        else:
            merged_obs.append(acc_o)
            merged_exp.append(acc_e)
    obs = np.asarray(merged_obs)
    exp = np.asarray(merged_exp)
    if np.any(exp <= 0.0):
        raise DomainError("expected counts must be positive after merging")

    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(exp)
    p = float(stats.chi2.sf(chi2, dof))
    return chi2, dof, p
