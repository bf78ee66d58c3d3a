"""Photon-counting layer: intensity traces, click streams, g2 correlation.

Chaotic light is modelled as the squared modulus of a complex
Ornstein-Uhlenbeck field (the minimal model with exact Siegert behavior,
g2(tau) = 1 + exp(-2 tau / tau_c)); laser light as a constant rate with a
small optional ripple; a Poisson control as a constant rate.

All randomness flows through numpy's counter-based Philox generator keyed
on an explicit seed, so every product is reproducible bit for bit.

The correlator histograms pairwise delays between two detectors with a
two-pointer sweep over bin-quantized timestamps (cost O(Na + Nb + pairs in
the lag window)).  Quantizing each timestamp before differencing makes the
zero-lag bin average the correlation function with a triangular kernel,
which is exactly what :func:`binning_washout` predicts for chaotic light.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .errors import PhysicsError

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:          # pragma: no cover - numba present in normal envs
    _HAVE_NUMBA = False

REGIMES = ("thermal", "laser", "poisson")

_CLICKS_MAGIC = b"CLKS"
_CLICKS_VERSION = 1
_HEADER = struct.Struct("<4sIIQQ")


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class IntensityTrace:
    """Sampled photon rate, counts/s, on a regular grid."""

    sample_period: float
    samples: np.ndarray
    regime: str

    def __post_init__(self):
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if np.any(self.samples < 0):
            raise ValueError("intensity samples must be >= 0")

    @property
    def duration(self) -> float:
        return self.sample_period * self.samples.size


@dataclass(frozen=True)
class ClickStream:
    """Detector timestamps in seconds, strictly increasing, in [0, duration]."""

    detector_id: int
    timestamps: np.ndarray
    duration: float

    def __post_init__(self):
        t = self.timestamps
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if t[0] < 0 or t[-1] > self.duration:
                raise ValueError("timestamps must lie within [0, duration]")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def mean_rate(self) -> float:
        return self.timestamps.size / self.duration


@dataclass(frozen=True)
class CorrelationResult:
    """Binned g2 estimate, symmetric about zero lag."""

    lags: np.ndarray             # bin centers, s
    g2: np.ndarray
    sigma: np.ndarray            # sqrt(counts)-based absolute uncertainty
    counts: np.ndarray           # raw pair counts per bin
    bin_width: float
    total_pairs: int


def simulate_intensity(regime: str, mean_rate: float, coherence_time: float,
                       duration: float, sample_period: float, seed: int,
                       laser_ripple: float = 1e-2) -> IntensityTrace:
    """Synthesize an intensity trace for one statistical regime.

    thermal: |alpha|^2 of a complex Ornstein-Uhlenbeck field with
    correlation time ``coherence_time``, stationary mean ``mean_rate``
    (ideal g2(0) = 2).  laser: constant rate with a relative rms ripple.
    poisson: constant rate.  The thermal regime insists on
    sample_period <= coherence_time / 10 and duration >= 100 * coherence
    times so the process is neither undersampled nor unconverged.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if mean_rate <= 0:
        raise PhysicsError("mean_rate must be positive")
    if sample_period <= 0 or duration <= 0:
        raise PhysicsError("sample_period and duration must be positive")
    n = int(round(duration / sample_period))
    if n < 1:
        raise PhysicsError("duration shorter than one sample period")

    if regime == "poisson":
        samples = np.full(n, mean_rate)
    elif regime == "laser":
        rng = _rng(seed)
        ripple = laser_ripple * rng.standard_normal(n)
        samples = np.clip(mean_rate * (1.0 + ripple), 0.0, None)
    else:
        if coherence_time <= 0:
            raise PhysicsError("thermal regime needs a positive coherence time")
        if sample_period > coherence_time / 10.0:
            raise PhysicsError(
                f"sample_period {sample_period:g} undersamples coherence "
                f"time {coherence_time:g} (need <= tau_c/10)")
        if duration < 100.0 * coherence_time:
            raise PhysicsError(
                f"duration {duration:g} too short for coherence time "
                f"{coherence_time:g} (need >= 100 tau_c)")
        rng = _rng(seed)
        a = np.exp(-sample_period / coherence_time)
        sigma_field = np.sqrt(mean_rate)
        # exact AR(1) update of the complex field, stationary start
        noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) \
            * (sigma_field * np.sqrt((1.0 - a * a) / 2.0))
        start = (rng.standard_normal() + 1j * rng.standard_normal()) \
            * (sigma_field / np.sqrt(2.0))
        alpha = lfilter([1.0], [1.0, -a], noise, zi=np.array([a * start]))[0]
        samples = np.abs(alpha) ** 2
    return IntensityTrace(sample_period, samples, regime)


def poissonize(trace: IntensityTrace, seed: int) -> tuple:
    """Sample the trace as an inhomogeneous Poisson process, split 50/50.

    Photons are drawn per sample slot and placed uniformly inside it, then
    each click is routed independently to detector A or B (the two-counter
    beam-splitter arrangement).  Exact duplicate timestamps (possible at
    float resolution) are dropped to keep streams strictly increasing.
    """
    rng = _rng(seed)
    p = trace.sample_period
    counts = rng.poisson(trace.samples * p)
    total = int(counts.sum())
    starts = np.repeat(np.arange(trace.samples.size, dtype=np.float64) * p,
                       counts)
    times = np.sort(starts + rng.random(total) * p)
    keep = np.empty(times.size, bool)
    if times.size:
        keep[0] = True
        keep[1:] = np.diff(times) > 0.0
    times = times[keep]
    to_b = rng.random(times.size) < 0.5
    dur = trace.duration
    return (ClickStream(0, times[~to_b], dur), ClickStream(1, times[to_b], dur))


# ---------------------------------------------------------------------------
# Correlator
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:
    @njit(nogil=True, cache=True)
    def _pair_hist_kernel(fa, fb, kmax, lo0, hi0, hist):  # pragma: no cover
        lo = lo0
        hi = hi0
        nb = fb.size
        for i in range(fa.size):
            ka = fa[i]
            while lo < nb and fb[lo] < ka - kmax:
                lo += 1
            while hi < nb and fb[hi] <= ka + kmax:
                hi += 1
            for j in range(lo, hi):
                hist[fb[j] - ka + kmax] += 1


def _pair_hist_numpy(fa, fb, kmax, hist, chunk=500_000):
    """Vectorized fallback: same histogram as the numba kernel, chunked so
    the materialized pair index never exceeds ~chunk entries."""
    lo = np.searchsorted(fb, fa - kmax, side="left")
    hi = np.searchsorted(fb, fa + kmax, side="right")
    counts = hi - lo
    i0 = 0
    while i0 < fa.size:
        i1 = i0 + 1
        block = int(counts[i0])
        while i1 < fa.size and block + counts[i1] <= chunk:
            block += int(counts[i1])
            i1 += 1
        if block:
            # concatenated aranges [lo_i, hi_i) for the chunk
            c = counts[i0:i1]
            starts = np.repeat(np.cumsum(c) - c, c)
            idx = np.repeat(lo[i0:i1], c) + np.arange(block) - starts
            delta = fb[idx] - np.repeat(fa[i0:i1], c) + kmax
            hist += np.bincount(delta, minlength=hist.size).astype(np.int64)
        i0 = i1


def _pair_histogram(fa, fb, kmax, shards=1, engine="auto"):
    """Histogram of quantized delays fb - fa within +-kmax bins.

    Sharding splits the a-stream into contiguous chunks whose integer
    histograms are summed, so sharded and serial runs agree exactly.
    """
    nbins = 2 * kmax + 1
    use_numba = _HAVE_NUMBA and engine in ("auto", "numba")
    if engine == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba engine requested but numba is unavailable")
    shards = max(1, int(shards))
    bounds = np.linspace(0, fa.size, shards + 1).astype(np.int64)
    out = np.zeros(nbins, np.int64)
    for s in range(shards):
        a = fa[bounds[s]:bounds[s + 1]]
        if a.size == 0:
            continue
        part = np.zeros(nbins, np.int64)
        if use_numba:
            lo0 = int(np.searchsorted(fb, a[0] - kmax, side="left"))
            _pair_hist_kernel(a, fb, kmax, lo0, lo0, part)
        else:
            _pair_hist_numpy(a, fb, kmax, part)
        out += part
    return out


def g2_cross(a: ClickStream, b: ClickStream, bin_width: float,
             max_lag: float, shards: int = 1, engine: str = "auto",
             _exclude_self: bool = False) -> CorrelationResult:
    """Cross-correlation g2(tau) between two click streams.

    Delays t_b - t_a are histogrammed over bins centered at k*bin_width,
    |k| <= round(max_lag/bin_width), and normalized per bin by
    r_a * r_b * bin_width * T_k with T_k the lag-dependent overlap time
    (edge correction).  Inputs must be sorted; they are never sorted
    silently.
    """
    if a.timestamps.size == 0 or b.timestamps.size == 0:
        raise ValueError("empty click stream")
    for s in (a, b):
        if np.any(np.diff(s.timestamps) <= 0):
            raise ValueError("unsorted click stream (refusing to sort silently)")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if max_lag < bin_width:
        raise ValueError("max_lag must be at least one bin")

    kmax = int(round(max_lag / bin_width))
    fa = np.floor(a.timestamps / bin_width).astype(np.int64)
    fb = np.floor(b.timestamps / bin_width).astype(np.int64)
    hist = _pair_histogram(fa, fb, kmax, shards=shards, engine=engine)
    if _exclude_self:
        hist[kmax] -= a.timestamps.size

    duration = min(a.duration, b.duration)
    k = np.arange(-kmax, kmax + 1)
    t_eff = duration - np.abs(k) * bin_width
    if np.any(t_eff <= 0):
        raise ValueError("max_lag exceeds the stream duration")
    rate_a = a.timestamps.size / duration
    rate_b = b.timestamps.size / duration
    norm = rate_a * rate_b * bin_width * t_eff
    g2 = hist / norm
    sigma = np.sqrt(np.maximum(hist, 1)) / norm
    return CorrelationResult(k * bin_width, g2, sigma, hist.copy(),
                             bin_width, int(hist.sum()))


def g2_auto(a: ClickStream, bin_width: float, max_lag: float,
            shards: int = 1, engine: str = "auto") -> CorrelationResult:
    """Autocorrelation of one stream, zero-lag self-pairs excluded."""
    return g2_cross(a, a, bin_width, max_lag, shards=shards, engine=engine,
                    _exclude_self=True)


def binning_washout(coherence_time: float, bin_width: float) -> float:
    """Predicted zero-lag g2 of chaotic light after finite binning.

    Both photons of a pair are quantized to bins independently, so the
    ideal g2(tau) = 1 + exp(-2|tau|/tau_c) is averaged with a triangular
    kernel of full width 2*bin_width:

        g2_bin(0) = 1 + (2/x^2) (x - 1 + e^-x),   x = 2*bin_width/tau_c.

    Tends to 2 for vanishing bins and to 1 when the bin dwarfs the
    coherence time.
    """
    if coherence_time <= 0 or bin_width <= 0:
        raise ValueError("coherence_time and bin_width must be positive")
    x = 2.0 * bin_width / coherence_time
    if x < 1e-6:
        return 2.0 - x / 3.0
    return 1.0 + 2.0 * (x - 1.0 + np.exp(-x)) / (x * x)


def invert_washout(target_g2: float, bin_width: float) -> float:
    """Coherence time at which binning washes the thermal peak to target."""
    if not 1.0 < target_g2 < 2.0:
        raise ValueError("target g2(0) must be strictly between 1 and 2")
    return brentq(lambda tc: binning_washout(tc, bin_width) - target_g2,
                  bin_width * 1e-6, bin_width * 1e6, rtol=1e-13)


# ---------------------------------------------------------------------------
# Click stream files
# ---------------------------------------------------------------------------

def write_clickstream(stream: ClickStream, path) -> int:
    """Write the binary format; returns the number of stored clicks.

    Little-endian header (magic "CLKS", version u32, detector u32,
    count u64, duration u64 in ns) followed by count u64 nanosecond
    timestamps, strictly increasing.  Sub-nanosecond collisions created by
    quantization are dropped (at most one click per nanosecond).
    """
    ns = np.round(stream.timestamps * 1e9).astype(np.uint64)
    if ns.size:
        keep = np.empty(ns.size, bool)
        keep[0] = True
        keep[1:] = np.diff(ns.astype(np.int64)) > 0
        ns = ns[keep]
    duration_ns = int(round(stream.duration * 1e9))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_CLICKS_MAGIC, _CLICKS_VERSION,
                              stream.detector_id, ns.size, duration_ns))
        fh.write(ns.astype("<u8").tobytes())
    return int(ns.size)


def read_clickstream(path) -> ClickStream:
    """Read the binary format back into a ClickStream."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, det, count, duration_ns = _HEADER.unpack(header)
        if magic != _CLICKS_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _CLICKS_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        data = np.frombuffer(fh.read(8 * count), dtype="<u8")
        if data.size != count:
            raise ValueError(f"{path}: truncated timestamp block")
    return ClickStream(det, data.astype(np.float64) * 1e-9, duration_ns * 1e-9)


def write_clickstream_text(stream: ClickStream, path) -> None:
    """Plain-text format: one timestamp in seconds per line."""
    with open(path, "w") as fh:
        for t in stream.timestamps:
            fh.write(f"{float(t)!r}\n")


def read_clickstream_text(path, detector_id: int = 0,
                          duration: float | None = None) -> ClickStream:
    times = np.loadtxt(path, ndmin=1, dtype=np.float64)
    if duration is None:
        duration = float(times[-1]) if times.size else 1.0
    return ClickStream(detector_id, times, duration)
