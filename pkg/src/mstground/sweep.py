"""Frequency sweeps, resonance refinement and spectrum feature extraction."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
import os

import numpy as np

from .errors import MSTError
from .solver import evaluate_field, insertion_loss, assemble, solve

WORKERS_ENV = "MSTGROUND_MAX_WORKERS"


@dataclass(frozen=True)
class SpectrumEntry:
    frequency: float
    il: float
    p_total: complex
    p_reference: complex
    flags: frozenset = frozenset()
    error: str = None


@dataclass
class ILSpectrum:
    entries: list = field(default_factory=list)

    @property
    def frequencies(self):
        return np.array([e.frequency for e in self.entries])

    @property
    def il(self):
        return np.array([e.il for e in self.entries])

    def __len__(self):
        return len(self.entries)

    def errors(self):
        return [e for e in self.entries if e.error is not None]


@dataclass(frozen=True)
class Extremum:
    frequency: float
    il: float
    kind: str


def solve_frequency(cfg, frequency):
    """One assemble/solve/evaluate pass; errors are captured in the entry."""
    try:
        k = cfg.medium.wavenumber(frequency)
        system = assemble(cfg.scene, cfg.scatterer, cfg.ground, k, cfg.order, cfg.medium, frequency)
        coeffs = solve(system)
        value = evaluate_field(cfg.scene, system, coeffs, cfg.scene.receiver)
        il, floored = insertion_loss(value)
        flags = set(system.flags)
        if floored:
            flags.add("il_floor")
        return SpectrumEntry(float(frequency), il, value.p_total, value.p_reference, frozenset(flags))
    except MSTError as exc:
        return SpectrumEntry(
            float(frequency), math.nan, complex("nan"), complex("nan"), frozenset({"error"}), str(exc)
        )


def _solve_task(args):
    return solve_frequency(*args)


def worker_count(requested=None):
    """Resolve the parallelism degree; the environment variable caps it."""
    n = requested or 1
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, int(n))


def _map(cfg, freqs, workers):
    if workers <= 1 or len(freqs) < 2:
        return [solve_frequency(cfg, f) for f in freqs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_task, [(cfg, f) for f in freqs], chunksize=8))


class SweepAborted(MSTError):
    def __init__(self, entry):
        self.entry = entry
        super().__init__(f"sweep aborted at {entry.frequency:g} Hz: {entry.error}")


def run_sweep(cfg, frequencies=None, workers=None, fail_fast=False, refine=True):
    """IL spectrum over the configured grid (or explicit ``frequencies``).

    Output is ordered by frequency and independent of ``workers``.  Points
    flagged near-singular are refined by bisecting the adjacent intervals up
    to ``cfg.refine_depth`` levels; base grid points are never dropped.
    """
    freqs = cfg.grid.frequencies() if frequencies is None else np.asarray(frequencies, float)
    workers = worker_count(workers)
    base = _map(cfg, list(freqs), workers)
    if fail_fast:
        for e in base:
            if e.error is not None:
                raise SweepAborted(e)
    entries = {e.frequency: e for e in base}
    if refine and cfg.refine_depth > 0:
        intervals = set()
        for i, e in enumerate(base):
            if "near_singular" in e.flags:
                if i > 0:
                    intervals.add((base[i - 1].frequency, e.frequency))
                if i + 1 < len(base):
                    intervals.add((e.frequency, base[i + 1].frequency))
        depth = 0
        while intervals and depth < cfg.refine_depth:
            mids = sorted({0.5 * (a + b) for a, b in intervals} - set(entries))
            new = _map(cfg, mids, workers)
            nxt = set()
            for (a, b) in sorted(intervals):
                m = 0.5 * (a + b)
                found = next((e for e in new if e.frequency == m), None)
                if found is None:
                    continue
                if fail_fast and found.error is not None:
                    raise SweepAborted(found)
                entries[m] = SpectrumEntry(
                    found.frequency, found.il, found.p_total, found.p_reference,
                    found.flags | {"refined"}, found.error,
                )
                if "near_singular" in found.flags:
                    nxt.add((a, m))
                    nxt.add((m, b))
            intervals = nxt
            depth += 1
    return ILSpectrum([entries[f] for f in sorted(entries)])


def _vertex(f, v, i):
    """Parabolic vertex through points i-1, i, i+1 (non-uniform spacing)."""
    x0, x1, x2 = f[i - 1], f[i], f[i + 1]
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    d = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d
    if a == 0:
        return x1, y1
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x1, y1
    c = y1 - a * x1 * x1 - b * x1
    return xv, a * xv * xv + b * xv + c


def find_extrema(spectrum, window):
    """Local peaks and dips of IL inside ``window = (f_lo, f_hi)``.

    Three-point comparison with parabolic refinement.  On a flat top or
    bottom the lowest frequency wins.  Failed (NaN) entries are skipped.
    """
    lo, hi = window
    f = spectrum.frequencies
    v = spectrum.il
    ok = np.isfinite(v)
    f, v = f[ok], v[ok]
    inside = np.nonzero((f >= lo) & (f <= hi))[0]
    if f.size == 0 or inside.size == 0:
        raise ValueError(f"no spectrum points inside window [{lo:g}, {hi:g}] Hz")
    out = []
    for i in inside:
        if i == 0 or i == f.size - 1:
            continue
        if v[i] > v[i - 1] and v[i] >= v[i + 1]:
            kind = "peak"
        elif v[i] < v[i - 1] and v[i] <= v[i + 1]:
            kind = "dip"
        else:
            continue
        fv, iv = _vertex(f, v, i)
        out.append(Extremum(float(fv), float(iv), kind))
    return out


def global_extremum(spectrum, window, kind="peak"):
    """Largest peak (or deepest dip) in the window, ties to the lowest frequency."""
    ext = [e for e in find_extrema(spectrum, window) if e.kind == kind]
    if not ext:
        return None
    key = (lambda e: (-e.il, e.frequency)) if kind == "peak" else (lambda e: (e.il, e.frequency))
    return min(ext, key=key)


def two_ray_dip(source, receiver, sound_speed=344.0, index=1):
    """Frequency of the ``index``-th destructive interference over a rigid plane.

    Direct and specularly reflected paths differ by delta; the dips sit at
    f = (2 index - 1) c / (2 delta).
    """
    direct = math.hypot(receiver.x - source.x, receiver.y - source.y)
    reflected = math.hypot(receiver.x - source.x, receiver.y + source.y)
    delta = reflected - direct
    if delta <= 0:
        raise ValueError("no path difference: source or receiver on the ground")
    return (2 * index - 1) * sound_speed / (2.0 * delta)
