"""Adjacent-segment spectral discrepancy loss.

Filtered features are cut at ground-truth action boundaries, each
segment's amplitude spectrum is resampled onto a shared fixed-length
frequency axis, and consecutive segments are pushed apart by penalizing
small mean absolute spectral differences.  Amplitude (not complex) spectra
make the loss invariant to circular time shifts within a segment.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import tensor as tz
from .errors import BoundaryError
from .spectral import linear_resample
from .tensor import Tensor

LOG_FLOOR = 1e-12


@dataclass
class SegmentSpectrum:
    """Resampled amplitude spectrum of one action segment (C x S_f x V)."""

    values: Tensor
    source_frames: tuple[int, int] = (0, 0)  # half-open [start, end)
    class_id: int = -1


def split_by_boundaries(f_f: Tensor, boundaries) -> list[Tensor]:
    """Cut C x T x V at the given frame indices into N = len(boundaries)+1
    pieces whose concatenation along time reproduces the input exactly."""
    t = f_f.shape[1]
    cuts = [0] + list(boundaries) + [t]
    for a, b in zip(cuts, cuts[1:]):
        if not 0 <= a < b <= t:
            raise BoundaryError(
                f"boundaries {list(boundaries)} do not partition [0, {t})"
            )
    return [tz.narrow(f_f, 1, a, b - a) for a, b in zip(cuts, cuts[1:])]


def segment_spectrum(
    seg: Tensor,
    target_bins: int,
    source_frames: tuple[int, int] = (0, 0),
    class_id: int = -1,
    sample_rate: float = 1.0,
) -> SegmentSpectrum:
    """Amplitude spectrum of one segment resampled to ``target_bins``.

    Regardless of segment length the resampled axis spans the same
    physical range [0, sample_rate/2], so segments of different durations
    become directly comparable.
    """
    spec = tz.rfft(seg, axis=1, sample_rate=sample_rate)
    amp = tz.amplitude(spec)
    values = linear_resample(amp, target_bins, axis=1)
    return SegmentSpectrum(values=values, source_frames=source_frames, class_id=class_id)


def adjacent_discrepancy_loss(
    spectra: list[SegmentSpectrum], alpha: float
) -> tuple[Tensor, bool]:
    """Mean over consecutive pairs of -log(tanh(alpha * E|diff|)).

    Returns (loss, degenerate): sequences with fewer than two segments
    have no adjacent pair, contribute 0, and set the degenerate flag.
    The tanh argument is clamped at 1e-12 before the log so identical
    neighbours cap the loss near 27.6 instead of diverging.
    """
    n = len(spectra)
    if n < 2:
        return Tensor(0.0), True
    total = None
    for prev, cur in zip(spectra, spectra[1:]):
        d = tz.tabs(cur.values - prev.values).mean()
        term = tz.neg(tz.log(tz.clamp_min(tz.tanh(d * alpha), LOG_FLOOR)))
        total = term if total is None else total + term
    return total * (1.0 / (n - 1)), False


def sequence_discrepancy(
    f_f: Tensor,
    boundaries,
    target_bins: int,
    alpha: float,
    class_ids=None,
    sample_rate: float = 1.0,
) -> tuple[Tensor, float]:
    """Split, transform and score one sequence; returns (loss, mean raw
    adjacent discrepancy E|diff| for logging)."""
    segments = split_by_boundaries(f_f, boundaries)
    cuts = [0] + list(boundaries) + [f_f.shape[1]]
    spectra = []
    for i, seg in enumerate(segments):
        cid = -1 if class_ids is None else int(class_ids[i])
        spectra.append(
            segment_spectrum(
                seg, target_bins, (cuts[i], cuts[i + 1]), cid, sample_rate
            )
        )
    loss, degenerate = adjacent_discrepancy_loss(spectra, alpha)
    if degenerate:
        return loss, 0.0
    raw = [
        float(tz.tabs(b.values - a.values).mean().data)
        for a, b in zip(spectra, spectra[1:])
    ]
    return loss, sum(raw) / len(raw)
