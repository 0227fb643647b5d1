"""Uniformly sampled time traces and their CSV round-trip format.

The on-disk format is a two-column CSV ``time_s,value_v`` (volts) or
``time_s,value_t`` (tesla).  Sample spacing must be uniform to 1 ppm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

VALID_UNITS = ("V", "T", "arb")

_UNIT_COLUMN = {"V": "value_v", "T": "value_t"}
_COLUMN_UNIT = {v: k for k, v in _UNIT_COLUMN.items()}


class TraceFormatError(ValueError):
    """Malformed or non-uniform trace file."""


@dataclass(frozen=True)
class TimeTrace:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    samples : array
        Signal values.
    sample_rate : float
        Samples per second (Hz).
    start_time : float
        Time of the first sample (s).
    units : str
        'V', 'T', or 'arb' for dimensionless model output.
    """

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0
    units: str = "V"

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("trace needs at least 2 samples")
        if self.units not in VALID_UNITS:
            raise ValueError(f"units must be one of {VALID_UNITS}")

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self) -> float:
        """Total measurement time N/fs (s)."""
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "TimeTrace":
        return replace(self, samples=np.asarray(samples, dtype=float))

    def __len__(self) -> int:
        return self.samples.size


def save_trace(trace: TimeTrace, path) -> None:
    """Write a trace as ``time_s,value_v|value_t`` CSV at full precision."""
    if trace.units not in _UNIT_COLUMN:
        raise ValueError("only 'V' or 'T' traces have a defined file format")
    col = _UNIT_COLUMN[trace.units]
    with open(path, "w") as fh:
        fh.write(f"time_s,{col}\n")
        for t, v in zip(trace.times, trace.samples):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def load_trace(path) -> TimeTrace:
    """Parse a trace CSV, validating header and uniform spacing (1 ppm).

    Raises
    ------
    TraceFormatError
        On a bad header, malformed row (with its line number), or
        timestamp jitter beyond 1 ppm of the sample interval.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        while header.startswith("#"):  # provenance comment lines
            header = fh.readline().strip()
        parts = header.split(",")
        if len(parts) != 2 or parts[0] != "time_s" or parts[1] not in _COLUMN_UNIT:
            raise TraceFormatError(
                f"{path}: expected header 'time_s,value_v' or 'time_s,value_t', got {header!r}"
            )
        units = _COLUMN_UNIT[parts[1]]
        times = []
        values = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise TraceFormatError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
            try:
                times.append(float(fields[0]))
                values.append(float(fields[1]))
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{lineno}: {exc}") from None
    if len(values) < 2:
        raise TraceFormatError(f"{path}: trace needs at least 2 samples")
    times = np.asarray(times)
    dt = np.diff(times)
    dt_nominal = (times[-1] - times[0]) / (len(times) - 1)
    if dt_nominal <= 0:
        raise TraceFormatError(f"{path}: timestamps must be strictly increasing")
    jitter = np.abs(dt - dt_nominal)
    if np.any(jitter > 1e-6 * dt_nominal):
        bad = int(np.argmax(jitter)) + 2
        raise TraceFormatError(
            f"{path}:{bad}: non-uniform sample spacing "
            f"({jitter.max() / dt_nominal:.3g} relative, limit 1e-6)"
        )
    return TimeTrace(
        samples=np.asarray(values),
        sample_rate=1.0 / dt_nominal,
        start_time=float(times[0]),
        units=units,
    )
