"""Monte-Carlo FER / CNP sweeps over Eb/N0 for a set of decoders.

Every frame index owns two RNG streams derived from the sweep seed: one for
the payload and one for the channel noise.  All decoders therefore see the
same payload and the same noise realisation at a given frame index, and the
results do not depend on how frames are split across workers.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channel import ChannelConfig, frame_rng, llr, modulate
from .construction import Allocation, CodeSpec, build_code_spec
from .controllers import DecoderConfig, DecoderKind, FrameResult, decode_frame
from .encoder import encode
from .metrics import MetricKind, MetricParams
from .scl import count_cnp

CSV_COLUMNS = (
    "decoder",
    "ebno_db",
    "frames",
    "errors",
    "fer",
    "avg_cnp",
    "avg_attempts",
    "early_term_rate",
    "noise_checksum",
)

NOISE_STREAM = 0
PAYLOAD_STREAM = 1
CHUNK = 64


class ConfigError(ValueError):
    """Invalid sweep configuration; the message names the line and field."""


@dataclass(frozen=True)
class DecoderSetup:
    """One decoder of a sweep together with the code it decodes."""

    name: str
    N: int
    K: int
    n_crc: int
    n_pc: int
    crc_poly: int | None
    allocation: Allocation
    design_snr_db: float
    decoder: DecoderConfig

    def build_spec(self) -> CodeSpec:
        return _cached_spec(
            self.N, self.K, self.n_crc, self.n_pc, self.decoder.L,
            self.allocation, self.crc_poly, self.design_snr_db,
        )


@lru_cache(maxsize=32)
def _cached_spec(N, K, n_crc, n_pc, L, allocation, crc_poly, design_snr_db):
    return build_code_spec(N, K, n_crc, n_pc, L, allocation, crc_poly, design_snr_db)


@dataclass(frozen=True)
class SweepConfig:
    decoders: tuple[DecoderSetup, ...]
    ebno_db: tuple[float, ...]
    seed: int = 0
    max_frames: int = 10_000_000
    target_errors: int = 100

    def __post_init__(self):
        if not self.decoders:
            raise ConfigError("no decoders configured")
        if self.max_frames < 1 or self.target_errors < 0:
            raise ConfigError("max_frames must be >= 1 and target_errors >= 0")
        Ks = {d.K for d in self.decoders}
        Ns = {d.N for d in self.decoders}
        if len(Ks) > 1 or len(Ns) > 1:
            raise ConfigError("all decoders of a sweep must share N and K (paired noise)")


@dataclass
class SimRecord:
    """Aggregate of one (decoder, Eb/N0) point."""

    decoder: str
    ebno_db: float
    T: int
    frames: int = 0
    errors: int = 0
    cnp_sum: int = 0
    attempts_sum: int = 0
    early_terms: int = 0
    noise_checksum: int = 0
    attempt_hist: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.attempt_hist is None:
            self.attempt_hist = np.zeros(self.T + 1, dtype=np.int64)

    def add(self, stats: "FrameStats") -> None:
        self.frames += 1
        self.errors += stats.error
        self.cnp_sum += stats.cnp
        self.attempts_sum += stats.attempts
        self.early_terms += stats.early_terms
        self.attempt_hist[stats.attempts - 1] += 1
        self.noise_checksum = (self.noise_checksum + stats.noise_hash) & 0xFFFFFFFF

    @property
    def fer(self) -> float:
        return self.errors / self.frames if self.frames else math.nan

    @property
    def avg_cnp(self) -> float:
        return self.cnp_sum / self.frames if self.frames else math.nan

    @property
    def avg_attempts(self) -> float:
        return self.attempts_sum / self.frames if self.frames else math.nan

    @property
    def early_term_rate(self) -> float:
        return self.early_terms / self.attempts_sum if self.attempts_sum else 0.0

    def row(self) -> list[str]:
        return [
            self.decoder,
            f"{self.ebno_db:g}",
            str(self.frames),
            str(self.errors),
            f"{self.fer:.6e}",
            f"{self.avg_cnp:.4f}",
            f"{self.avg_attempts:.6f}",
            f"{self.early_term_rate:.6f}",
            f"{self.noise_checksum:08x}",
        ]


@dataclass(frozen=True)
class FrameStats:
    error: bool
    cnp: int
    attempts: int
    early_terms: int
    noise_hash: int


def frame_inputs(spec: CodeSpec, channel: ChannelConfig, frame: int):
    """Payload, channel LLRs and noise hash for one frame index."""
    payload = frame_rng(channel.seed, frame, PAYLOAD_STREAM).integers(0, 2, spec.K).astype(np.uint8)
    noise = frame_rng(channel.seed, frame, NOISE_STREAM).standard_normal(spec.N)
    y = modulate(encode(payload, spec)) + channel.sigma * noise
    return payload, llr(y, channel.sigma2), zlib.crc32(noise.tobytes())


def simulate_frame(spec: CodeSpec, decoder: DecoderConfig, channel: ChannelConfig, frame: int,
                   keep_outcomes=False) -> tuple[FrameStats, FrameResult]:
    payload, llr_channel, noise_hash = frame_inputs(spec, channel, frame)
    res = decode_frame(llr_channel, spec, decoder, keep_outcomes=keep_outcomes)
    stats = FrameStats(
        error=bool((res.payload(spec) != payload).any()),
        cnp=res.cnp,
        attempts=res.attempts,
        early_terms=res.early_terminations,
        noise_hash=noise_hash,
    )
    return stats, res


def _run_chunk(setup: DecoderSetup, channel: ChannelConfig, start: int, stop: int) -> list[FrameStats]:
    spec = setup.build_spec()
    return [simulate_frame(spec, setup.decoder, channel, f)[0] for f in range(start, stop)]


def run_point(setup: DecoderSetup, ebno_db: float, sweep: SweepConfig, pool=None, workers: int = 1) -> SimRecord:
    """Simulate one (decoder, Eb/N0) point under the stopping rule.

    Frames are consumed strictly in index order and the run stops at the
    first frame index where the error target is reached, so the result is
    the same for any number of workers.
    """
    channel = ChannelConfig(ebno_db, setup.K / setup.N, sweep.seed)
    rec = SimRecord(setup.name, ebno_db, setup.decoder.extra_attempts)
    n_workers = max(1, workers) if pool is not None else 1
    start = 0
    while start < sweep.max_frames:
        bounds = []
        for _ in range(n_workers):
            stop = min(start + CHUNK, sweep.max_frames)
            if start >= stop:
                break
            bounds.append((start, stop))
            start = stop
        if pool is None:
            chunks = [_run_chunk(setup, channel, a, b) for a, b in bounds]
        else:
            chunks = list(pool.map(_run_chunk, *zip(*[(setup, channel, a, b) for a, b in bounds])))
        for chunk in chunks:
            for stats in chunk:
                rec.add(stats)
                if sweep.target_errors and rec.errors >= sweep.target_errors:
                    return rec
    return rec


def run_sweep(sweep: SweepConfig, workers: int = 1, progress=None) -> list[SimRecord]:
    """All (decoder, Eb/N0) points, decoders in config order, Eb/N0 ascending."""
    records = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for setup in sweep.decoders:
            for ebno in sweep.ebno_db:
                rec = run_point(setup, ebno, sweep, pool, workers)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def write_csv(records, stream=None) -> str:
    """Write records as CSV (to ``stream`` if given) and return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.row())
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# --- configuration -----------------------------------------------------------

# key -> (parser, default); None default means required-with-fallback below
GLOBAL_KEYS = {
    "N": (int, 512),
    "K": (int, 256),
    "n_crc": (int, 24),
    "n_pc": (int, 0),
    "crc_poly": (lambda s: int(s, 16), None),
    "L": (int, 4),
    "T": (int, 15),
    "omega": (int, 2),
    "z": (int, 5),
    "beta": (float, 0.4),
    "metric_kind": (MetricKind, MetricKind.SIMPLIFIED),
    "allocation_variant": (Allocation, Allocation.IMPROVED),
    "pc_policy": (str, "retain"),
    "flip_scope": (str, "all"),
    "design_snr_db": (float, 4.0),
    "decoders": (lambda s: [d.strip() for d in s.split(",") if d.strip()], None),
    "ebno_start": (float, 1.0),
    "ebno_stop": (float, 2.5),
    "ebno_step": (float, 0.5),
    "seed": (int, 0),
    "max_frames": (int, 10_000_000),
    "target_errors": (int, 100),
}
DECODER_KEYS = {
    "kind", "N", "K", "n_crc", "n_pc", "crc_poly", "L", "T", "omega", "z", "beta",
    "metric_kind", "allocation_variant", "pc_policy", "flip_scope", "design_snr_db",
}
SWEEP_SECTION = "sweep"
DECODER_PREFIX = "decoder."


def _key_lines(text: str) -> dict:
    """(section, key) -> line number, for diagnostics."""
    lines = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = n
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if m and section is not None:
            lines[(section, m.group(1))] = n
    return lines


def ebno_grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    if step <= 0:
        raise ValueError("ebno_step must be positive")
    if stop < start:
        raise ValueError("ebno_stop must not be below ebno_start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 10) for k in range(count))


def parse_config(text: str, overrides: dict | None = None, source: str = "<config>") -> SweepConfig:
    """Parse a sweep configuration.

    The ``[sweep]`` section holds the global keys; a ``[decoder.NAME]``
    section overrides any of them for one decoder and sets its ``kind``.
    A name in ``decoders`` without its own section must be a decoder kind
    (``ca-scl``, ``dsclf``, ``pc-dsclf``).  ``overrides`` (e.g. from the
    command line) replace ``[sweep]`` values.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    lines = _key_lines(text)

    def where(section, key):
        n = lines.get((section, key), lines.get((section, None)))
        loc = f"{source}:{n}" if n else source
        return f"{loc}: [{section}] {key}" if key else f"{loc}: [{section}]"

    def convert(section, key, raw, conv):
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where(section, key)}: invalid value {raw!r} ({exc})") from None

    for sec in parser.sections():
        if sec != SWEEP_SECTION and not sec.startswith(DECODER_PREFIX):
            raise ConfigError(f"{where(sec, None)}: unknown section")
    values = {k: d for k, (_, d) in GLOBAL_KEYS.items()}
    if parser.has_section(SWEEP_SECTION):
        for key, raw in parser.items(SWEEP_SECTION):
            if key not in GLOBAL_KEYS:
                raise ConfigError(f"{where(SWEEP_SECTION, key)}: unknown field")
            values[key] = convert(SWEEP_SECTION, key, raw, GLOBAL_KEYS[key][0])
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in GLOBAL_KEYS:
            raise ConfigError(f"override: unknown field {key!r}")
        conv = GLOBAL_KEYS[key][0]
        values[key] = convert("override", key, val, conv) if isinstance(val, str) else val

    names = values["decoders"]
    if not names:
        names = [s[len(DECODER_PREFIX):] for s in parser.sections() if s.startswith(DECODER_PREFIX)]
    if not names:
        raise ConfigError(f"{where(SWEEP_SECTION, 'decoders')}: no decoders configured")

    setups = []
    for name in names:
        sec = DECODER_PREFIX + name
        local = dict(values)
        if parser.has_section(sec):
            for key, raw in parser.items(sec):
                if key not in DECODER_KEYS:
                    raise ConfigError(f"{where(sec, key)}: unknown field")
                if key == "kind":
                    local["kind"] = convert(sec, key, raw, DecoderKind)
                else:
                    local[key] = convert(sec, key, raw, GLOBAL_KEYS[key][0])
        else:
            sec = SWEEP_SECTION
            local["kind"] = convert(sec, "decoders", name, DecoderKind)
        if "kind" not in local:
            raise ConfigError(f"{where(sec, None)}: missing field 'kind'")
        try:
            metric = MetricParams(beta=local["beta"], z=local["z"], kind=local["metric_kind"])
            dec = DecoderConfig(
                local["kind"], local["L"], local["T"], local["omega"], metric,
                local["pc_policy"], local["flip_scope"],
            )
            setup = DecoderSetup(
                name, local["N"], local["K"], local["n_crc"], local["n_pc"], local["crc_poly"],
                local["allocation_variant"], local["design_snr_db"], dec,
            )
            setup.build_spec()
        except ValueError as exc:
            raise ConfigError(f"{where(sec, None)}: decoder {name!r}: {exc}") from None
        setups.append(setup)

    try:
        grid = ebno_grid(values["ebno_start"], values["ebno_stop"], values["ebno_step"])
        return SweepConfig(tuple(setups), grid, values["seed"], values["max_frames"], values["target_errors"])
    except ValueError as exc:
        raise ConfigError(f"{where(SWEEP_SECTION, None)}: {exc}") from None


def load_config(path, overrides: dict | None = None) -> SweepConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides, source=str(path))


def with_ebno(sweep: SweepConfig, ebno_db) -> SweepConfig:
    return replace(sweep, ebno_db=tuple(float(e) for e in ebno_db))


__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "DecoderSetup",
    "FrameStats",
    "SimRecord",
    "SweepConfig",
    "count_cnp",
    "ebno_grid",
    "frame_inputs",
    "load_config",
    "parse_config",
    "run_point",
    "run_sweep",
    "simulate_frame",
    "with_ebno",
    "write_csv",
]
