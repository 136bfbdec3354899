"""Seeded multi-sample sweeps over (N, p), averaging and resumable persistence.

Dataset layout in ``output_dir``::

    traces.csv      N, p, sample_index, depth, log_negativity   (raw, append-only)
    emax.csv        N, p, emax, depth_at_max, sem, samples
    manifest.json   config echo, config hash, version, wall time, progress

Samples are written strictly in (N, p, sample_index) order, so the completed
set is always a prefix and an interrupted sweep resumes byte-identically.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .circuit import CircuitSpec, run_circuit
from .gates import GateSet, RngStream
from .qstate import check_num_qubits

log = logging.getLogger(__name__)

TRACE_COLUMNS = ["N", "p", "sample_index", "depth", "log_negativity"]
EMAX_COLUMNS = ["N", "p", "emax", "depth_at_max", "sem", "samples"]


class DatasetError(RuntimeError):
    pass


class ResumeConflict(DatasetError):
    pass


def _fmt(x) -> str:
    return repr(float(x))


@dataclass
class SweepConfig:
    sizes: list[int]
    error_rates: list[float]
    samples_per_point: int = 50
    master_seed: int = 0
    gate_set: str = "haar"
    d_max: str | int = "4N"
    record_every: int = 1
    output_dir: str | None = None
    early_stop: float | None = 0.5
    early_stop_patience: int = 4
    noisy_single_qubit_layers: bool = False

    def __post_init__(self):
        self.sizes = [check_num_qubits(n) for n in self.sizes]
        self.error_rates = [float(p) for p in self.error_rates]
        for p in self.error_rates:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"error rate {p} outside [0, 1]")
        if self.samples_per_point < 1:
            raise ValueError("samples_per_point must be >= 1")
        self.gate_set = GateSet(self.gate_set).value
        if not (isinstance(self.d_max, int) and self.d_max >= 1):
            if not (isinstance(self.d_max, str) and self.d_max.endswith("N")):
                raise ValueError(f"d_max must be a positive integer or '<k>N', got {self.d_max!r}")
            self.depth_for(2)

    def depth_for(self, n: int) -> int:
        if isinstance(self.d_max, int):
            return self.d_max
        factor = self.d_max[:-1] or "1"
        return int(round(float(factor) * n))

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def circuit_spec(self, n: int, p: float) -> CircuitSpec:
        return CircuitSpec(
            num_qubits=n,
            max_depth=self.depth_for(n),
            error_rate=p,
            gate_set=self.gate_set,
            seed=self.master_seed,
            record_every=self.record_every,
            early_stop=self.early_stop,
            early_stop_patience=self.early_stop_patience,
            noisy_single_qubit_layers=self.noisy_single_qubit_layers,
        )

    def keys(self) -> list[tuple[int, float, int]]:
        return [
            (n, p, s)
            for n in self.sizes
            for p in self.error_rates
            for s in range(self.samples_per_point)
        ]


@dataclass
class NegativityTrace:
    """Sample-averaged log-negativity on the depth axis shared by all samples.

    Samples stopped early are truncated to the shortest one; ``samples`` keeps
    every raw (depths, values) pair.
    """

    num_qubits: int
    error_rate: float
    depths: np.ndarray
    raw: np.ndarray  # (samples, depths)
    samples: list = field(default_factory=list, repr=False)

    @property
    def mean(self) -> np.ndarray:
        return self.raw.mean(axis=0)

    @property
    def sem(self) -> np.ndarray:
        k = self.raw.shape[0]
        if k < 2:
            return np.full(self.raw.shape[1], np.nan)
        return self.raw.std(axis=0, ddof=1) / np.sqrt(k)

    @classmethod
    def from_samples(cls, n: int, p: float, samples: Iterable) -> "NegativityTrace":
        samples = [(np.asarray(d, dtype=int), np.asarray(v, dtype=float)) for d, v in samples]
        if not samples:
            raise ValueError("no samples")
        length = min(len(d) for d, _ in samples)
        depths = samples[0][0][:length]
        for d, _ in samples:
            if not np.array_equal(d[:length], depths):
                raise DatasetError(f"inconsistent depth axes for N={n}, p={p}")
        if length and np.any(np.diff(depths) <= 0):
            raise DatasetError(f"depth axis not strictly increasing for N={n}, p={p}")
        raw = np.array([v[:length] for _, v in samples])
        return cls(n, p, depths, raw, samples)


@dataclass(frozen=True)
class EmaxSummary:
    num_qubits: int
    error_rate: float
    emax: float
    depth_at_max: int
    sem_at_max: float
    samples: int
    at_boundary: bool = False


def extract_emax(trace: NegativityTrace) -> EmaxSummary:
    """Maximum of the averaged curve (average first, then maximize).

    ``at_boundary`` flags a maximum on the last depth: the true peak may lie
    beyond the simulated depth range.
    """
    if trace.raw.size == 0:
        raise ValueError(f"empty trace for N={trace.num_qubits}, p={trace.error_rate}")
    mean = trace.mean
    k = int(np.argmax(mean))
    return EmaxSummary(
        num_qubits=trace.num_qubits,
        error_rate=trace.error_rate,
        emax=float(mean[k]),
        depth_at_max=int(trace.depths[k]),
        sem_at_max=float(trace.sem[k]),
        samples=trace.raw.shape[0],
        at_boundary=k == len(mean) - 1,
    )


def sample_stream(master_seed: int, n: int, sample_index: int) -> RngStream:
    # shared across error rates: every p sees the same circuit realizations
    return RngStream(master_seed, (n, sample_index))


def run_sample(n: int, p: float, gate_set="haar", sample_seed=0, **spec_kw):
    """One circuit realization; returns (depths, log-negativity)."""
    spec_kw.setdefault("max_depth", 4 * n)
    spec = CircuitSpec(num_qubits=n, error_rate=p, gate_set=gate_set, **spec_kw)
    rng = sample_seed if isinstance(sample_seed, RngStream) else RngStream(sample_seed)
    tr = run_circuit(spec, rng)
    return tr.depths, tr.log_negativity


@dataclass
class Dataset:
    config: SweepConfig
    traces: dict  # (N, p) -> NegativityTrace
    emax: list[EmaxSummary]

    def emax_table(self) -> list[EmaxSummary]:
        return self.emax


# -- persistence -----------------------------------------------------------


def _sample_rows(n, p, s, depths, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for d, v in zip(depths, values):
        w.writerow([n, _fmt(p), s, int(d), _fmt(v)])
    return buf.getvalue()


def _write_json_atomic(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def write_emax_csv(path, summaries: Iterable[EmaxSummary]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(EMAX_COLUMNS)
        for e in summaries:
            w.writerow(
                [e.num_qubits, _fmt(e.error_rate), _fmt(e.emax), e.depth_at_max, _fmt(e.sem_at_max), e.samples]
            )


def read_emax_csv(path) -> list[EmaxSummary]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    out = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != EMAX_COLUMNS:
            raise DatasetError(f"{path}: row 1: expected header {EMAX_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                n, p, emax, depth, sem, k = row
                out.append(EmaxSummary(int(n), float(p), float(emax), int(depth), float(sem), int(k)))
            except ValueError as exc:
                raise DatasetError(f"{path}: row {lineno}: malformed {row!r} ({exc})") from None
    return out


def read_traces_csv(path) -> dict:
    """Raw samples grouped as {(N, p): {sample_index: (depths, values)}}."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    grouped: dict = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACE_COLUMNS:
            raise DatasetError(f"{path}: row 1: expected header {TRACE_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                n, p, s, d, v = row
                key, s, d, v = (int(n), float(p)), int(s), int(d), float(v)
            except ValueError as exc:
                raise DatasetError(f"{path}: row {lineno}: malformed {row!r} ({exc})") from None
            ds, vs = grouped.setdefault(key, {}).setdefault(s, ([], []))
            ds.append(d)
            vs.append(v)
    return grouped


def traces_from_raw(grouped: dict) -> dict:
    return {
        key: NegativityTrace.from_samples(key[0], key[1], [per[s] for s in sorted(per)])
        for key, per in grouped.items()
    }


def summarize(traces: dict, config: SweepConfig | None = None) -> list[EmaxSummary]:
    keys = list(traces)
    if config is not None:
        keys = [(n, p) for n in config.sizes for p in config.error_rates if (n, p) in traces]
    return [extract_emax(traces[k]) for k in keys]


def _load_progress(out: Path, config: SweepConfig):
    """Returns (completed sample count, byte offset of traces.csv) for a resume."""
    manifest_path = out / "manifest.json"
    traces_path = out / "traces.csv"
    if not manifest_path.exists():
        if traces_path.exists() and traces_path.stat().st_size > 0:
            raise ResumeConflict(f"{traces_path} exists without a manifest; refusing to overwrite")
        return 0, None, 0.0
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("config_hash") != config.config_hash():
        raise ResumeConflict(
            f"{out} holds a dataset for a different config "
            f"(hash {manifest.get('config_hash')} != {config.config_hash()})"
        )
    prog = manifest.get("progress", {})
    return int(prog.get("completed", 0)), int(prog.get("traces_bytes", 0)), float(manifest.get("wall_time_s", 0.0))


def _manifest(config, completed, nbytes, wall, warnings=()) -> dict:
    return {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "version": __version__,
        "wall_time_s": round(wall, 3),
        "progress": {"completed": completed, "total": len(config.keys()), "traces_bytes": nbytes},
        "complete": completed == len(config.keys()),
        "warnings": list(warnings),
    }


def run_sweep(config: SweepConfig, threads: int | None = None, progress=None) -> Dataset:
    """Run every (N, p, sample) of ``config``; persists to ``config.output_dir`` if set."""
    keys = config.keys()
    out = Path(config.output_dir) if config.output_dir else None
    done, offset, prior_wall = 0, None, 0.0
    results: dict = {}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        done, offset, prior_wall = _load_progress(out, config)
        if done:
            traces_path = out / "traces.csv"
            with open(traces_path, "r+b") as f:
                f.truncate(offset)
            grouped = read_traces_csv(traces_path)
            for (n, p), per in grouped.items():
                for s, (d, v) in per.items():
                    results[(n, p, s)] = (np.array(d), np.array(v))
            if len(results) != done:
                raise ResumeConflict(f"manifest reports {done} samples, traces.csv holds {len(results)}")
            log.info("resuming %s at sample %d/%d", out, done, len(keys))
        else:
            with open(out / "traces.csv", "w", newline="") as f:
                f.write(",".join(TRACE_COLUMNS) + "\n")
            offset = (out / "traces.csv").stat().st_size
            _write_json_atomic(out / "manifest.json", _manifest(config, 0, offset, 0.0))

    t0 = time.perf_counter()
    pending = keys[done:]

    def work(key):
        n, p, s = key
        tr = run_circuit(config.circuit_spec(n, p), sample_stream(config.master_seed, n, s))
        return tr.depths, tr.log_negativity

    def commit(key, dv):
        nonlocal done, offset
        results[key] = dv
        done += 1
        if out is not None:
            with open(out / "traces.csv", "a", newline="") as f:
                f.write(_sample_rows(*key, *dv))
                f.flush()
                os.fsync(f.fileno())
                offset = f.tell()
            wall = prior_wall + time.perf_counter() - t0
            _write_json_atomic(out / "manifest.json", _manifest(config, done, offset, wall))
        if progress is not None:
            progress(done, len(keys), key)

    threads = threads or os.cpu_count() or 1
    if threads == 1:
        for key in pending:
            commit(key, work(key))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # results are committed in submission order regardless of completion order
            for key, dv in zip(pending, pool.map(work, pending)):
                commit(key, dv)

    grouped: dict = {}
    for (n, p, s) in keys:
        grouped.setdefault((n, p), {})[s] = results[(n, p, s)]
    traces = traces_from_raw(grouped)
    summaries = summarize(traces, config)
    warnings = [
        f"N={e.num_qubits} p={e.error_rate}: maximum on last depth {e.depth_at_max}"
        for e in summaries
        if e.at_boundary and e.error_rate > 0
    ]
    if out is not None:
        write_emax_csv(out / "emax.csv", summaries)
        wall = prior_wall + time.perf_counter() - t0
        _write_json_atomic(out / "manifest.json", _manifest(config, done, offset, wall, warnings))
    return Dataset(config, traces, summaries)


def load_dataset(path) -> Dataset:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetError(f"{manifest_path}: no such file")
    manifest = json.loads(manifest_path.read_text())
    config = SweepConfig.from_dict(manifest["config"])
    traces = traces_from_raw(read_traces_csv(path / "traces.csv"))
    return Dataset(config, traces, summarize(traces, config))


def validate_dataset(path) -> list[str]:
    """Re-derive everything checkable from a dataset directory; returns problems found."""
    path = Path(path)
    problems = []
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except FileNotFoundError:
        return [f"{path / 'manifest.json'}: no such file"]
    except json.JSONDecodeError as exc:
        return [f"{path / 'manifest.json'}: invalid JSON ({exc})"]
    try:
        config = SweepConfig.from_dict(manifest["config"])
    except (KeyError, TypeError, ValueError) as exc:
        return [f"manifest config invalid: {exc}"]
    if manifest.get("config_hash") != config.config_hash():
        problems.append("config_hash does not match the config echo")
    if not manifest.get("complete"):
        problems.append(
            f"sweep incomplete: {manifest.get('progress', {}).get('completed')} of {len(config.keys())} samples"
        )
        return problems
    try:
        ds = load_dataset(path)
        stored = read_emax_csv(path / "emax.csv")
    except DatasetError as exc:
        return problems + [str(exc)]
    expected_keys = {(n, p, s) for n, p, s in config.keys()}
    got = {(n, p, s) for (n, p), tr in ds.traces.items() for s in range(len(tr.samples))}
    if got != expected_keys:
        problems.append(f"traces.csv covers {len(got)} samples, config expects {len(expected_keys)}")
    by_key = {(e.num_qubits, e.error_rate): e for e in ds.emax}
    for e in stored:
        ref = by_key.get((e.num_qubits, e.error_rate))
        if ref is None:
            problems.append(f"emax.csv row N={e.num_qubits} p={e.error_rate} has no traces")
        elif (ref.emax, ref.depth_at_max, ref.samples) != (e.emax, e.depth_at_max, e.samples):
            problems.append(f"emax.csv row N={e.num_qubits} p={e.error_rate} disagrees with traces.csv")
    return problems
