"""Sampling, preprocessing, encoding, and on-disk persistence of run data.

A dataset directory looks like

    dataset/
      manifest.json
      train/00000.fat ... train/NNNNN.fat
      test/00000.fat  ... test/NNNNN.fat

Each sample file is a two-channel FAT1 raster over the interior grid:
channel 0 the filled first-arrival time in seconds, channel 1 the burn mask
(1 where the fire actually arrived).  Unburnt pixels carry the fill value
(maximum defined arrival plus one time step) so the rasters are continuous;
the original undefined entries are recoverable from the mask.  The manifest
records the geometry, parameter ranges, per-sample parameters, and a sha256
per file, and generation is bit-reproducible from ``base_seed`` because every
sample derives its own generator via splitmix64 and is independent of all
others (so parallel generation cannot change the output).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .fat import RasterFormatError, read_fat, write_fat
from .rng import Xoshiro256StarStar, splitmix64
from .simulation import SimConfig, SimParams, ignite_line, new_state, run_simulation

FORMAT_VERSION = 1

PARAM_NAMES = ("wind_speed", "pyro_potential", "burn_time_s", "ignition_prob", "theta")


class DatasetError(RuntimeError):
    """Raised for missing, corrupt, or inconsistent dataset contents."""


@dataclass(frozen=True)
class ParamRanges:
    """Sampling distributions for the five parameters (uniform except burn time)."""

    wind: tuple[float, float] = (2.0, 8.0)
    pyro: tuple[float, float] = (0.5, 0.9)
    burn_times: tuple[float, ...] = (9.0, 12.0, 15.0, 18.0, 21.0)
    prob: tuple[float, float] = (0.3, 0.7)
    theta: tuple[float, float] = (0.0, math.pi)

    def __post_init__(self):
        for name in ("wind", "pyro", "prob", "theta"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} range must have lower < upper")
        if not self.burn_times:
            raise ValueError("burn_times must be non-empty")

    @property
    def burn_span(self) -> tuple[float, float]:
        return min(self.burn_times), max(self.burn_times)


@dataclass
class Sample:
    params: SimParams
    arrival: np.ndarray  # filled arrival seconds, (H, W) float32
    mask: np.ndarray  # (H, W) bool, True where the fire arrived
    fill_value_s: float


@dataclass
class DatasetManifest:
    config: SimConfig
    ranges: ParamRanges
    n_train: int
    n_test: int
    base_seed: int
    format_version: int = FORMAT_VERSION
    samples: list[dict] | None = None


def sample_params(ranges: ParamRanges, rng: Xoshiro256StarStar) -> SimParams:
    """Draw one parameter set; the draw order is part of the format."""
    wind = rng.uniform_in(*ranges.wind)
    pyro = rng.uniform_in(*ranges.pyro)
    burn = ranges.burn_times[rng.choice_index(len(ranges.burn_times))]
    prob = rng.uniform_in(*ranges.prob)
    theta = rng.uniform_in(*ranges.theta)
    return SimParams(wind, pyro, burn, prob, theta, seed=rng.next_u64())


def preprocess_arrival(raw: np.ndarray, dt_s: float):
    """Fill undefined arrivals with (max defined arrival + dt).

    Returns (filled, mask, fill_value_s).  Raises DatasetError if nothing
    ever ignited, since then no fill value is defined.
    """
    mask = np.isfinite(raw)
    if not mask.any():
        raise DatasetError("arrival map has no ignited cells")
    fill = float(raw[mask].max()) + dt_s
    filled = np.where(mask, raw, fill)
    return filled, mask, fill


def params_vector(params: SimParams) -> np.ndarray:
    return np.array(
        [params.wind_speed, params.pyro_potential, params.burn_time_s,
         params.ignition_prob, params.theta]
    )


def normalize_params(params: SimParams, ranges: ParamRanges) -> np.ndarray:
    """Min-max map of the five parameters onto [0,1]^5 (burn time continuous)."""
    lo, hi = _bounds(ranges)
    return (params_vector(params) - lo) / (hi - lo)


def denormalize_params(vec: np.ndarray, ranges: ParamRanges, seed: int = 0) -> SimParams:
    """Inverse of normalize_params; entries are clamped to [0,1] first.

    The burn time comes back as a continuous value; round it with
    round_burn_time before handing the result to the simulator.
    """
    lo, hi = _bounds(ranges)
    v = lo + np.clip(np.asarray(vec, dtype=float), 0.0, 1.0) * (hi - lo)
    return SimParams(float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]), seed=seed)


def round_burn_time(burn_time_s: float, ranges: ParamRanges) -> float:
    """Snap a continuous burn time back to the categorical grid."""
    return min(ranges.burn_times, key=lambda b: (abs(b - burn_time_s), b))


def _bounds(ranges: ParamRanges):
    blo, bhi = ranges.burn_span
    lo = np.array([ranges.wind[0], ranges.pyro[0], blo, ranges.prob[0], ranges.theta[0]])
    hi = np.array([ranges.wind[1], ranges.pyro[1], bhi, ranges.prob[1], ranges.theta[1]])
    return lo, hi


def ignition_raster(params: SimParams, config: SimConfig) -> np.ndarray:
    """{0,1} interior raster of the ignition line for these parameters."""
    state = new_state(config)
    ignite_line(state, params.theta, config.ignition_line_length_m)
    rs, cs = config.interior_slice()
    return (state.ignition_step[rs, cs] == 0).astype(np.float32)


def encode_forward_input(
    params: SimParams, config: SimConfig, ranges: ParamRanges | None = None
) -> np.ndarray:
    """Five-channel image input: four constant normalized parameter channels
    plus the binary ignition-line raster."""
    ranges = ranges or ParamRanges()
    n = config.interior_size
    norm = normalize_params(params, ranges)
    image = np.empty((n, n, 5), dtype=np.float32)
    image[:, :, 0] = norm[0]  # wind
    image[:, :, 1] = norm[1]  # pyro potential
    image[:, :, 2] = norm[2]  # burn time
    image[:, :, 3] = norm[3]  # ignition probability
    image[:, :, 4] = ignition_raster(params, config)
    return image


# ----------------------------------------------------------------- persist

def _sample_filename(index: int) -> str:
    return f"{index:05d}.fat"


def _simulate_one(index: int, split: str, global_index: int, base_seed: int,
                  config: SimConfig, ranges: ParamRanges, out_dir: str) -> dict:
    rng = Xoshiro256StarStar(splitmix64(base_seed, global_index))
    params = sample_params(ranges, rng)
    raw = run_simulation(params, config)
    filled, mask, fill = preprocess_arrival(raw, config.dt_s)
    data = np.stack([filled.astype(np.float32), mask.astype(np.float32)], axis=-1)
    rel = f"{split}/{_sample_filename(index)}"
    path = Path(out_dir) / rel
    try:
        write_fat(path, data)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError as exc:
        raise DatasetError(f"failed writing sample {split}/{index}: {exc}") from exc
    record = {"index": index, "split": split, "file": rel, "sha256": digest,
              "fill_value_s": fill,
              "params": {name: getattr(params, name) for name in PARAM_NAMES}}
    record["params"]["seed"] = params.seed
    return record


def _worker(args):
    return _simulate_one(*args)


def max_workers(requested: int | None = None) -> int:
    """Worker cap: explicit request, else EMBERLEARN_THREADS, else one."""
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("EMBERLEARN_THREADS")
    return max(1, int(env)) if env else 1


def generate_dataset(
    n_train: int,
    n_test: int,
    config: SimConfig,
    ranges: ParamRanges,
    base_seed: int,
    out_dir: str | Path,
    parallel: int | None = None,
) -> DatasetManifest:
    """Simulate and persist a dataset; bit-reproducible from base_seed."""
    if n_train <= 0 or n_test <= 0:
        raise ValueError("n_train and n_test must be positive")
    out = Path(out_dir)
    (out / "train").mkdir(parents=True, exist_ok=True)
    (out / "test").mkdir(parents=True, exist_ok=True)
    jobs = [("train", i, i) for i in range(n_train)]
    jobs += [("test", i, n_train + i) for i in range(n_test)]
    args = [(idx, split, g, base_seed, config, ranges, str(out))
            for split, idx, g in jobs]
    workers = max_workers(parallel)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, args, chunksize=8))
    else:
        records = [_simulate_one(*a) for a in args]
    records.sort(key=lambda r: (r["split"] == "test", r["index"]))
    manifest = DatasetManifest(config=config, ranges=ranges, n_train=n_train,
                               n_test=n_test, base_seed=base_seed, samples=records)
    (out / "manifest.json").write_bytes(manifest_to_json(manifest).encode())
    return manifest


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "format_version": manifest.format_version,
        "config": asdict(manifest.config),
        "ranges": asdict(manifest.ranges),
        "n_train": manifest.n_train,
        "n_test": manifest.n_test,
        "base_seed": manifest.base_seed,
        "samples": manifest.samples,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def read_manifest(path: str | Path) -> DatasetManifest:
    root = Path(path)
    mpath = root / "manifest.json" if root.is_dir() else root
    try:
        doc = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read manifest {mpath}: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise DatasetError(
            f"unsupported dataset format_version {doc.get('format_version')!r} "
            f"(supported: {FORMAT_VERSION})"
        )
    ranges_doc = doc["ranges"]
    ranges = ParamRanges(
        wind=tuple(ranges_doc["wind"]),
        pyro=tuple(ranges_doc["pyro"]),
        burn_times=tuple(ranges_doc["burn_times"]),
        prob=tuple(ranges_doc["prob"]),
        theta=tuple(ranges_doc["theta"]),
    )
    cfg_doc = dict(doc["config"])
    return DatasetManifest(
        config=SimConfig(**cfg_doc),
        ranges=ranges,
        n_train=doc["n_train"],
        n_test=doc["n_test"],
        base_seed=doc["base_seed"],
        format_version=doc["format_version"],
        samples=doc["samples"],
    )


def _record_params(record: dict) -> SimParams:
    p = record["params"]
    return SimParams(p["wind_speed"], p["pyro_potential"], p["burn_time_s"],
                     p["ignition_prob"], p["theta"], seed=p["seed"])


def iter_samples(path: str | Path, split: str, verify: bool = True) -> Iterator[Sample]:
    """Stream one split's samples in index order, verifying checksums."""
    root = Path(path)
    manifest = read_manifest(root)
    records = [r for r in (manifest.samples or []) if r["split"] == split]
    records.sort(key=lambda r: r["index"])
    expected = manifest.n_train if split == "train" else manifest.n_test
    if len(records) != expected:
        raise DatasetError(
            f"manifest lists {len(records)} {split} samples, expected {expected}"
        )
    n = manifest.config.interior_size
    for record in records:
        fp = root / record["file"]
        try:
            blob = fp.read_bytes()
        except OSError as exc:
            raise DatasetError(f"sample {split}/{record['index']}: {exc}") from exc
        if verify and hashlib.sha256(blob).hexdigest() != record["sha256"]:
            raise DatasetError(f"sample {split}/{record['index']}: checksum mismatch")
        try:
            data = read_fat(fp)
        except RasterFormatError as exc:
            raise DatasetError(f"sample {split}/{record['index']}: {exc}") from exc
        if data.shape != (n, n, 2):
            raise DatasetError(
                f"sample {split}/{record['index']}: shape {data.shape}, "
                f"expected {(n, n, 2)}"
            )
        yield Sample(params=_record_params(record), arrival=data[:, :, 0],
                     mask=data[:, :, 1] > 0.5, fill_value_s=record["fill_value_s"])


def load_dataset(path: str | Path, verify: bool = True):
    """Read a dataset directory: (manifest, train samples, test samples)."""
    manifest = read_manifest(path)
    train = list(iter_samples(path, "train", verify=verify))
    test = list(iter_samples(path, "test", verify=verify))
    return manifest, train, test
