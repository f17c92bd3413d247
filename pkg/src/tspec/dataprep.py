"""Dataset preparation: standardization, splitting, noise, and synthesis.

The central type is ``Dataset``: one row per sliding-window position, with
the flattened feature block, the continuous spectrum label, and the discrete
window label (1 iff the window contains any attack packet).  Noise injection
operates on standardized features so a single scale parameter means the same
thing across features.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ingest import PacketRecord, PacketTimeline
from .seeds import derive_seed
from .spectrum import EncodingConfig, coap_values, sspe_values
from .windowing import window_attack_tags, window_binary_labels, window_matrices

LABEL_METHODS = ("baseline", "coap", "sspe")
ATTACK_PATTERNS = ("burst", "periodic", "ramp")
DATASET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ZScoreParams:
    """Per-column population mean and standard deviation."""

    means: np.ndarray
    stds: np.ndarray
    constant_mask: np.ndarray

    def to_dict(self) -> dict:
        return {
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
            "constant_mask": [int(v) for v in self.constant_mask],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ZScoreParams":
        return cls(
            means=np.asarray(data["means"], dtype=np.float64),
            stds=np.asarray(data["stds"], dtype=np.float64),
            constant_mask=np.asarray(data["constant_mask"], dtype=bool),
        )


def zscore_fit(features: np.ndarray) -> ZScoreParams:
    matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise DataError("z-score fit needs a non-empty 2-D matrix")
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    return ZScoreParams(means=means, stds=stds, constant_mask=stds == 0.0)


def zscore_apply(features: np.ndarray, params: ZScoreParams) -> np.ndarray:
    """(x - mean) / std per column; constant columns map to 0."""
    matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != params.means.size:
        raise DataError(
            f"feature width {matrix.shape[-1] if matrix.ndim == 2 else '?'} does not "
            f"match fitted width {params.means.size}"
        )
    safe_stds = np.where(params.constant_mask, 1.0, params.stds)
    out = (matrix - params.means) / safe_stds
    out[:, params.constant_mask] = 0.0
    return out


@dataclass(eq=False)
class Dataset:
    """Model-ready rows: features, spectrum label, and window label per row.

    ``window_tags`` (optional) carries the per-row attack name so segments of
    one attack can be grouped during identification; ``provenance`` echoes
    how the rows were built (window size, stride, method, seeds, ...).
    """

    features: np.ndarray
    spectrum_labels: np.ndarray
    binary_labels: np.ndarray
    attack_name: str | None = None
    provenance: dict = field(default_factory=dict)
    window_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        m = self.features.shape[0]
        if self.spectrum_labels.shape != (m,) or self.binary_labels.shape != (m,):
            raise DataError("dataset label vectors must align with feature rows")
        if self.window_tags is not None and len(self.window_tags) != m:
            raise DataError("dataset window tags must align with feature rows")

    def __len__(self) -> int:
        return self.features.shape[0]

    def take(self, indices: np.ndarray, role: str | None = None) -> "Dataset":
        """Row subset in the given index order, with provenance annotated."""
        indices = np.asarray(indices, dtype=np.int64)
        prov = dict(self.provenance)
        if role is not None:
            prov["role"] = role
        prov["row_indices"] = [int(i) for i in indices]
        return Dataset(
            features=self.features[indices].copy(),
            spectrum_labels=self.spectrum_labels[indices].copy(),
            binary_labels=self.binary_labels[indices].copy(),
            attack_name=self.attack_name,
            provenance=prov,
            window_tags=None
            if self.window_tags is None
            else tuple(self.window_tags[i] for i in indices),
        )


def split_dataset(
    ds: Dataset, test_fraction: float, seed: int, stratify: bool = True
) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive train/test partition with a seeded shuffle.

    The test side gets round(M * test_fraction) rows; with ``stratify`` the
    rounding is applied per binary-label class, preserving class proportions
    within one sample.  Selected indices are re-sorted so both parts keep the
    original row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test fraction must be in (0, 1), got {test_fraction}")
    m = len(ds)
    if m < 2:
        raise DataError("need at least 2 rows to split")

    rng = np.random.default_rng(seed)
    if stratify:
        test_parts = []
        for cls in (0, 1):
            idx = np.flatnonzero(ds.binary_labels == cls)
            n_test = int(round(idx.size * test_fraction))
            test_parts.append(rng.permutation(idx)[:n_test])
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        perm = rng.permutation(m)
        test_idx = np.sort(perm[: int(round(m * test_fraction))])

    mask = np.zeros(m, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    return ds.take(train_idx, role="train"), ds.take(test_idx, role="test")


def downsample_majority(ds: Dataset, majority_ratio: float, seed: int) -> Dataset:
    """Optional class rebalancing: thin the majority binary class down to at
    most ``majority_ratio`` times the minority count.  Disabled by default in
    the pipeline; row order is preserved."""
    if majority_ratio <= 0:
        raise ConfigError("majority ratio must be positive")
    ones = np.flatnonzero(ds.binary_labels == 1)
    zeros = np.flatnonzero(ds.binary_labels == 0)
    if ones.size == 0 or zeros.size == 0:
        return ds.take(np.arange(len(ds)))
    minority, majority = (ones, zeros) if ones.size <= zeros.size else (zeros, ones)
    cap = int(round(minority.size * majority_ratio))
    if majority.size <= cap:
        return ds.take(np.arange(len(ds)))
    rng = np.random.default_rng(seed)
    kept_majority = rng.permutation(majority)[:cap]
    keep = np.sort(np.concatenate([minority, kept_majority]))
    return ds.take(keep)


@dataclass(frozen=True)
class NoiseSpec:
    """Fraction of rows to perturb, noise scale, and the stream seed."""

    ratio: float
    scale: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError(f"noise ratio must be in [0, 1], got {self.ratio}")
        if self.scale <= 0.0:
            raise ConfigError(f"noise scale must be positive, got {self.scale}")


def inject_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    """Add seeded Gaussian noise to exactly round(ratio * M) rows.

    Rows are chosen uniformly without replacement; every feature of a chosen
    row receives independent N(0, scale^2) noise.  Labels and tags are never
    touched, and ratio 0 returns a bit-exact copy.
    """
    m = len(ds)
    n_rows = int(round(spec.ratio * m))
    features = ds.features.copy()
    if n_rows > 0:
        rng = np.random.default_rng(spec.seed)
        rows = rng.choice(m, size=n_rows, replace=False)
        features[rows] += rng.normal(0.0, spec.scale, size=(n_rows, features.shape[1]))
    return replace(ds, features=features)


def noise_grid(
    scale: float = 1.0, base_seed: int = 0, ratios=None
) -> list[NoiseSpec]:
    """The default sweep grid: ratios 0%..100% in 10% steps, one derived seed
    per ratio so specs can be evaluated independently or concurrently."""
    if ratios is None:
        ratios = [i / 10 for i in range(11)]
    return [
        NoiseSpec(
            ratio=float(r),
            scale=scale,
            seed=derive_seed(base_seed, "noise", int(round(float(r) * 100))),
        )
        for r in ratios
    ]


@dataclass(frozen=True)
class AttackSegment:
    """One labeled stretch of a synthetic timeline.

    Patterns: ``burst`` marks every second of the segment, ``periodic`` every
    ``period``-th second, and ``ramp`` a deterministic schedule whose attack
    density rises linearly from 0 to 1 across the segment (floor(L/2) attack
    seconds in total).
    """

    name: str
    start: int
    length: int
    pattern: str
    period: int = 3
    offset: float | tuple[float, ...] = 1.0

    def __post_init__(self):
        if self.pattern not in ATTACK_PATTERNS:
            raise ConfigError(f"pattern must be one of {ATTACK_PATTERNS}, got {self.pattern!r}")
        if self.length <= 0:
            raise ConfigError("segment length must be positive")
        if self.start < 0:
            raise ConfigError("segment start must be >= 0")
        if self.pattern == "periodic" and self.period < 1:
            raise ConfigError("periodic segments need period >= 1")

    def attack_offsets(self) -> list[int]:
        """Offsets (within the segment) of the label-1 seconds."""
        if self.pattern == "burst":
            return list(range(self.length))
        if self.pattern == "periodic":
            return list(range(0, self.length, self.period))
        twice_len = 2 * self.length
        return [
            i
            for i in range(self.length)
            if ((i + 1) * (i + 1)) // twice_len > (i * i) // twice_len
        ]


@dataclass(frozen=True)
class SyntheticScenario:
    duration: int
    feature_count: int
    segments: tuple[AttackSegment, ...]
    normal_mean: float | tuple[float, ...] = 0.0
    normal_std: float | tuple[float, ...] = 1.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("scenario duration must be positive")
        if self.feature_count < 1:
            raise ConfigError("scenario needs at least one feature")
        ordered = sorted(self.segments, key=lambda s: s.start)
        for earlier, later in zip(ordered, ordered[1:]):
            if earlier.start + earlier.length > later.start:
                raise ConfigError(
                    f"overlapping attack segments: {earlier.name!r} and {later.name!r}"
                )
        for seg in ordered:
            if seg.start + seg.length > self.duration:
                raise ConfigError(f"segment {seg.name!r} extends past the scenario duration")

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticScenario":
        try:
            segments = tuple(
                AttackSegment(
                    name=s["name"],
                    start=int(s["start"]),
                    length=int(s["length"]),
                    pattern=s["pattern"],
                    period=int(s.get("period", 3)),
                    offset=tuple(s["offset"]) if isinstance(s.get("offset"), list) else float(s.get("offset", 1.0)),
                )
                for s in data["segments"]
            )
            return cls(
                duration=int(data["duration"]),
                feature_count=int(data["feature_count"]),
                segments=segments,
                normal_mean=tuple(data["normal_mean"]) if isinstance(data.get("normal_mean"), list) else float(data.get("normal_mean", 0.0)),
                normal_std=tuple(data["normal_std"]) if isinstance(data.get("normal_std"), list) else float(data.get("normal_std", 1.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"scenario is missing key {exc}") from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticScenario":
        path = Path(path)
        if not path.exists():
            raise DataError(f"scenario file not found: {path}")
        with path.open("r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _per_feature(value, width: int, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(width, float(arr))
    if arr.shape != (width,):
        raise ConfigError(f"{what} must be a scalar or have length {width}")
    return arr


def generate_synthetic(scenario: SyntheticScenario, seed: int) -> PacketTimeline:
    """Per-second synthetic traffic: Gaussian normal features, with attack
    seconds labeled 1 and their feature means shifted by the segment offset."""
    width = scenario.feature_count
    mean = _per_feature(scenario.normal_mean, width, "normal_mean")
    std = _per_feature(scenario.normal_std, width, "normal_std")

    attack_at: dict[int, tuple[str, np.ndarray]] = {}
    for seg in scenario.segments:
        shift = _per_feature(seg.offset, width, f"offset of segment {seg.name!r}")
        for off in seg.attack_offsets():
            attack_at[seg.start + off] = (seg.name, shift)

    rng = np.random.default_rng(seed)
    records = []
    for second in range(scenario.duration):
        values = rng.normal(mean, std)
        label, attack = 0, ""
        if second in attack_at:
            attack, shift = attack_at[second]
            values = values + shift
            label = 1
        records.append(
            PacketRecord(
                second=second,
                features=tuple(float(v) for v in values),
                label=label,
                attack=attack,
            )
        )
    names = tuple(f"f{j}" for j in range(width))
    return PacketTimeline(records=tuple(records), feature_names=names)


def assemble_dataset(
    timeline: PacketTimeline,
    window_size: int,
    stride: int,
    method: str,
    d_model: int | None = None,
) -> Dataset:
    """Window the timeline and attach spectrum + window labels.

    ``spectrum_labels`` hold the method's continuous values (for the baseline
    method they simply repeat the discrete window label); ``binary_labels``
    always hold the ground-truth window label (1 iff any attack packet).
    """
    if method not in LABEL_METHODS:
        raise ConfigError(f"label method must be one of {LABEL_METHODS}, got {method!r}")
    features, label_bits, _ = window_matrices(timeline, window_size, stride)
    window_labels = window_binary_labels(label_bits, "any")

    if method == "baseline":
        values = window_labels.astype(np.float64)
        d_model = None
    elif method == "coap":
        values = coap_values(label_bits)
        d_model = None
    else:
        if d_model is None:
            raise ConfigError("method sspe requires d_model")
        values = sspe_values(label_bits, EncodingConfig(d_model=d_model))

    tags = window_attack_tags(timeline, window_size, stride)
    provenance = {
        "window": window_size,
        "stride": stride,
        "method": method,
        "d_model": d_model,
        "attack_bit_fraction": float(np.asarray(label_bits).mean()),
        "feature_names": list(timeline.feature_names),
    }
    return Dataset(
        features=features,
        spectrum_labels=values,
        binary_labels=window_labels,
        provenance=provenance,
        window_tags=tags,
    )


def save_dataset(ds: Dataset, out_dir: str | Path, sidecar_extra: dict | None = None) -> None:
    """Write ``dataset.csv`` (f0..f{D-1}, spectrum_label, binary_label) plus a
    ``dataset.json`` sidecar with provenance, tags, and any extras (z-score
    parameters, split indices, seeds)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = ds.features.shape[1]

    with (out_dir / "dataset.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{j}" for j in range(width)] + ["spectrum_label", "binary_label"])
        for i in range(len(ds)):
            row = [repr(float(v)) for v in ds.features[i]]
            row.append(repr(float(ds.spectrum_labels[i])))
            row.append(str(int(ds.binary_labels[i])))
            writer.writerow(row)

    sidecar = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "rows": len(ds),
        "feature_width": width,
        "attack_name": ds.attack_name,
        "provenance": ds.provenance,
        "window_tags": list(ds.window_tags) if ds.window_tags is not None else None,
    }
    if sidecar_extra:
        sidecar.update(sidecar_extra)
    with (out_dir / "dataset.json").open("w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_dataset(in_dir: str | Path) -> tuple[Dataset, dict]:
    """Read back a ``save_dataset`` directory; returns (dataset, sidecar)."""
    in_dir = Path(in_dir)
    csv_path = in_dir / "dataset.csv"
    json_path = in_dir / "dataset.json"
    if not csv_path.exists() or not json_path.exists():
        raise DataError(f"no dataset found under {in_dir}")
    with json_path.open("r", encoding="utf-8") as handle:
        sidecar = json.load(handle)
    if sidecar.get("schema_version") != DATASET_SCHEMA_VERSION:
        raise DataError(
            f"unsupported dataset schema version {sidecar.get('schema_version')!r}"
        )

    features, spectrum, binary = [], [], []
    with csv_path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[-2:] != ["spectrum_label", "binary_label"]:
            raise DataError(f"{csv_path}: unexpected dataset header")
        for row in reader:
            features.append([float(v) for v in row[:-2]])
            spectrum.append(float(row[-2]))
            binary.append(int(row[-1]))

    tags = sidecar.get("window_tags")
    ds = Dataset(
        features=np.asarray(features, dtype=np.float64).reshape(
            len(features), sidecar["feature_width"]
        ),
        spectrum_labels=np.asarray(spectrum, dtype=np.float64),
        binary_labels=np.asarray(binary, dtype=np.int64),
        attack_name=sidecar.get("attack_name"),
        provenance=dict(sidecar.get("provenance", {})),
        window_tags=tuple(tags) if tags is not None else None,
    )
    return ds, sidecar
