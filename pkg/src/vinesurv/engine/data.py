"""Column configuration, CSV ingestion and covariate preprocessing.

Config document (YAML)::

    columns:
      - {name: age, role: predictor, scale: continuous, margin: auto, transforms: [log, minmax]}
      - {name: stage, role: predictor, scale: discrete}
      - {name: time, role: response-time, margin: auto}
      - {name: status, role: status}
    missing: {policy: median, noise: 0.01}     # or {policy: fail}
    seed: 0

Only columns listed in the config are read; other CSV columns are ignored.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

ROLES = ("predictor", "response-time", "status")
SCALES = ("continuous", "discrete")
TRANSFORMS = ("log", "minmax", "flip-u")


class ConfigError(ValueError):
    pass


class IngestError(ValueError):
    pass


@dataclass
class ColumnSpec:
    name: str
    role: str = "predictor"
    scale: str = "continuous"
    margin: str = "auto"
    transforms: list = field(default_factory=list)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.scale not in SCALES:
            raise ConfigError(f"column {self.name!r}: unknown scale {self.scale!r}")
        bad = [t for t in self.transforms if t not in TRANSFORMS]
        if bad:
            raise ConfigError(f"column {self.name!r}: unknown transform(s) {bad}")
        if self.role != "predictor" and self.transforms:
            raise ConfigError(f"column {self.name!r}: transforms apply to predictors only")

    def to_dict(self):
        return {"name": self.name, "role": self.role, "scale": self.scale,
                "margin": self.margin, "transforms": list(self.transforms)}


@dataclass
class Config:
    columns: list
    missing_policy: str = "median"
    missing_noise: float = 0.01
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ConfigError(f"duplicate column(s) {dup}")
        for role in ("response-time", "status"):
            k = sum(c.role == role for c in self.columns)
            if k != 1:
                raise ConfigError(f"need exactly one {role} column, found {k}")
        if not any(c.role == "predictor" for c in self.columns):
            raise ConfigError("need at least one predictor column")
        if self.missing_policy not in ("median", "fail"):
            raise ConfigError(f"unknown missing-value policy {self.missing_policy!r}")

    @property
    def predictors(self):
        return [c for c in self.columns if c.role == "predictor"]

    @property
    def time_column(self):
        return next(c for c in self.columns if c.role == "response-time")

    @property
    def status_column(self):
        return next(c for c in self.columns if c.role == "status")

    def to_dict(self):
        d = {"columns": [c.to_dict() for c in self.columns],
             "missing": {"policy": self.missing_policy, "noise": self.missing_noise},
             "seed": self.seed}
        d.update(self.extra)
        return d

    def dump(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict) or "columns" not in doc:
            raise ConfigError("config needs a 'columns' list")
        cols = []
        for c in doc["columns"]:
            if isinstance(c, str):
                c = {"name": c}
            unknown = set(c) - {"name", "role", "scale", "margin", "transforms"}
            if unknown:
                raise ConfigError(f"column {c.get('name')!r}: unknown key(s) {sorted(unknown)}")
            cols.append(ColumnSpec(str(c["name"]), c.get("role", "predictor"), c.get("scale", "continuous"),
                                   c.get("margin", "auto"), list(c.get("transforms") or [])))
        miss = doc.get("missing") or {}
        extra = {k: v for k, v in doc.items() if k not in ("columns", "missing", "seed")}
        return cls(cols, miss.get("policy", "median"), float(miss.get("noise", 0.01)),
                   int(doc.get("seed", 0)), extra)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def infer(cls, header, time="time", status="status"):
        """Default config: ``time``/``status`` columns, every other column a continuous predictor."""
        if time not in header or status not in header:
            raise ConfigError(f"without a config the CSV needs '{time}' and '{status}' columns")
        cols = [ColumnSpec(h) for h in header if h not in (time, status)]
        cols += [ColumnSpec(time, "response-time"), ColumnSpec(status, "status")]
        return cls(cols)


@dataclass
class Dataset:
    names: list
    X: np.ndarray
    times: np.ndarray
    status: np.ndarray
    discrete: list
    config: Config
    audit: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.X.shape[0]


def _parse(cell, row, col):
    s = cell.strip()
    if s == "" or s.upper() in ("NA", "NAN"):
        return math.nan
    try:
        return float(s)
    except ValueError:
        raise IngestError(f"row {row}, column {col!r}: cannot parse {cell!r}") from None


def read_csv(path):
    """Header and string rows of a UTF-8 CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    dup = sorted({h for h in header if header.count(h) > 1})
    if dup:
        raise IngestError(f"{path}: duplicate column(s) {dup}")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise IngestError(f"{path}: row {i + 1} has {len(r)} fields, header has {len(header)}")
    return header, body


def ingest(path, config=None, require_response=True, extra_columns=(), seed=None):
    """Read a CSV into a typed :class:`Dataset`.

    Missing predictor cells are filled with the column median plus
    N(0, (noise * SD)^2) noise (``policy: median``) or rejected
    (``policy: fail``); every fill is logged in ``audit``.  Missing or
    invalid response cells always raise.
    """
    header, body = read_csv(path)
    if config is None:
        config = Config.infer(header)
    elif not isinstance(config, Config):
        config = Config.load(config)
    need = [c.name for c in config.predictors]
    if require_response:
        need += [config.time_column.name, config.status_column.name]
    missing_cols = [c for c in need if c not in header]
    if missing_cols:
        raise IngestError(f"{path}: column(s) {missing_cols} named in the config are absent")
    idx = {h: k for k, h in enumerate(header)}

    def column(name):
        k = idx[name]
        return np.array([_parse(r[k], i + 1, name) for i, r in enumerate(body)], dtype=float)

    rng = np.random.default_rng(config.seed if seed is None else seed)
    audit = []
    cols = []
    for c in config.predictors:
        x = column(c.name)
        bad = np.isnan(x)
        if bad.any():
            if config.missing_policy == "fail":
                i = int(np.argmax(bad))
                raise IngestError(f"row {i + 1}, column {c.name!r}: missing value (policy=fail)")
            obs = x[~bad]
            if obs.size == 0:
                raise IngestError(f"column {c.name!r}: all values missing")
            med, sd = float(np.median(obs)), float(np.std(obs))
            fill = med + rng.normal(0.0, config.missing_noise * sd, size=int(bad.sum()))
            if c.scale == "discrete":
                levels = np.unique(obs)
                fill = levels[np.argmin(np.abs(levels[None, :] - fill[:, None]), axis=1)]
            x[bad] = fill
            for i, v in zip(np.nonzero(bad)[0], fill):
                audit.append({"row": int(i + 1), "column": c.name, "filled": float(v)})
        cols.append(x)
    X = np.column_stack(cols) if cols else np.zeros((len(body), 0))
    times = status = None
    if require_response:
        tname, sname = config.time_column.name, config.status_column.name
        times = column(tname)
        status = column(sname)
        for i, (t, s) in enumerate(zip(times, status)):
            if not np.isfinite(t) or t <= 0:
                raise IngestError(f"row {i + 1}, column {tname!r}: time must be a positive number, got {t}")
            if s not in (0.0, 1.0):
                raise IngestError(f"row {i + 1}, column {sname!r}: status must be 0 or 1, got {s:g}")
        status = status.astype(int)
    extra = {name: column(name) for name in extra_columns if name in idx}
    return Dataset([c.name for c in config.predictors], X, times, status,
                   [c.scale == "discrete" for c in config.predictors], config, audit, extra)


def write_csv(path, names, columns):
    """Write equal-length numeric columns with full float precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*columns):
            w.writerow([repr(float(v)) if not float(v).is_integer() or abs(v) > 2**53 else int(v)
                        for v in row])


# ---------------------------------------------------------------- preprocessing

@dataclass
class Preprocessor:
    """Per-predictor ordered transforms with training-set parameters."""

    transforms: list
    params: list = None

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.params = []
        for j, tr in enumerate(self.transforms):
            x = X[:, j].copy()
            pj = {}
            for t in tr:
                if t == "log":
                    if np.any(x <= 0):
                        raise ValueError(f"log transform of predictor {j + 1} needs positive values")
                    x = np.log(x)
                elif t == "minmax":
                    lo, hi = float(x.min()), float(x.max())
                    if hi == lo:
                        raise ValueError(f"min-max transform of constant predictor {j + 1}")
                    pj["min"], pj["max"] = lo, hi
                    x = (x - lo) / (hi - lo)
            self.params.append(pj)
        return self

    def transform(self, X):
        X = np.array(X, dtype=float, copy=True)
        for j, tr in enumerate(self.transforms):
            for t in tr:
                if t == "log":
                    X[:, j] = np.log(X[:, j])
                elif t == "minmax":
                    p = self.params[j]
                    X[:, j] = (X[:, j] - p["min"]) / (p["max"] - p["min"])
        return X

    def forced_flips(self):
        return np.array(["flip-u" in tr for tr in self.transforms], dtype=bool)

    def to_dict(self):
        return {"transforms": [list(t) for t in self.transforms], "params": self.params}

    @classmethod
    def from_dict(cls, d):
        return cls([list(t) for t in d["transforms"]], d.get("params"))
