"""Hexagonal-cell feature index and multi-radius category counts around staypoints."""
from __future__ import annotations

import fnmatch
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import h3
import numpy as np
import yaml

from . import _kernels

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 10
DEFAULT_RADII = (500.0, 1000.0, 2000.0)
INDEX_FORMAT = "mobshift-spatial-index v1"


@dataclass
class CategoryMap:
    categories: list[str]
    rules: list[tuple[str, str]]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "CategoryMap":
        if path is None:
            text = resources.files("mobshift").joinpath("categories.yaml").read_text()
        else:
            text = Path(path).read_text()
        doc = yaml.safe_load(text)
        cats = list(doc["categories"])
        rules = [(r["pattern"], r["category"]) for r in doc.get("mapping", [])]
        for _, c in rules:
            if c not in cats:
                raise ValueError(f"mapping targets unknown category {c!r}")
        return cls(cats, rules)

    def resolve(self, properties: dict) -> int | None:
        """Category index for a GeoJSON properties dict, or None if unmapped."""
        cat = properties.get("category")
        if isinstance(cat, str) and cat in self.categories:
            return self.categories.index(cat)
        candidates = []
        if isinstance(cat, str):
            candidates.append(cat)
        candidates += [f"{k}={v}" for k, v in properties.items() if k != "category" and isinstance(v, (str, int))]
        for pattern, target in self.rules:
            for c in candidates:
                if fnmatch.fnmatchcase(c, pattern):
                    return self.categories.index(target)
        return None


@dataclass(frozen=True)
class GeoFeature:
    """``kind`` is point, line or polygon; ``parts`` holds (lat, lon) arrays.

    A polygon part is a list of rings (outer first); point and line parts are
    single (n, 2) arrays.
    """
    kind: str
    parts: tuple
    category: int


@dataclass
class SpatialFeatureIndex:
    resolution: int
    categories: list[str]
    counts: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def get(self, cell: str) -> np.ndarray:
        v = self.counts.get(cell)
        return v.copy() if v is not None else np.zeros(self.n_categories, dtype=np.int64)

    def __add__(self, other: "SpatialFeatureIndex") -> "SpatialFeatureIndex":
        if other.resolution != self.resolution or other.categories != self.categories:
            raise ValueError("cannot merge indexes with different resolution or categories")
        merged = {c: v.copy() for c, v in self.counts.items()}
        for c, v in other.counts.items():
            if c in merged:
                merged[c] += v
            else:
                merged[c] = v.copy()
        return SpatialFeatureIndex(self.resolution, list(self.categories), merged)

    def arrays(self):
        """Cell centers and count matrix, ordered by cell id."""
        cells = sorted(self.counts)
        lat = np.empty(len(cells))
        lon = np.empty(len(cells))
        mat = np.zeros((len(cells), self.n_categories))
        for i, c in enumerate(cells):
            lat[i], lon[i] = h3.cell_to_latlng(c)
            mat[i] = self.counts[c]
        return lat, lon, mat

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            f.write(f"# {INDEX_FORMAT}\n# resolution={self.resolution}\n")
            f.write("# categories=" + ",".join(self.categories) + "\n")
            f.write("cell," + ",".join(f"c{i}" for i in range(self.n_categories)) + "\n")
            for c in sorted(self.counts):
                f.write(c + "," + ",".join(str(int(x)) for x in self.counts[c]) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SpatialFeatureIndex":
        with open(path) as f:
            lines = f.read().splitlines()
        if not lines or lines[0] != f"# {INDEX_FORMAT}":
            raise ValueError(f"{path}: not a {INDEX_FORMAT} file")
        meta = {}
        body = []
        for ln in lines[1:]:
            if ln.startswith("#"):
                k, _, v = ln[1:].strip().partition("=")
                meta[k] = v
            else:
                body.append(ln)
        cats = meta["categories"].split(",")
        idx = cls(int(meta["resolution"]), cats)
        for ln in body[1:]:
            cell, *vals = ln.split(",")
            idx.counts[cell] = np.array([int(v) for v in vals], dtype=np.int64)
        return idx


# --------------------------------------------------------------------------
# geometry -> cells
# --------------------------------------------------------------------------

def _valid_latlon(arr: np.ndarray) -> bool:
    return (arr.ndim == 2 and arr.shape[1] == 2 and arr.shape[0] > 0 and np.isfinite(arr).all()
            and (np.abs(arr[:, 0]) <= 90).all() and (np.abs(arr[:, 1]) <= 180).all())


def _line_cells(line: np.ndarray, resolution: int) -> set[str]:
    cells = {h3.latlng_to_cell(line[0, 0], line[0, 1], resolution)}
    # sample densely enough that no traversed cell is skipped
    step_m = h3.average_hexagon_edge_length(resolution, "m") / 4.0
    for (la1, lo1), (la2, lo2) in zip(line[:-1], line[1:]):
        d = h3.great_circle_distance((la1, lo1), (la2, lo2), "m")
        n = max(1, int(np.ceil(d / step_m)))
        for f in np.linspace(0.0, 1.0, n + 1)[1:]:
            cells.add(h3.latlng_to_cell(la1 + f * (la2 - la1), lo1 + f * (lo2 - lo1), resolution))
    return cells


def _polygon_cells(rings: Sequence[np.ndarray], resolution: int) -> set[str]:
    poly = h3.LatLngPoly(*[[tuple(p) for p in ring] for ring in rings])
    cells = set(h3.h3shape_to_cells(poly, resolution))
    if not cells:
        # polygon smaller than a cell: fall back to the cell holding its vertex mean
        outer = rings[0][:-1] if len(rings[0]) > 1 and np.array_equal(rings[0][0], rings[0][-1]) else rings[0]
        c = outer.mean(axis=0)
        cells.add(h3.latlng_to_cell(c[0], c[1], resolution))
    return cells


def _check_parts(feature: GeoFeature) -> None:
    if not feature.parts:
        raise ValueError("empty geometry")
    for part in feature.parts:
        arrays = part if feature.kind == "polygon" else [part]
        if not arrays or not all(_valid_latlon(np.asarray(a, dtype=np.float64)) for a in arrays):
            raise ValueError("invalid coordinates")


def feature_cells(feature: GeoFeature, resolution: int) -> set[str]:
    _check_parts(feature)
    cells: set[str] = set()
    for part in feature.parts:
        if feature.kind == "point":
            for la, lo in part:
                cells.add(h3.latlng_to_cell(la, lo, resolution))
        elif feature.kind == "line":
            cells |= _line_cells(part, resolution)
        elif feature.kind == "polygon":
            cells |= _polygon_cells(part, resolution)
        else:
            raise ValueError(f"unknown geometry kind {feature.kind!r}")
    return cells


def build_index(features: Iterable[GeoFeature], resolution: int = DEFAULT_RESOLUTION,
                categories: Sequence[str] | None = None) -> tuple[SpatialFeatureIndex, list[str]]:
    """Count features per hexagonal cell.

    Each feature contributes at most 1 to any cell it touches.  Returns the
    index and a list of skip reasons for features with invalid geometry.
    """
    if not 0 <= resolution <= 15:
        raise ValueError(f"invalid H3 resolution {resolution}")
    categories = list(categories) if categories is not None else CategoryMap.load().categories
    n_cat = len(categories)
    counts: dict[str, np.ndarray] = {}
    skipped: list[str] = []
    for i, feat in enumerate(features):
        if not 0 <= feat.category < n_cat:
            skipped.append(f"feature {i}: category index {feat.category} out of range")
            continue
        try:
            cells = feature_cells(feat, resolution)
        except (ValueError, h3.H3BaseException) as exc:
            skipped.append(f"feature {i}: {exc}")
            continue
        for c in cells:
            v = counts.get(c)
            if v is None:
                v = counts[c] = np.zeros(n_cat, dtype=np.int64)
            v[feat.category] += 1
    if skipped:
        log.info("skipped %d geo features", len(skipped))
    return SpatialFeatureIndex(resolution, categories, counts), skipped


# --------------------------------------------------------------------------
# GeoJSON
# --------------------------------------------------------------------------

def _to_latlon(coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("malformed coordinates")
    return arr[:, [1, 0]].copy()  # GeoJSON is lon, lat


def parse_geometry(geom: dict) -> tuple[str, tuple]:
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    if coords is None or (hasattr(coords, "__len__") and len(coords) == 0):
        raise ValueError("empty geometry")
    if gtype == "Point":
        kind, raw = "point", [[coords]]
    elif gtype == "MultiPoint":
        kind, raw = "point", [coords]
    elif gtype == "LineString":
        kind, raw = "line", [coords]
    elif gtype == "MultiLineString":
        kind, raw = "line", coords
    elif gtype == "Polygon":
        kind, raw = "polygon", [coords]
    elif gtype == "MultiPolygon":
        kind, raw = "polygon", coords
    else:
        raise ValueError(f"unsupported geometry type {gtype!r}")
    parts = []
    for part in raw:
        if kind == "polygon":
            rings = [_to_latlon(r) for r in part]
            if not rings or any(not _valid_latlon(r) or len(r) < 4 for r in rings):
                raise ValueError("invalid polygon ring")
            parts.append(tuple(rings))
        else:
            arr = _to_latlon(part)
            if not _valid_latlon(arr) or (kind == "line" and len(arr) < 2):
                raise ValueError(f"invalid {kind} coordinates")
            parts.append(arr)
    return kind, tuple(parts)


def read_geojson(source, category_map: CategoryMap | None = None) -> tuple[list[GeoFeature], list[str]]:
    """Parse a GeoJSON FeatureCollection (path, text stream or dict)."""
    category_map = category_map or CategoryMap.load()
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source) as f:
            doc = json.load(f)
    features: list[GeoFeature] = []
    skipped: list[str] = []
    for i, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        cat = category_map.resolve(props)
        if cat is None:
            skipped.append(f"feature {i}: unmapped category {props.get('category')!r}")
            continue
        try:
            kind, parts = parse_geometry(feat.get("geometry") or {})
        except (ValueError, TypeError) as exc:
            skipped.append(f"feature {i}: {exc}")
            continue
        features.append(GeoFeature(kind, parts, cat))
    return features, skipped


# --------------------------------------------------------------------------
# buffers
# --------------------------------------------------------------------------

class BufferQuery:
    """Precomputed cell-center arrays for repeated buffer queries on one index."""

    def __init__(self, index: SpatialFeatureIndex):
        self.index = index
        self.cell_lat, self.cell_lon, self.cell_counts = index.arrays()

    def counts(self, lats, lons, radii=DEFAULT_RADII) -> np.ndarray:
        radii = _check_radii(radii)
        lats = np.ascontiguousarray(lats, dtype=np.float64)
        lons = np.ascontiguousarray(lons, dtype=np.float64)
        return _kernels.buffer_counts_kernel(lats, lons, self.cell_lat, self.cell_lon, self.cell_counts, radii)


def _check_radii(radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0:
        raise ValueError("radii must be non-empty")
    if radii.ndim != 1 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    return radii


def buffer_counts(index: SpatialFeatureIndex, lat: float, lon: float, radii=DEFAULT_RADII) -> np.ndarray:
    """Per-category counts of cells whose center lies within each radius (meters).

    Rows are cumulative: the row for a larger radius includes everything in
    the smaller ones.  Shape ``(len(radii), n_categories)``.
    """
    return BufferQuery(index).counts([lat], [lon], radii)[0]


def normalize_spatial(matrix: np.ndarray) -> np.ndarray:
    """Row-major flatten followed by ``log1p``."""
    return np.log1p(np.asarray(matrix, dtype=np.float64).reshape(-1))
