"""Versioned binary container for built oracles.

Layout (all integers little-endian)::

    magic    4 bytes  b"SPDO"
    version  u16      1
    kind     u8       1 tz, 2 stretch-2, 3 stretch-(4k-1), 4 additive
    mode     u8       bit 0: stored / fourk_plus, bit 1: strict
    n        u64
    k        u32
    seed     u64
    count    u32      number of sections
    sections count × { name_len u8, name ascii, dtype u8 (0 f8, 1 i8, 2 u1),
                       ndim u8, shape u64 × ndim, payload }

Sections hold flat numeric arrays; maps are stored as CSR triples in their
in-memory iteration order, so a load reproduces the exact object and a dump of
the same build is byte-identical.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .graph import Graph
from .landmarks import BallInfo, LandmarkSet, VicinityInfo
from .oracles.additive import AdditiveOracle
from .oracles.mult import LandmarkMetric, MultOracle
from .oracles.stretch2 import Stretch2Oracle
from .tz import TZOracle

MAGIC = b"SPDO"
VERSION = 1
KINDS = {TZOracle: 1, Stretch2Oracle: 2, MultOracle: 3, AdditiveOracle: 4}
DTYPES = {0: "<f8", 1: "<i8", 2: "u1"}


class FormatError(ValueError):
    pass


def _dtype_code(a: np.ndarray) -> int:
    if a.dtype.kind == "f":
        return 0
    if a.dtype == np.uint8:
        return 2
    return 1


class _Writer:
    def __init__(self) -> None:
        self.sections: list[tuple[str, np.ndarray]] = []

    def add(self, name: str, array) -> None:
        a = np.asarray(array)
        if a.dtype.kind == "b":
            a = a.astype(np.uint8)
        elif a.dtype.kind in "iu" and a.dtype != np.uint8:
            a = a.astype("<i8")
        elif a.dtype.kind == "f":
            a = a.astype("<f8")
        elif a.dtype.kind != "u":
            raise TypeError(f"section {name} has unsupported dtype {a.dtype}")
        self.sections.append((name, a))

    def text(self, name: str, value: str) -> None:
        self.add(name, np.frombuffer(value.encode("utf-8"), dtype=np.uint8))

    def blob(self, header: tuple[int, int, int, int, int]) -> bytes:
        out = io.BytesIO()
        kind, mode, n, k, seed = header
        out.write(MAGIC)
        out.write(struct.pack("<HBBQIQI", VERSION, kind, mode, n, k, seed, len(self.sections)))
        for name, a in self.sections:
            raw = name.encode("ascii")
            out.write(struct.pack("<B", len(raw)))
            out.write(raw)
            out.write(struct.pack("<BB", _dtype_code(a), a.ndim))
            out.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            out.write(np.ascontiguousarray(a).tobytes())
        return out.getvalue()


class _Reader:
    def __init__(self, data: bytes) -> None:
        if data[:4] != MAGIC:
            raise FormatError("not an oracle container")
        fmt = "<HBBQIQI"
        version, self.kind, self.mode, self.n, self.k, self.seed, count = struct.unpack_from(fmt, data, 4)
        if version != VERSION:
            raise FormatError(f"unsupported container version {version}")
        pos = 4 + struct.calcsize(fmt)
        self.sections: dict[str, np.ndarray] = {}
        for _ in range(count):
            (ln,) = struct.unpack_from("<B", data, pos)
            name = data[pos + 1 : pos + 1 + ln].decode("ascii")
            pos += 1 + ln
            code, ndim = struct.unpack_from("<BB", data, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}Q", data, pos)
            pos += 8 * ndim
            dt = np.dtype(DTYPES[code])
            size = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
            self.sections[name] = np.frombuffer(data[pos : pos + size], dtype=dt).reshape(shape).copy()
            pos += size
        if pos != len(data):
            raise FormatError("trailing bytes after the last section")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.sections[name]

    def __contains__(self, name: str) -> bool:
        return name in self.sections

    def text(self, name: str) -> str:
        return self.sections[name].tobytes().decode("utf-8")


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


def _put_maps(w: _Writer, prefix: str, maps, width: int) -> None:
    """Maps node -> scalar or tuple, flattened into ``ptr``, ``key`` and ``val``."""
    sizes = [len(m) for m in maps]
    ptr = np.zeros(len(maps) + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    keys = [k for m in maps for k in m]
    if width == 1:
        vals = np.array([m[k] for m in maps for k in m], dtype=np.float64).reshape(-1)
    else:
        vals = np.array([m[k] for m in maps for k in m], dtype=np.float64).reshape(-1, width)
    w.add(prefix + ".ptr", ptr)
    w.add(prefix + ".key", np.array(keys, dtype=np.int64))
    w.add(prefix + ".val", vals)


def _get_maps(r: _Reader, prefix: str, kind: str) -> list[dict]:
    ptr, keys, vals = r[prefix + ".ptr"], r[prefix + ".key"].tolist(), r[prefix + ".val"]
    out = []
    for i in range(len(ptr) - 1):
        s, e = int(ptr[i]), int(ptr[i + 1])
        if kind == "dist":
            out.append(dict(zip(keys[s:e], vals[s:e].tolist())))
        elif kind == "int":
            out.append(dict(zip(keys[s:e], (int(x) for x in vals[s:e]))))
        else:  # (dist, first hop)
            out.append({k: (float(d), int(h)) for k, (d, h) in zip(keys[s:e], vals[s:e].tolist())})
    return out


def _put_graph(w: _Writer, g: Graph) -> None:
    e = np.array(g.edges, dtype=np.float64).reshape(-1, 3)
    w.add("graph.ends", e[:, :2].astype(np.int64))
    w.add("graph.w", e[:, 2])


def _get_graph(r: _Reader, n: int) -> Graph:
    ends, wts = r["graph.ends"], r["graph.w"]
    return Graph(n, zip(ends[:, 0].tolist(), ends[:, 1].tolist(), wts.tolist()))


def _put_landmarks(w: _Writer, L: LandmarkSet) -> None:
    w.add("landmarks", L.ids)
    w.text("landmarks.meta", f"{L.mode}|{'' if L.alpha is None else repr(L.alpha)}|{'' if L.seed is None else L.seed}")


def _get_landmarks(r: _Reader) -> LandmarkSet:
    mode, alpha, seed = r.text("landmarks.meta").split("|")
    return LandmarkSet(
        frozenset(r["landmarks"].tolist()), mode, float(alpha) if alpha else None, int(seed) if seed else None
    )


def _put_tables(w: _Writer, balls, vics) -> None:
    if balls is not None:
        w.add("ball.landmark", [b.landmark for b in balls])
        w.add("ball.radius", [b.radius for b in balls])
        _put_maps(w, "ball", [b.ball for b in balls], 2)
        _put_maps(w, "ball.parent", [b.parent for b in balls], 1)
    if vics is not None:
        _put_maps(w, "vic", [x.vicinity for x in vics], 2)
        _put_maps(w, "vic.parent", [x.parent for x in vics], 1)


def _get_tables(r: _Reader):
    balls = vics = None
    if "ball.ptr" in r:
        maps = _get_maps(r, "ball", "pair")
        parents = _get_maps(r, "ball.parent", "int")
        lm, rad = r["ball.landmark"].tolist(), r["ball.radius"].tolist()
        balls = [BallInfo(v, lm[v], rad[v], maps[v], parents[v]) for v in range(len(maps))]
    if "vic.ptr" in r:
        maps = _get_maps(r, "vic", "pair")
        parents = _get_maps(r, "vic.parent", "int")
        vics = [VicinityInfo(v, maps[v], parents[v]) for v in range(len(maps))]
    return balls, vics


def _put_tz(w: _Writer, o: TZOracle, prefix: str = "tz") -> None:
    w.add(prefix + ".level", o.level_of)
    w.add(prefix + ".witness", o.witness)
    w.add(prefix + ".witness_dist", o.witness_dist)
    _put_maps(w, prefix + ".bunch", o.bunches, 1)
    if o.hops is not None:
        _put_maps(w, prefix + ".hops", o.hops, 1)
    w.add(prefix + ".shape", [o.n, o.k, o.seed])


def _get_tz(r: _Reader, prefix: str = "tz") -> TZOracle:
    n, k, seed = (int(x) for x in r[prefix + ".shape"])
    hops = _get_maps(r, prefix + ".hops", "int") if prefix + ".hops.ptr" in r else None
    return TZOracle(
        n, k, seed, r[prefix + ".level"], r[prefix + ".witness"], r[prefix + ".witness_dist"],
        _get_maps(r, prefix + ".bunch", "dist"), hops,
    )


def _put_metric(w: _Writer, m: LandmarkMetric) -> None:
    _put_tz(w, m.sub, "sub")
    w.add("metric.nearest", m.nearest)
    w.add("metric.radius", m.radius)
    w.add("metric.forest", m.forest_parent)
    order = [int(l) for l in m.landmark_ids]
    _put_maps(w, "metric.legs", [m.legs[l] for l in order], 1)


def _get_metric(r: _Reader, ids: np.ndarray) -> LandmarkMetric:
    legs_list = _get_maps(r, "metric.legs", "int")
    legs = {int(l): legs_list[i] for i, l in enumerate(ids)}
    return LandmarkMetric(ids, _get_tz(r, "sub"), r["metric.nearest"], r["metric.radius"], r["metric.forest"], legs)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def dump_oracle(o) -> bytes:
    w = _Writer()
    kind = KINDS.get(type(o))
    if kind is None:
        raise TypeError(f"cannot serialise {type(o).__name__}")
    if isinstance(o, TZOracle):
        _put_tz(w, o)
        return w.blob((kind, 0, o.n, o.k, o.seed))
    if isinstance(o, Stretch2Oracle):
        mode = (o.variant == "stored") | (int(o.strict) << 1)
        _put_graph(w, o.graph)
        _put_landmarks(w, o.landmarks)
        w.add("table", o.table)
        w.add("table.parent", o.table_parent)
        w.add("nearest", o.nearest)
        w.add("radius", o.radius)
        _put_tables(w, o.balls, o.vicinities)
        return w.blob((kind, mode, o.n, 0, o.seed))
    if isinstance(o, MultOracle):
        mode = (o.variant == "stored") | (int(o.strict) << 1)
        _put_graph(w, o.graph)
        _put_landmarks(w, o.landmarks)
        _put_metric(w, o.metric)
        _put_tables(w, o.balls, o.vicinities)
        return w.blob((kind, mode, o.n, o.k, o.seed))
    mode = int(o.mode == "fourk_plus")
    _put_landmarks(w, o.landmarks)
    _put_tables(w, o.balls, None)
    w.add("nearest", o.nearest)
    w.add("radius", o.radius)
    if o.mode == "two_plus":
        w.add("table", o.table)
        w.add("table.parent", o.table_parent)
    else:
        _put_metric(w, o.metric)
    return w.blob((kind, mode, o.n, o.k, o.seed))


def load_oracle(data: bytes):
    r = _Reader(data)
    if r.kind == 1:
        return _get_tz(r)
    if r.kind == 2:
        g = _get_graph(r, r.n)
        L = _get_landmarks(r)
        balls, vics = _get_tables(r)
        return Stretch2Oracle(
            g, L, "stored" if r.mode & 1 else "onfly", bool(r.mode & 2), L.ids, r["table"],
            r["table.parent"], r["nearest"], r["radius"], balls, vics, r.seed,
        )
    if r.kind == 3:
        g = _get_graph(r, r.n)
        L = _get_landmarks(r)
        balls, vics = _get_tables(r)
        metric = _get_metric(r, L.ids)
        return MultOracle(g, L, r.k, "stored" if r.mode & 1 else "onfly", bool(r.mode & 2), metric, balls, vics, r.seed)
    if r.kind == 4:
        L = _get_landmarks(r)
        balls, _ = _get_tables(r)
        if r.mode & 1:
            metric = _get_metric(r, L.ids)
            return AdditiveOracle(r.n, L, "fourk_plus", r.k, balls, metric.nearest, metric.radius, None, None, metric, r.seed)
        return AdditiveOracle(r.n, L, "two_plus", r.k, balls, r["nearest"], r["radius"], r["table"], r["table.parent"], None, r.seed)
    raise FormatError(f"unknown oracle kind {r.kind}")


def save_oracle(o, path: str | Path) -> None:
    Path(path).write_bytes(dump_oracle(o))


def read_oracle(path: str | Path):
    return load_oracle(Path(path).read_bytes())
