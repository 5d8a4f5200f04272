"""CSV/JSON serialisation of maps, fringe spectra and visibility curves.

CSV files carry the metadata as leading ``# key: json`` comment lines, the
same convention as spectrum files. JSON files hold axes, row-major values and
a ``metadata`` block.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .interferometer import (
    FringeSpectrum,
    InterferenceMap,
    VisibilityCurve,
    VisibilityPoint,
)


def _header(fh, metadata):
    for k, v in (metadata or {}).items():
        fh.write(f"# {k}: {json.dumps(v)}\n")


def write_map(m: InterferenceMap, out_dir, stem="map", metadata=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(m.metadata, **(metadata or {}))
    json_path = out / f"{stem}.json"
    json_path.write_text(
        json.dumps(
            {
                "signal_nm": m.signal_nm.tolist(),
                "theta_deg": m.theta_deg.tolist(),
                "intensity_W": m.intensity.ravel().tolist(),
                "shape": list(m.intensity.shape),
                "metadata": meta,
            }
        )
    )
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        _header(fh, meta)
        wr = csv.writer(fh)
        wr.writerow(["signal_nm"] + [f"theta_{float(t)!r}" for t in m.theta_deg])
        for lam, row in zip(m.signal_nm, m.intensity):
            wr.writerow([repr(float(lam))] + [repr(float(v)) for v in row])
    return csv_path, json_path


def write_fringe(fs: FringeSpectrum, out_dir, stem="fringe", metadata=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(fs.metadata, **(metadata or {}))
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        _header(fh, meta)
        fh.write("signal_nm,intensity_W_deg\n")
        fh.writelines(f"{float(x)!r},{float(y)!r}\n" for x, y in zip(fs.signal_nm, fs.intensity))
    json_path = out / f"{stem}.json"
    json_path.write_text(
        json.dumps({"signal_nm": fs.signal_nm.tolist(), "intensity_W_deg": fs.intensity.tolist(), "metadata": meta})
    )
    return csv_path, json_path


VISIBILITY_FIELDS = ("signal_nm", "visibility", "halfwidth_nm")


def write_visibility(curve: VisibilityCurve, out_dir, stem="visibility", metadata=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = dict(curve.metadata, **(metadata or {}))
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        _header(fh, meta)
        fh.write(",".join(VISIBILITY_FIELDS) + "\n")
        fh.writelines(f"{float(p.signal_nm)!r},{float(p.visibility)!r},{float(p.halfwidth_nm)!r}\n" for p in curve.points)
    json_path = out / f"{stem}.json"
    json_path.write_text(
        json.dumps(
            {
                "signal_nm": curve.signal_nm.tolist(),
                "visibility": curve.visibility.tolist(),
                "halfwidth_nm": curve.halfwidth_nm.tolist(),
                "metadata": meta,
            }
        )
    )
    return csv_path, json_path


def read_visibility(path) -> VisibilityCurve:
    """Read a visibility CSV or JSON written by :func:`write_visibility`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"visibility file not found: {path}")
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(path.read_text())
            cols = [raw[k] for k in VISIBILITY_FIELDS]
        except (json.JSONDecodeError, KeyError) as exc:
            raise ParseError(f"invalid visibility JSON: {exc}", path=path) from None
        pts = tuple(VisibilityPoint(float(a), float(b), float(c)) for a, b, c in zip(*cols))
        return VisibilityCurve(pts, raw.get("metadata", {}))
    meta, pts, header = {}, [], None
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, sep, v = line[1:].partition(":")
                if sep:
                    try:
                        meta[k.strip()] = json.loads(v)
                    except json.JSONDecodeError:
                        meta[k.strip()] = v.strip()
                continue
            row = line.split(",")
            if header is None:
                if tuple(c.strip() for c in row) != VISIBILITY_FIELDS:
                    raise ParseError(f"expected header {','.join(VISIBILITY_FIELDS)}", line=lineno, path=path)
                header = row
                continue
            try:
                a, b, c = (float(v) for v in row)
            except ValueError:
                raise ParseError(f"malformed row {line!r}", line=lineno, path=path) from None
            pts.append(VisibilityPoint(a, b, c))
    if header is None:
        raise ParseError("missing header line", path=path)
    return VisibilityCurve(tuple(pts), meta)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj
