"""Serialization of ridge sets, uncertainty fields and confidence sets.

Floats are written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from .finder import FinderConfig, GridSpec, RidgePoint, RidgeSet
from .geometry import EigenFrame, NormalFrame
from .inference import ConfidenceSet, UncertaintyField

RIDGE_FORMAT = "densridge.ridge"
RIDGE_VERSION = 1


def _f(x) -> str:
    return repr(float(x))


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def ridge_to_csv(ridge: RidgeSet) -> str:
    d = ridge.locations.shape[1]
    head = ["index"] + [f"x{k}" for k in range(d)] + ["lambda1", "lambda2", "density"]
    head += [f"tangent{k}" for k in range(d)] + ["start_index", "iterations"]
    rows = [head]
    for i, p in enumerate(ridge.points):
        tangent = p.frame.tangent if p.frame is not None else [float("nan")] * d
        rows.append(
            [i]
            + [_f(v) for v in p.location]
            + [_f(p.lambda1), _f(p.lambda2), _f(p.value)]
            + [_f(v) for v in tangent]
            + [p.start_index, p.iterations]
        )
    return _csv(rows)


def _frame_dict(f: NormalFrame) -> Dict[str, Any]:
    return {
        "M": f.M.tolist(),
        "N": f.N.tolist(),
        "tangent": f.tangent.tolist(),
        "H_N": f.H_N.tolist(),
        "W": f.W.tolist(),
        "eigenvalues": f.eigen.eigenvalues.tolist(),
        "eigenvectors": f.eigen.eigenvectors.tolist(),
    }


def ridge_to_dict(ridge: RidgeSet) -> Dict[str, Any]:
    return {
        "format": RIDGE_FORMAT,
        "version": RIDGE_VERSION,
        "h": ridge.h,
        "finder": ridge.config.to_dict(),
        "points": [
            {
                "location": p.location.tolist(),
                "density": p.value,
                "lambda1": p.lambda1,
                "lambda2": p.lambda2,
                "start_index": p.start_index,
                "iterations": p.iterations,
                "frame": _frame_dict(p.frame) if p.frame is not None else None,
            }
            for p in ridge.points
        ],
        "diagnostics": ridge.diagnostics,
    }


def finder_from_dict(d: Dict[str, Any]) -> FinderConfig:
    mesh = d.get("mesh", "from-sample")
    if isinstance(mesh, dict):
        if "grid" in mesh:
            g = mesh["grid"]
            res = g["resolution"]
            mesh = GridSpec(tuple(g["lower"]), tuple(g["upper"]), res if isinstance(res, int) else tuple(res))
        else:
            mesh = np.array(mesh["explicit"], dtype=float)
    kw = {k: d[k] for k in ("tol_projgrad", "max_iters", "density_floor", "step_rule", "step_size", "grad_floor", "merge_radius") if k in d}
    return FinderConfig(mesh=mesh, **kw)


def ridge_from_dict(d: Dict[str, Any]) -> RidgeSet:
    if d.get("format") != RIDGE_FORMAT:
        raise ValueError("not a ridge file")
    if d.get("version") != RIDGE_VERSION:
        raise ValueError(f"unsupported ridge file version {d.get('version')}")
    points = []
    for p in d["points"]:
        frame = None
        fr = p.get("frame")
        loc = np.array(p["location"], dtype=float)
        if fr is not None:
            eigen = EigenFrame(at=loc, eigenvalues=np.array(fr["eigenvalues"]), eigenvectors=np.array(fr["eigenvectors"]))
            frame = NormalFrame(
                at=loc,
                M=np.array(fr["M"]),
                N=np.array(fr["N"]),
                tangent=np.array(fr["tangent"]),
                H_N=np.array(fr["H_N"]),
                W=np.array(fr["W"]),
                eigen=eigen,
            )
        points.append(
            RidgePoint(
                location=loc,
                value=float(p["density"]),
                lambda1=float(p["lambda1"]),
                lambda2=float(p["lambda2"]),
                start_index=int(p["start_index"]),
                iterations=int(p["iterations"]),
                frame=frame,
            )
        )
    return RidgeSet(points=points, h=float(d["h"]), config=finder_from_dict(d["finder"]),
                    diagnostics=list(d.get("diagnostics", [])))


def load_ridge(path) -> RidgeSet:
    return ridge_from_dict(json.loads(Path(path).read_text()))


def uncertainty_to_csv(u: UncertaintyField) -> str:
    d = u.base.locations.shape[1]
    rows = [["index"] + [f"x{k}" for k in range(d)] + ["rho2"]]
    for i, (p, r) in enumerate(zip(u.base.points, u.rho2)):
        rows.append([i] + [_f(v) for v in p.location] + [_f(r)])
    return _csv(rows)


def uncertainty_to_dict(u: UncertaintyField) -> Dict[str, Any]:
    out = {
        "format": "densridge.uncertainty",
        "version": 1,
        "h": u.h,
        "plan": u.plan.to_dict(),
        "replicates_ok": u.n_ok,
        "failed": [{"replicate": b, "reason": m} for b, m in u.failed],
        "rho2": u.rho2.tolist(),
    }
    if u.per_replicate is not None:
        out["per_replicate"] = u.per_replicate.tolist()
    return out


def confset_to_dict(c: ConfidenceSet) -> Dict[str, Any]:
    return {
        "format": "densridge.confset",
        "version": 1,
        "h": c.h,
        "alpha": c.alpha,
        "radius": c.radius,
        "statistic": c.statistic_kind,
        "quantile_convention": c.quantile_convention,
        "plan": c.plan.to_dict(),
        "distances": c.distances.tolist(),
        "failed": [{"replicate": b, "reason": m} for b, m in c.failed],
    }


def tube_to_csv(c: ConfidenceSet) -> str:
    d = c.base.locations.shape[1]
    rows = [["index"] + [f"x{k}" for k in range(d)] + ["radius"]]
    for i, (p, r) in enumerate(zip(c.base.points, c.tube_radii())):
        rows.append([i] + [_f(v) for v in p.location] + [_f(r)])
    return _csv(rows)
