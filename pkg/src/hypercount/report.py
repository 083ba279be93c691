"""Growth-exponent fits, the bundled instance catalog and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .counting import CountReport, count_on_coordinate_subspace, count_projective
from .detlab import AuxCertificate, CoveringReport, PrimePlan
from .geometry import (
    SMOOTH,
    ExponentTable,
    Hypersurface,
    SmoothnessVerdict,
    certify_smooth_over_Q,
    detect_split_shape,
)
from .poly import read_poly_file
from .slicer import RecursionTrace, SliceScan

SCHEMA = "hc/1"
VOLATILE = ("wall_ms", "workers", "shards", "version")
DEFAULT_B_SERIES = (8, 16, 32, 64)


# ---------------------------------------------------------------------------
# exponent fits
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    pairs: list[tuple[int, int]]
    used: list[tuple[int, int]]
    slope: float
    intercept: float
    residual: float
    comparisons: list[dict] = field(default_factory=list)


def fit_exponent(pairs: Sequence[tuple[int, int]], table: ExponentTable | None = None,
                 affine: bool = False) -> FitResult:
    """Least-squares slope of log N against log B; pairs with N = 0 are dropped."""
    pairs = [(int(b), int(n)) for b, n in pairs]
    used = [(b, n) for b, n in pairs if n > 0 and b > 0]
    if len(used) < 3 or len({b for b, _ in used}) < 2:
        raise ValueError(f"need at least 3 pairs with N > 0 (got {len(used)})")
    x = np.log([b for b, _ in used])
    y = np.log([n for _, n in used])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    if not math.isfinite(slope):
        raise ValueError("non-finite slope")
    result = FitResult(pairs, used, float(slope), float(intercept), residual)
    if table is not None:
        result.comparisons = compare_exponents(result.slope, table, affine)
    return result


def compare_exponents(slope: float, table: ExponentTable, affine: bool = False) -> list[dict]:
    rows = [("dim-growth", table.dim_growth - (1 if affine else 0))]
    if affine and table.affine_bound is not None:
        rows.append(("main bound", table.affine_bound))
    elif not affine and table.main_bound is not None:
        rows.append(("main bound", table.main_bound))
    if not affine and table.n == 4:
        rows.append(("P^4 bound", table.p4_bound))
    rows.append(("trivial", table.trivial_affine if affine else table.trivial_projective))
    out = []
    for name, exponent in rows:
        margin = exponent - slope
        out.append({
            "bound": name,
            "exponent": exponent,
            "margin": margin,
            "verdict": f"{'below' if margin >= 0 else 'above'} {name}",
        })
    return out


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    filename: str
    projective: bool
    n: int
    provenance: str
    expect_smooth: bool | None = None
    certifying_prime: int | None = None
    plane: tuple[int, ...] | None = None
    split: bool = False

    def path(self) -> Path:
        return Path(str(resources.files("hypercount") / "data" / self.filename))

    def load(self) -> Hypersurface:
        poly = read_poly_file(self.path())
        if self.projective:
            return Hypersurface.projective_from(poly, self.n)
        return Hypersurface.affine_from(poly, self.n)


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in [
    CatalogEntry("fermat6_p4", "fermat6_p4.poly", True, 4,
                 "Fermat sextic threefold; smooth away from characteristics 2 and 3",
                 expect_smooth=True, certifying_prime=5),
    CatalogEntry("plane_sextic_p5", "plane_sextic_p5.poly", True, 5,
                 "x0(x0^d+x5^d)+x1(x1^d+x4^d)+x2(x2^d+x3^d) at d = 6; smooth, contains a plane",
                 expect_smooth=True, plane=(0, 1, 2)),
    CatalogEntry("plane_degree6_p5", "plane_degree6_p5.poly", True, 5,
                 "same family with inner exponent 5, so the form itself has degree 6",
                 expect_smooth=True, plane=(0, 1, 2)),
    CatalogEntry("split_family_a4", "split_family_a4.poly", False, 4,
                 "f1(x1,x2) + x3 x4^5 + x3^5 x4 with a smooth plane sextic f1; smooth closure",
                 expect_smooth=True, split=True),
    CatalogEntry("circle", "circle.poly", False, 2, "x1^2+x2^2 = 25, twelve integral points"),
    CatalogEntry("cusp", "cusp.poly", True, 2, "cuspidal cubic, singular at (0:0:1)",
                 expect_smooth=False),
    CatalogEntry("conic", "conic.poly", True, 2, "smooth conic with rational points",
                 expect_smooth=True, certifying_prime=3),
    CatalogEntry("quartic_a4", "quartic_a4.poly", False, 4,
                 "affine quartic threefold used for auxiliary-polynomial runs",
                 expect_smooth=True, certifying_prime=3),
    CatalogEntry("quartic_p4", "quartic_p4.poly", True, 4,
                 "quartic whose identity chart has bad slices b = 1 and b = -1",
                 expect_smooth=True, certifying_prime=3),
]}


def load_instance(name: str) -> Hypersurface:
    if name not in CATALOG:
        raise KeyError(f"unknown instance {name!r}; known: {', '.join(CATALOG)}")
    return CATALOG[name].load()


def verify_entry(entry: CatalogEntry) -> list[tuple[str, bool, str]]:
    """Re-check the documented properties of a catalog instance."""
    H = entry.load()
    checks = []
    if entry.expect_smooth is not None:
        v = certify_smooth_over_Q(H.closure())
        ok = (v.status == SMOOTH) == entry.expect_smooth
        if ok and entry.certifying_prime is not None:
            ok = v.certifying_prime == entry.certifying_prime
        checks.append(("smoothness", ok, f"{v.status} (prime {v.certifying_prime})"))
    if entry.plane is not None:
        B = 2
        sub = count_on_coordinate_subspace(H, entry.plane, B)
        direct = count_projective(H, B, cap=None)
        on_plane = sum(1 for pt in direct.points if all(pt[i] == 0 for i in entry.plane))
        ok = sub.method == "subspace" and sub.count == on_plane
        checks.append(("plane containment", ok, f"subspace count {sub.count}, direct {on_plane} at B={B}"))
    if entry.split:
        shape = detect_split_shape(H.poly)
        ok = shape is not None and not shape.degenerate
        checks.append(("split shape", ok, str(shape.f0) if shape else "none"))
    return checks


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _count_payload(rep: CountReport) -> dict:
    out = {
        "schema": SCHEMA,
        "kind": "count",
        "space": rep.kind,
        "n": rep.n,
        "degree": rep.degree,
        "B": str(rep.B),
        "count": str(rep.count),
        "method": rep.method,
        "modulus": str(rep.modulus),
        "residue": [str(z) for z in rep.residue],
        "degenerate_fibers": rep.degenerate_fibers,
        "trivial_bound": str(rep.trivial_bound()),
        "wall_ms": round(rep.wall_ms, 3),
        "workers": rep.workers,
        "shards": [[str(a), str(b)] for a, b in rep.shards],
    }
    if rep.points:
        out["points"] = [[str(x) for x in p] for p in rep.points]
    return out


def to_payload(obj: Any) -> dict:
    """Schema-tagged plain dict for any report object."""
    if isinstance(obj, dict):
        return {"schema": SCHEMA, **obj} if "schema" not in obj else obj
    if isinstance(obj, CountReport):
        return _count_payload(obj)
    if isinstance(obj, FitResult):
        return {
            "schema": SCHEMA, "kind": "fit",
            "pairs": [[str(b), str(n)] for b, n in obj.pairs],
            "used": len(obj.used),
            "slope": obj.slope, "intercept": obj.intercept, "residual": obj.residual,
            "comparisons": obj.comparisons,
        }
    if isinstance(obj, SmoothnessVerdict):
        return {"schema": SCHEMA, "kind": "smoothness", **obj.as_dict()}
    if isinstance(obj, ExponentTable):
        return {"schema": SCHEMA, "kind": "bounds", **obj.as_dict()}
    if isinstance(obj, AuxCertificate):
        return {"schema": SCHEMA, "kind": "aux-certificate", **obj.as_dict()}
    if isinstance(obj, CoveringReport):
        return {"schema": SCHEMA, "kind": "covering", **obj.as_dict()}
    if isinstance(obj, PrimePlan):
        return {"schema": SCHEMA, "kind": "prime-plan", **obj.as_dict()}
    if isinstance(obj, SliceScan):
        return {"schema": SCHEMA, "kind": "slice-scan", **obj.as_dict()}
    if isinstance(obj, RecursionTrace):
        return {"schema": SCHEMA, "kind": "recursion", **obj.as_dict()}
    raise TypeError(f"cannot emit {type(obj).__name__}")


def _strip_volatile(payload):
    if isinstance(payload, dict):
        return {k: _strip_volatile(v) for k, v in payload.items() if k not in VOLATILE}
    if isinstance(payload, list):
        return [_strip_volatile(v) for v in payload]
    return payload


def _text(payload: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for k, v in payload.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_text(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}: [{len(v)} entries]")
            for item in v:
                lines.append(_text(item, indent + 1))
                lines.append(f"{pad}  --")
        else:
            lines.append(f"{pad}{k}: {v}")
    return "\n".join(lines)


def _csv(obj: Any, payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, FitResult):
        w.writerow(["B", "N"])
        for b, n in obj.pairs:
            w.writerow([b, n])
        buf.write(f"# slope={obj.slope:.12g}\n# intercept={obj.intercept:.12g}\n# residual={obj.residual:.6g}\n")
        for c in obj.comparisons:
            buf.write(f"# {c['verdict']} (exponent {c['exponent']:.6g}, margin {c['margin']:+.6g})\n")
        return buf.getvalue()
    if isinstance(obj, CountReport):
        w.writerow(["B", "N", "method"])
        w.writerow([obj.B, obj.count, obj.method])
        return buf.getvalue()
    flat = {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}
    w.writerow(list(flat))
    w.writerow(list(flat.values()))
    return buf.getvalue()


def render(obj: Any, fmt: str = "json", deterministic: bool = False) -> str:
    if fmt not in ("json", "csv", "text"):
        raise ValueError(f"unknown format {fmt!r}")
    payload = to_payload(obj)
    if deterministic:
        payload = _strip_volatile(payload)
    else:
        payload = {**payload, "version": __version__}
    if fmt == "json":
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        return _csv(obj, payload)
    return _text(payload) + "\n"


def emit(obj: Any, fmt: str = "json", path: str | Path | None = None, deterministic: bool = False) -> str:
    """Render a report; write it to ``path`` when given (OSError if unwritable)."""
    text = render(obj, fmt, deterministic)
    if path is not None:
        Path(path).write_text(text)
    return text
