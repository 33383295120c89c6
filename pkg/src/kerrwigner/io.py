"""On-disk formats: polar field files, raster files, PPM heatmaps, manifests.

Field file::

    # polar n_r n_phi r_max tau alpha_re alpha_im xi n_thermal
    r phi value            (one line per node, ring-major, phi fastest)

Raster file::

    # cartesian res re_min re_max im_min im_max tau
    v v v ...              (one line per raster row, row 0 = im_min)

Numbers are written with 17 significant digits, so a write/read cycle is
bit-exact for doubles.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import TWO_OVER_PI, CartesianRaster, PolarGrid, SimulationConfig, WignerField
from .errors import HeaderMismatchError, InvalidManifestError

_FMT = "%.17g"


def _num(x: float) -> str:
    return _FMT % x


# ---------------------------------------------------------------- fields

def write_field(path, wfield: WignerField, alpha: complex = 0j, xi: float = 0.0,
                n_thermal: float = 0.0) -> None:
    g = wfield.grid
    alpha = complex(alpha)
    head = ["polar", str(g.n_r), str(g.n_phi), _num(g.r_max), _num(wfield.tau),
            _num(alpha.real), _num(alpha.imag), _num(xi), _num(n_thermal)]
    r, phi = g.mesh()
    table = np.column_stack([r.ravel(), phi.ravel(), wfield.values.ravel()])
    with open(path, "w") as fh:
        fh.write("# " + " ".join(head) + "\n")
        np.savetxt(fh, table, fmt=_FMT)


@dataclass(frozen=True)
class FieldHeader:
    grid: PolarGrid
    tau: float
    alpha: complex
    xi: float
    n_thermal: float


def _header(path) -> list[str]:
    with open(path) as fh:
        line = fh.readline()
    if not line.startswith("#"):
        raise HeaderMismatchError(f"{path}: missing '#' header line")
    return line[1:].split()


def read_field(path) -> tuple[WignerField, FieldHeader]:
    head = _header(path)
    if len(head) != 9 or head[0] != "polar":
        raise HeaderMismatchError(f"{path}: not a polar field file")
    n_r, n_phi = int(head[1]), int(head[2])
    r_max, tau, are, aim, xi, nth = (float(v) for v in head[3:])
    grid = PolarGrid(n_r, n_phi, r_max)
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape != (grid.size, 3):
        raise HeaderMismatchError(f"{path}: expected {grid.size} rows, found {data.shape[0]}")
    wfield = WignerField(grid, data[:, 2].reshape(grid.shape), tau)
    return wfield, FieldHeader(grid, tau, complex(are, aim), xi, nth)


# ---------------------------------------------------------------- rasters

def write_raster(path, raster: CartesianRaster) -> None:
    head = ["cartesian", str(raster.resolution), *map(_num, raster.re_range),
            *map(_num, raster.im_range), _num(raster.tau)]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(head) + "\n")
        np.savetxt(fh, raster.values, fmt=_FMT)


def read_raster(path) -> CartesianRaster:
    head = _header(path)
    if len(head) != 7 or head[0] != "cartesian":
        raise HeaderMismatchError(f"{path}: not a raster file")
    res = int(head[1])
    re0, re1, im0, im1, tau = (float(v) for v in head[2:])
    values = np.loadtxt(path, comments="#", ndmin=2)
    if values.shape != (res, res):
        raise HeaderMismatchError(f"{path}: expected {res}x{res} values, found {values.shape}")
    return CartesianRaster(values, (re0, re1), (im0, im1), tau)


def read_any(path):
    kind = _header(path)[:1]
    if kind == ["polar"]:
        return read_field(path)[0]
    if kind == ["cartesian"]:
        return read_raster(path)
    raise HeaderMismatchError(f"{path}: unknown file kind {kind}")


# ---------------------------------------------------------------- heatmap

def diverging_rgb(values: np.ndarray, limit: float = TWO_OVER_PI) -> np.ndarray:
    """Blue (negative) to white (zero) to red (positive), fixed scale [-limit, limit]."""
    t = np.clip(np.asarray(values) / limit, -1.0, 1.0)
    pos, neg = np.clip(t, 0, 1), np.clip(-t, 0, 1)
    rgb = np.empty(t.shape + (3,))
    rgb[..., 0] = 1.0 - neg * 0.85
    rgb[..., 1] = 1.0 - 0.85 * (pos + neg)
    rgb[..., 2] = 1.0 - pos * 0.85
    return np.round(rgb * 255).astype(np.uint8)


def write_ppm(path, raster: CartesianRaster) -> None:
    """Binary PPM (P6); the top image row is the largest Im value."""
    img = diverging_rgb(raster.values[::-1])
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    pixels = data[len(data) - 3 * w * h:]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3)


# ---------------------------------------------------------------- manifest

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Evaluate a small arithmetic expression that may use ``pi`` (e.g. ``pi/2``, ``0.2*pi``)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


METHODS = ("fp", "series-q", "series-deriv")


@dataclass(frozen=True)
class RunManifest:
    config: SimulationConfig
    method: str
    snapshot_taus: tuple[float, ...]
    out_dir: Path
    window: tuple[tuple[float, float], tuple[float, float]] | None = None
    resolution: int = 100
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidManifestError(f"method: must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.method != "fp" and (self.config.xi != 0 or self.config.n_thermal != 0):
            raise InvalidManifestError(
                f"method: {self.method} is lossless only; xi and thermal_n must be 0 "
                f"(got xi={self.config.xi}, thermal_n={self.config.n_thermal})"
            )
        if not self.snapshot_taus:
            raise InvalidManifestError("snapshots: at least one snapshot tau is required")
        if any(t < 0 for t in self.snapshot_taus):
            raise InvalidManifestError("snapshots: taus must be non-negative")
        if self.method == "fp":
            steps = [t / self.config.dtau for t in self.snapshot_taus]
            if any(abs(k - round(k)) > 1e-6 for k in steps):
                raise InvalidManifestError("snapshots: fp snapshot taus must be multiples of dtau")
        if self.resolution < 2:
            raise InvalidManifestError("resolution: must be at least 2")

    @property
    def tau_end(self) -> float:
        return max(self.snapshot_taus)


MANIFEST_KEYS = ("alpha_re", "alpha_im", "xi", "thermal_n", "dtau", "grid", "rmax", "method",
                 "snapshots", "out", "profile", "solver", "scheme", "closure", "window",
                 "resolution", "drift_tolerance")


def read_manifest_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidManifestError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in MANIFEST_KEYS:
            raise InvalidManifestError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_manifest(settings: dict[str, str]) -> RunManifest:
    """Turn merged key=value settings into a validated :class:`RunManifest`."""
    from .core import PROFILES, default_r_max

    def get(key, conv, default=None):
        if key not in settings or settings[key] in (None, ""):
            return default
        try:
            return conv(settings[key])
        except (ValueError, TypeError) as exc:
            raise InvalidManifestError(f"{key}: {exc}") from exc

    alpha = complex(get("alpha_re", parse_number, 0.0), get("alpha_im", parse_number, 0.0))
    profile = get("profile", str, "ci")
    if profile not in PROFILES:
        raise InvalidManifestError(f"profile: unknown profile {profile!r}")
    n_r, n_phi, dtau = PROFILES[profile]
    if "grid" in settings and settings["grid"]:
        try:
            n_r, n_phi = (int(v) for v in settings["grid"].lower().split("x"))
        except ValueError as exc:
            raise InvalidManifestError(f"grid: expected NRxNPHI, got {settings['grid']!r}") from exc
    dtau = get("dtau", parse_number, dtau)
    r_max = get("rmax", parse_number, default_r_max(alpha))
    snaps = get("snapshots", lambda s: tuple(parse_number(t) for t in s.split(",") if t.strip()), ())
    window = get("window", lambda s: tuple(parse_number(t) for t in s.split(",")), None)
    if window is not None:
        if len(window) != 4:
            raise InvalidManifestError("window: expected re_min,re_max,im_min,im_max")
        window = ((window[0], window[1]), (window[2], window[3]))
    try:
        config = SimulationConfig(
            alpha=alpha,
            xi=get("xi", parse_number, 0.0),
            n_thermal=get("thermal_n", parse_number, 0.0),
            dtau=dtau,
            grid=PolarGrid(n_r, n_phi, r_max),
            scheme=get("scheme", str, "crank-nicolson"),
            closure=get("closure", str, "reflect"),
            solver=get("solver", str, "band"),
            drift_tolerance=get("drift_tolerance", parse_number, 1e-2),
        )
    except ValueError as exc:
        raise InvalidManifestError(f"config: {exc}") from exc
    return RunManifest(
        config=config,
        method=get("method", str, "fp"),
        snapshot_taus=snaps,
        out_dir=Path(get("out", str, "kerrwigner-out")),
        window=window,
        resolution=get("resolution", int, 100),
        extra={"profile": profile},
    )
