"""Run configuration: YAML loading and validation with line-precise errors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .basis import BoxDomain
from .fields import FAMILIES, FieldSpace, canonical_family, check_dimension, check_sigma
from .lifting import BoundaryData, Envelope, FaceMode


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str = ""):
        self.line = line
        self.path = path
        where = f"line {line}: " if line else ""
        key = f"{path}: " if path else ""
        super().__init__(f"{where}{key}{message}")


@dataclass
class ModeEntry:
    component: int
    k: tuple[int, ...]
    amplitude: float
    envelope: Envelope = Envelope()


@dataclass
class RunConfig:
    dim: int = 2
    extents: tuple[float, ...] = (math.pi, math.pi)
    bc_family: str = "DirDir"
    sigma: float = 1.0
    zeta: float = 1.0
    mu: float = 1.0
    alpha: float = 1.2
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    cutoff: int = 8
    dt: float = 1e-3
    T: float = 1.0
    dealias: bool = True
    scheme: str = "cnab2"
    initial: list[ModeEntry] = field(default_factory=list)
    forcing: list[ModeEntry] = field(default_factory=list)
    manufactured: str | None = None
    boundary: list[FaceMode] = field(default_factory=list)
    tol: float = 1e-9
    kmax: int = 20
    smallness_radius: float | None = None
    decomposition: bool = True
    probe_samples: int = 12
    holder_samples: int = 200
    seed: int = 0
    verify_samples: int = 100
    conv_axis: str = "dt"
    conv_levels: list = field(default_factory=lambda: [4e-2, 2e-2, 1e-2, 5e-3])
    conv_kind: str = "modes"
    out_dir: str = "out"
    plots: bool = True
    sweep: list[dict] = field(default_factory=list)
    source: str = ""

    # --------------------------------------------------------------- builders
    def domain(self) -> BoxDomain:
        return BoxDomain(self.extents)

    def space(self, cutoff: int | None = None) -> FieldSpace:
        return FieldSpace(self.domain(), self.bc_family, cutoff or self.cutoff, self.zeta, self.mu)

    def operators(self, cutoff: int | None = None, dealias: bool | None = None):
        from .operators import OperatorSet
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return OperatorSet(self.space(cutoff), self.alpha, self.beta, self.gamma, self.delta,
                               dealias=self.dealias if dealias is None else dealias)

    def boundary_data(self) -> BoundaryData:
        return BoundaryData(list(self.boundary))

    def times(self) -> np.ndarray:
        from .fields import time_grid
        return time_grid(self.T, self.dt)

    def initial_coefficients(self, space: FieldSpace) -> np.ndarray:
        g = space.zeros()
        for m in self.initial:
            g[space.index(m.component, m.k)] += m.amplitude
        return g

    def forcing_samples(self, space: FieldSpace, times: np.ndarray) -> np.ndarray:
        F = np.zeros((len(times), space.n_dof))
        for m in self.forcing:
            F[:, space.index(m.component, m.k)] += m.amplitude * m.envelope(times)
        return F


# ------------------------------------------------------------------ parsing
_PI = {"pi": math.pi, "2*pi": 2 * math.pi, "2pi": 2 * math.pi, "pi/2": math.pi / 2}


class _Doc:
    """Plain data plus node marks for line lookup."""

    def __init__(self, text: str):
        try:
            self.node = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"malformed YAML ({getattr(exc, 'problem', exc)})",
                              mark.line + 1 if mark else None) from None
        if self.data is None:
            self.data = {}
        if not isinstance(self.data, dict):
            raise ConfigError("top level must be a mapping", 1)

    def line(self, path: tuple) -> int | None:
        node = self.node
        best = node.start_mark.line + 1 if node is not None else None
        for key in path:
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == key:
                        best = k.start_mark.line + 1
                        node = v
                        break
                else:
                    return best
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) \
                    and key < len(node.value):
                node = node.value[key]
                best = node.start_mark.line + 1
            else:
                return best
        return best


class _Reader:
    def __init__(self, doc: _Doc):
        self.doc = doc

    def err(self, path, msg):
        return ConfigError(msg, self.doc.line(path), ".".join(str(p) for p in path))

    def get(self, path, default=None):
        cur = self.doc.data
        for key in path:
            if isinstance(cur, dict) and key in cur:
                cur = cur[key]
            elif isinstance(cur, list) and isinstance(key, int) and key < len(cur):
                cur = cur[key]
            else:
                return default
        return cur

    def number(self, path, default=None, positive=False, nonneg=False):
        v = self.get(path, default)
        if v is None:
            return None
        if isinstance(v, str) and v.strip().lower() in _PI:
            v = _PI[v.strip().lower()]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.err(path, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise self.err(path, "must be finite")
        if positive and v <= 0:
            raise self.err(path, f"must be positive, got {v:g}")
        if nonneg and v < 0:
            raise self.err(path, f"must be non-negative, got {v:g}")
        return v

    def integer(self, path, default=None, minimum=None):
        v = self.get(path, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.err(path, f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise self.err(path, f"must be >= {minimum}, got {v}")
        return v

    def boolean(self, path, default):
        v = self.get(path, default)
        if not isinstance(v, bool):
            raise self.err(path, f"expected true/false, got {v!r}")
        return v

    def mapping(self, path):
        v = self.get(path, {})
        if v is None:
            return {}
        if not isinstance(v, dict):
            raise self.err(path, "expected a mapping")
        return v

    def sequence(self, path):
        v = self.get(path, [])
        if v is None:
            return []
        if not isinstance(v, list):
            raise self.err(path, "expected a list")
        return v

    def check_keys(self, path, allowed):
        for k in self.mapping(path) if path else self.doc.data:
            if k not in allowed:
                raise self.err(path + (k,), f"unknown key (allowed: {', '.join(sorted(allowed))})")

    def envelope(self, path) -> Envelope:
        raw = self.get(path)
        if raw is None:
            return Envelope()
        if not isinstance(raw, dict):
            raise self.err(path, "envelope must be a mapping")
        self.check_keys(path, {"kind", "rate", "omega", "phase", "coeffs"})
        kind = raw.get("kind", "const")
        if kind not in ("const", "exp", "sin", "ramp", "poly"):
            raise self.err(path + ("kind",), f"unknown envelope kind {kind!r}")
        coeffs = tuple(self.number(path + ("coeffs", i)) for i in range(len(raw.get("coeffs", []))))
        return Envelope(kind, self.number(path + ("rate",), 0.0), self.number(path + ("omega",), 0.0),
                        self.number(path + ("phase",), 0.0), coeffs)

    def kvec(self, path, length, minimum):
        v = self.get(path)
        if not isinstance(v, list) or len(v) != length:
            raise self.err(path, f"expected a list of {length} integers")
        return tuple(self.integer(path + (i,), minimum=minimum) for i in range(length))


_TOP = {"domain", "bc_family", "sigma", "coefficients", "discretization", "initial", "forcing",
        "boundary", "newton", "probes", "verify", "convergence", "output", "sweep"}


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate a YAML run configuration."""
    doc = _Doc(text)
    r = _Reader(doc)
    r.check_keys((), _TOP)
    c = RunConfig(source=source)

    r.check_keys(("domain",), {"dim", "extents"})
    c.dim = r.integer(("domain", "dim"), 2, minimum=1)
    if c.dim not in (2, 3):
        raise r.err(("domain", "dim"), f"dimension must be 2 or 3, got {c.dim}")
    ext = r.get(("domain", "extents"))
    if ext is None:
        c.extents = (math.pi,) * c.dim
    else:
        if not isinstance(ext, list) or len(ext) != c.dim:
            raise r.err(("domain", "extents"), f"expected {c.dim} extents")
        c.extents = tuple(r.number(("domain", "extents", i), positive=True) for i in range(c.dim))

    fam = r.get(("bc_family",), "DirDir")
    try:
        c.bc_family = canonical_family(str(fam))
        check_dimension(c.bc_family, c.dim)
    except ValueError as exc:
        raise r.err(("bc_family",), str(exc)) from None
    c.sigma = r.number(("sigma",), 1.0)
    try:
        check_sigma(c.bc_family, c.sigma)
    except ValueError as exc:
        raise r.err(("sigma",), str(exc)) from None

    co = ("coefficients",)
    r.check_keys(co, {"zeta", "mu", "alpha", "lambda", "beta", "gamma", "delta"})
    c.zeta = r.number(co + ("zeta",), 1.0, positive=True)
    c.mu = r.number(co + ("mu",), 1.0, positive=True)
    akey = "lambda" if "lambda" in r.mapping(co) else "alpha"
    c.alpha = r.number(co + (akey,), 1.2)
    for name in ("beta", "gamma", "delta"):
        setattr(c, name, r.number(co + (name,), 1.0))
    for name, key in (("alpha", akey), ("beta", "beta"), ("gamma", "gamma"), ("delta", "delta")):
        if getattr(c, name) == 0:
            raise r.err(co + (key,), "nonlinear coefficients must be nonzero")
    if c.alpha == 1.0:
        warnings.warn(f"{source}: line {doc.line(co + (akey,))}: alpha equals 1; "
                      "the model assumes lambda != 1", stacklevel=2)

    di = ("discretization",)
    r.check_keys(di, {"cutoff", "dt", "T", "dealias", "scheme"})
    c.cutoff = r.integer(di + ("cutoff",), 8, minimum=1)
    c.dt = r.number(di + ("dt",), 1e-3, positive=True)
    c.T = r.number(di + ("T",), 1.0, positive=True)
    n = c.T / c.dt
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise r.err(di + ("dt",), f"T/dt = {n:.6g} is not an integer")
    c.dealias = r.boolean(di + ("dealias",), True)
    c.scheme = r.get(di + ("scheme",), "cnab2")
    if c.scheme not in ("cnab2", "euler"):
        raise r.err(di + ("scheme",), f"unknown scheme {c.scheme!r}")

    pk, vk = FAMILIES[c.bc_family]
    space = c.space()

    def modes(path, with_env):
        out = []
        for i, _ in enumerate(r.sequence(path)):
            p = path + (i,)
            r.check_keys(p, {"component", "k", "amplitude", "envelope"})
            comp = r.integer(p + ("component",), minimum=0)
            if comp is None or comp > c.dim:
                raise r.err(p + ("component",), f"component must be in 0..{c.dim}")
            k = r.kvec(p + ("k",), c.dim, 0)
            try:
                space.index(comp, k)
            except (KeyError, ValueError, IndexError):
                raise r.err(p + ("k",), f"mode {list(k)} is not in the basis of component "
                                        f"{comp} at cutoff {c.cutoff}") from None
            amp = r.number(p + ("amplitude",), 1.0)
            env = r.envelope(p + ("envelope",)) if with_env else Envelope()
            out.append(ModeEntry(comp, k, amp, env))
        return out

    c.initial = modes(("initial",), False)
    fo = r.get(("forcing",))
    if isinstance(fo, dict):
        r.check_keys(("forcing",), {"modes", "manufactured"})
        c.manufactured = r.get(("forcing", "manufactured"))
        if c.manufactured not in (None, "modes", "analytic"):
            raise r.err(("forcing", "manufactured"), "expected 'modes' or 'analytic'")
        c.forcing = modes(("forcing", "modes"), True)
    elif fo is not None:
        c.forcing = modes(("forcing",), True)

    bnd = []
    for i, _ in enumerate(r.sequence(("boundary",))):
        p = ("boundary", i)
        r.check_keys(p, {"component", "axis", "side", "k", "amplitude", "envelope"})
        comp = r.integer(p + ("component",), minimum=0)
        if comp is None or comp > c.dim:
            raise r.err(p + ("component",), f"component must be in 0..{c.dim}")
        axis = r.integer(p + ("axis",), minimum=0)
        if axis is None or axis >= c.dim:
            raise r.err(p + ("axis",), f"axis must be in 0..{c.dim - 1}")
        side = r.integer(p + ("side",), minimum=0)
        if side not in (0, 1):
            raise r.err(p + ("side",), "side must be 0 or 1")
        kind = pk if comp == 0 else vk
        k = r.kvec(p + ("k",), c.dim - 1, 1 if kind == "dirichlet" else 0)
        fm = FaceMode(comp, axis, side, k, r.number(p + ("amplitude",), 1.0),
                      r.envelope(p + ("envelope",)))
        try:
            BoundaryData([fm]).validate(space)
        except ValueError as exc:
            raise r.err(p, str(exc)) from None
        bnd.append(fm)
    c.boundary = bnd

    ne = ("newton",)
    r.check_keys(ne, {"tol", "kmax", "smallness_radius", "decomposition"})
    c.tol = r.number(ne + ("tol",), 1e-9, positive=True)
    c.kmax = r.integer(ne + ("kmax",), 20, minimum=1)
    c.smallness_radius = r.number(ne + ("smallness_radius",), None, positive=True)
    c.decomposition = r.boolean(ne + ("decomposition",), True)

    pr = ("probes",)
    r.check_keys(pr, {"samples", "holder_samples", "seed"})
    c.probe_samples = r.integer(pr + ("samples",), 12, minimum=1)
    c.holder_samples = r.integer(pr + ("holder_samples",), 200, minimum=1)
    c.seed = r.integer(pr + ("seed",), 0, minimum=0)

    r.check_keys(("verify",), {"samples"})
    c.verify_samples = r.integer(("verify", "samples"), 100, minimum=1)

    cv = ("convergence",)
    r.check_keys(cv, {"axis", "levels", "kind"})
    c.conv_axis = r.get(cv + ("axis",), "dt")
    if c.conv_axis not in ("dt", "cutoff"):
        raise r.err(cv + ("axis",), "axis must be 'dt' or 'cutoff'")
    lv = r.get(cv + ("levels",))
    if lv is not None:
        if not isinstance(lv, list) or len(lv) < 3:
            raise r.err(cv + ("levels",), "a convergence study needs at least 3 levels")
        if c.conv_axis == "dt":
            c.conv_levels = [r.number(cv + ("levels", i), positive=True) for i in range(len(lv))]
        else:
            c.conv_levels = [r.integer(cv + ("levels", i), minimum=1) for i in range(len(lv))]
    elif c.conv_axis == "cutoff":
        c.conv_levels = [4, 6, 8, 10]
    c.conv_kind = r.get(cv + ("kind",), "modes")
    if c.conv_kind not in ("modes", "analytic"):
        raise r.err(cv + ("kind",), "kind must be 'modes' or 'analytic'")

    r.check_keys(("output",), {"dir", "plots"})
    c.out_dir = str(r.get(("output", "dir"), "out"))
    c.plots = r.boolean(("output", "plots"), True)

    sw = r.sequence(("sweep",))
    for i, item in enumerate(sw):
        if not isinstance(item, dict):
            raise r.err(("sweep", i), "sweep entries must be mappings of overrides")
    c.sweep = sw
    return c


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _merge(base: Any, over: Any) -> Any:
    if isinstance(base, dict) and isinstance(over, dict):
        out = dict(base)
        for k, v in over.items():
            out[k] = _merge(base.get(k), v)
        return out
    return over


def sweep_configs(path: str | Path) -> list[tuple[str, str]]:
    """Expand ``sweep`` overrides into ``(name, yaml_text)`` pairs."""
    text = Path(path).read_text()
    base = yaml.safe_load(text) or {}
    items = base.pop("sweep", None) or []
    out = []
    for i, over in enumerate(items):
        over = dict(over)
        name = str(over.pop("name", f"run{i:03d}"))
        out.append((name, yaml.safe_dump(_merge(base, over), sort_keys=True)))
    return out
