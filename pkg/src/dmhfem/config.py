"""Plain-text run configuration.

One ``key = value`` assignment per line; ``#`` starts a comment. Keys::

    n = 8                        mesh subdivisions per axis (even)
    n_list = 4, 8, 16            meshes for ``converge``
    omega1.mu / .r / .g          scalar coefficients of the lower subdomain
    omega1.v = 0, 0, 1           advection field, three components
    omega2.*                     same for the upper subdomain
    omega.*                      sets both subdomains at once
    kappa, sigma                 interface data
    bc.<side> = <kind> <args>    side in bottom, top, x0, x1, y0, y1;
                                 dirichlet <u> | neumann <J.n> | robin <alpha>, <beta>
    stabilization = none|sg|upwind
    peclet = edge|diameter
    analytic = auto|none|nonactive|active
    sweep.cases = 0.5:1; 0.0125:0.625      (mu:v_z pairs)
    sweep.target = both|omega2
    sweep.modes = none, sg, upwind
    trace_constant = 1.0

Scalar values are arithmetic expressions in ``x, y, z`` with ``pi, e`` and
the functions ``sin cos tan exp log sqrt tanh abs``; expressions that do not
mention a coordinate are folded to constants.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .problem import (
    SIDES,
    Coefficients,
    Dirichlet,
    Neumann,
    PecletMode,
    ProblemError,
    ProblemSpec,
    Robin,
    Stabilization,
    default_bcs,
)


class ConfigError(ValueError):
    pass


_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_COORDS = ("x", "y", "z")
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNOPS = (ast.UAdd, ast.USub)


def _check(node: ast.AST, src: str) -> set:
    """Validate the tree; return the coordinate names it uses."""
    used = set()
    for sub in ast.walk(node):
        if isinstance(sub, (ast.Expression, ast.Load)):
            continue
        if isinstance(sub, ast.BinOp) and isinstance(sub.op, _BINOPS):
            continue
        if isinstance(sub, ast.UnaryOp) and isinstance(sub.op, _UNOPS):
            continue
        if isinstance(sub, _BINOPS + _UNOPS):
            continue
        if isinstance(sub, ast.Constant) and type(sub.value) in (int, float):
            continue
        if isinstance(sub, ast.Name):
            if sub.id in _COORDS:
                used.add(sub.id)
                continue
            if sub.id in _CONSTS or sub.id in _FUNCS:
                continue
            raise ConfigError(f"unknown name {sub.id!r} in expression {src!r}")
        if isinstance(sub, ast.Call):
            if isinstance(sub.func, ast.Name) and sub.func.id in _FUNCS and not sub.keywords:
                continue
            raise ConfigError(f"unsupported call in expression {src!r}")
        raise ConfigError(f"unsupported syntax in expression {src!r}")
    return used


@dataclass(frozen=True)
class Expr:
    """Scalar expression of position; called with (N, 3) points."""

    source: str

    def __post_init__(self):
        tree = _parse(self.source)
        object.__setattr__(self, "_code", compile(tree, "<config>", "eval"))

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = dict(_FUNCS, **_CONSTS)
        env.update(x=points[:, 0], y=points[:, 1], z=points[:, 2])
        out = eval(self._code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[:1])

    def __str__(self):
        return self.source


@dataclass(frozen=True)
class VectorExpr:
    """Three scalar components, constants or expressions."""

    components: tuple

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [
            c(points) if callable(c) else np.full(points.shape[0], float(c))
            for c in self.components
        ]
        return np.stack(cols, axis=1)

    def __str__(self):
        return ", ".join(_fmt(c) for c in self.components)


def _parse(src: str) -> ast.Expression:
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}") from exc
    return tree


def scalar(src: str):
    """Parse a scalar expression: a float if constant, else an ``Expr``."""
    tree = _parse(src)
    if _check(tree, src):
        return Expr(src.strip())
    code = compile(tree, "<config>", "eval")
    try:
        with np.errstate(all="raise"):
            val = float(eval(code, {"__builtins__": {}}, dict(_FUNCS, **_CONSTS)))
    except (ArithmeticError, FloatingPointError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot evaluate {src!r}: {exc}") from exc
    if not math.isfinite(val):
        raise ConfigError(f"expression {src!r} is not finite")
    return val


def vector(src: str):
    parts = [p for p in src.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"vector needs three comma-separated components, got {src!r}")
    comps = tuple(scalar(p) for p in parts)
    if any(callable(c) for c in comps):
        return VectorExpr(comps)
    return comps


def _fmt(value) -> str:
    if isinstance(value, (Expr, VectorExpr)):
        return str(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return repr(float(value))


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec = field(default_factory=ProblemSpec)
    n: int = 8
    n_list: tuple = (4, 8, 16)
    analytic: str = "auto"
    sweep_cases: tuple = ()
    sweep_target: str = "both"
    sweep_modes: tuple = tuple(Stabilization)
    trace_constant: float = 1.0


ANALYTIC_MODES = ("auto", "none", "nonactive", "active")
SWEEP_TARGETS = ("both", "omega2")
_COEF_KEYS = ("mu", "r", "g", "v")


def _even_n(val: str, key: str) -> int:
    try:
        n = int(val)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {val!r}") from exc
    if n < 2 or n % 2:
        raise ConfigError(f"{key}: n must be an even integer >= 2, got {n}")
    return n


def _bc(val: str, key: str):
    kind, _, rest = val.strip().partition(" ")
    kind = kind.lower()
    args = [a for a in rest.split(",")] if rest.strip() else []
    nargs = {"dirichlet": 1, "neumann": 1, "robin": 2}
    if kind not in nargs:
        raise ConfigError(f"{key}: unknown boundary condition {kind!r}")
    if len(args) != nargs[kind]:
        raise ConfigError(f"{key}: {kind} takes {nargs[kind]} value(s)")
    vals = [scalar(a) for a in args]
    if kind == "dirichlet":
        return Dirichlet(vals[0])
    if kind == "neumann":
        return Neumann(vals[0])
    return Robin(vals[0], vals[1])


def parse(text: str) -> RunConfig:
    coefs = {1: {}, 2: {}}
    bcs = default_bcs()
    top = {}
    run = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        where = f"line {lineno}: {key}"
        head, _, tail = key.partition(".")
        if head in ("omega", "omega1", "omega2") and tail in _COEF_KEYS:
            value = vector(val) if tail == "v" else scalar(val)
            labels = (1, 2) if head == "omega" else (int(head[-1]),)
            for lab in labels:
                coefs[lab][tail] = value
        elif head == "bc" and tail in SIDES:
            bcs[tail] = _bc(val, where)
        elif key in ("kappa", "sigma"):
            top[key] = scalar(val)
        elif key == "stabilization":
            try:
                top[key] = Stabilization(val.lower())
            except ValueError as exc:
                raise ConfigError(f"{where}: expected none, sg or upwind") from exc
        elif key == "peclet":
            try:
                top[key] = PecletMode(val.lower())
            except ValueError as exc:
                raise ConfigError(f"{where}: expected edge or diameter") from exc
        elif key == "n":
            run["n"] = _even_n(val, where)
        elif key == "n_list":
            run["n_list"] = tuple(_even_n(v, where) for v in val.split(","))
        elif key == "analytic":
            if val not in ANALYTIC_MODES:
                raise ConfigError(f"{where}: expected one of {ANALYTIC_MODES}")
            run["analytic"] = val
        elif key == "sweep.cases":
            run["sweep_cases"] = tuple(_case(c, where) for c in val.split(";") if c.strip())
        elif key == "sweep.target":
            if val not in SWEEP_TARGETS:
                raise ConfigError(f"{where}: expected one of {SWEEP_TARGETS}")
            run["sweep_target"] = val
        elif key == "sweep.modes":
            try:
                run["sweep_modes"] = tuple(Stabilization(m.strip()) for m in val.split(","))
            except ValueError as exc:
                raise ConfigError(f"{where}: modes are none, sg, upwind") from exc
        elif key == "trace_constant":
            c = scalar(val)
            if callable(c) or c <= 0:
                raise ConfigError(f"{where}: must be a positive constant")
            run["trace_constant"] = c
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        spec = ProblemSpec(
            omega1=Coefficients(**coefs[1]),
            omega2=Coefficients(**coefs[2]),
            bcs=bcs,
            **top,
        )
    except ProblemError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(spec=spec, **run)


def _case(text: str, where: str) -> tuple:
    mu, sep, vz = text.partition(":")
    if not sep:
        raise ConfigError(f"{where}: sweep case must be 'mu:v_z', got {text!r}")
    mu, vz = scalar(mu), scalar(vz)
    if callable(mu) or callable(vz) or mu <= 0:
        raise ConfigError(f"{where}: sweep case needs constants with mu > 0")
    return (mu, vz)


def _bc_text(bc) -> str:
    if isinstance(bc, Dirichlet):
        return f"dirichlet {_fmt(bc.value)}"
    if isinstance(bc, Neumann):
        return f"neumann {_fmt(bc.flux)}"
    return f"robin {_fmt(bc.alpha)}, {_fmt(bc.beta)}"


def serialize(cfg: RunConfig) -> str:
    s = cfg.spec
    lines = [f"n = {cfg.n}", "n_list = " + ", ".join(map(str, cfg.n_list))]
    for lab, c in ((1, s.omega1), (2, s.omega2)):
        for k in _COEF_KEYS:
            lines.append(f"omega{lab}.{k} = {_fmt(getattr(c, k))}")
    lines.append(f"kappa = {_fmt(s.kappa)}")
    lines.append(f"sigma = {_fmt(s.sigma)}")
    for side in SIDES:
        lines.append(f"bc.{side} = {_bc_text(s.bcs[side])}")
    lines.append(f"stabilization = {s.stabilization.value}")
    lines.append(f"peclet = {s.peclet.value}")
    lines.append(f"analytic = {cfg.analytic}")
    if cfg.sweep_cases:
        cases = "; ".join(f"{_fmt(mu)}:{_fmt(vz)}" for mu, vz in cfg.sweep_cases)
        lines.append(f"sweep.cases = {cases}")
    lines.append(f"sweep.target = {cfg.sweep_target}")
    lines.append("sweep.modes = " + ", ".join(m.value for m in cfg.sweep_modes))
    lines.append(f"trace_constant = {_fmt(cfg.trace_constant)}")
    return "\n".join(lines) + "\n"


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)


def with_case(spec: ProblemSpec, mu: float, vz: float, target: str) -> ProblemSpec:
    """Spec with (mu, v = (0, 0, v_z)) set on the targeted subdomains."""
    o2 = replace(spec.omega2, mu=mu, v=(0.0, 0.0, vz))
    o1 = spec.omega1 if target == "omega2" else replace(spec.omega1, mu=mu, v=(0.0, 0.0, vz))
    return replace(spec, omega1=o1, omega2=o2)
