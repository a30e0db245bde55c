"""Flat text problem files for the initial value solver.

Format: one ``section.key = value`` per line, ``#`` starts a comment, blank
lines ignored.  Numbers are floats, ``y0`` is a bracketed list.  Example::

    problem.alpha = 0.5          # order, > 0
    problem.rho = 1.0
    problem.y0 = [1.0]           # ceil(alpha) entries
    problem.rhs = linear
    problem.rhs.lambda = -1.0
    problem.h_star = 1.0
    problem.K = 2.0
    solver.n_nodes = 257
    solver.tol = 1e-10           # optional
    solver.max_iter = 200        # optional
    solver.lipschitz_L = 1.0     # optional

Unknown, duplicate, or missing required keys are errors naming the key.
"""

from __future__ import annotations

from .solver import IVProblem, SolverConfig, make_rhs, rhs_names

__all__ = ["ProblemFileError", "parse_problem", "load_problem"]

_REQUIRED = ("problem.alpha", "problem.rho", "problem.y0", "problem.rhs",
             "problem.h_star", "problem.K", "solver.n_nodes")
_OPTIONAL = ("solver.tol", "solver.max_iter", "solver.lipschitz_L")


class ProblemFileError(ValueError):
    """Malformed problem file; message names the offending line or key."""


def _fail(lineno: int | None, msg: str) -> ProblemFileError:
    where = f"line {lineno}: " if lineno is not None else ""
    return ProblemFileError(where + msg)


def _parse_float(key: str, raw: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise _fail(lineno, f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str, lineno: int) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise _fail(lineno, f"{key}: expected an integer, got {raw!r}") from None


def _parse_list(key: str, raw: str, lineno: int) -> tuple:
    if not (raw.startswith("[") and raw.endswith("]")):
        raise _fail(lineno, f"{key}: expected a bracketed list like [1.0], got {raw!r}")
    inner = raw[1:-1].strip()
    if not inner:
        raise _fail(lineno, f"{key}: list must not be empty")
    return tuple(_parse_float(key, part.strip(), lineno)
                 for part in inner.split(","))


def parse_problem(text: str) -> tuple[IVProblem, SolverConfig]:
    """Parse problem-file text into (IVProblem, SolverConfig)."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _fail(lineno, f"expected 'section.key = value', got {rawline.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise _fail(lineno, f"expected 'section.key = value', got {rawline.strip()!r}")
        if key in entries:
            raise _fail(lineno, f"duplicate key {key!r} (first set on line {entries[key][1]})")
        entries[key] = (value, lineno)

    rhs_params: dict[str, float] = {}
    for key in list(entries):
        if key.startswith("problem.rhs."):
            pname = key[len("problem.rhs."):]
            if not pname:
                raise _fail(entries[key][1], f"empty rhs parameter name in {key!r}")
            raw, lineno = entries.pop(key)
            rhs_params[pname] = _parse_float(key, raw, lineno)

    known = set(_REQUIRED) | set(_OPTIONAL)
    for key, (_, lineno) in entries.items():
        if key not in known:
            raise _fail(lineno, f"unknown key {key!r}")
    for key in _REQUIRED:
        if key not in entries:
            raise _fail(None, f"missing required key {key!r}")

    def floatval(key: str) -> float:
        raw, lineno = entries[key]
        return _parse_float(key, raw, lineno)

    rhs_name_raw, rhs_line = entries["problem.rhs"]
    if rhs_name_raw not in rhs_names():
        raise _fail(rhs_line, f"problem.rhs: unknown rhs {rhs_name_raw!r}; "
                              f"known: {', '.join(rhs_names())}")
    try:
        rhs = make_rhs(rhs_name_raw, rhs_params)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None

    y0_raw, y0_line = entries["problem.y0"]
    try:
        problem = IVProblem(
            alpha=floatval("problem.alpha"),
            rho=floatval("problem.rho"),
            y0=_parse_list("problem.y0", y0_raw, y0_line),
            rhs=rhs,
            h_star=floatval("problem.h_star"),
            K=floatval("problem.K"),
        )
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None

    kwargs: dict = {}
    n_raw, n_line = entries["solver.n_nodes"]
    kwargs["n_nodes"] = _parse_int("solver.n_nodes", n_raw, n_line)
    if "solver.tol" in entries:
        kwargs["tol"] = floatval("solver.tol")
    if "solver.max_iter" in entries:
        raw, lineno = entries["solver.max_iter"]
        kwargs["max_iter"] = _parse_int("solver.max_iter", raw, lineno)
    if "solver.lipschitz_L" in entries:
        kwargs["lipschitz_L"] = floatval("solver.lipschitz_L")
    try:
        config = SolverConfig(**kwargs)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None
    return problem, config


def load_problem(path: str) -> tuple[IVProblem, SolverConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_problem(text)
