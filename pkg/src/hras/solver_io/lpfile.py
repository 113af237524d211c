"""CPLEX LP text emission and the ``name value`` solution-file format."""

from __future__ import annotations

import math

from .model import BINARY, EQ, GE, LE, NAME_RE, LinearModel, ModelError

LINE_WIDTH = 255


class EmissionError(ModelError):
    pass


def _num(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    s = "%.17g" % v
    return "0" if s == "-0" else s


def _terms(pairs, names) -> list[str]:
    out = []
    for v, c in pairs:
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c))} {names[v]}")
    if out and out[0].startswith("+ "):
        out[0] = out[0][2:]
    return out


def _wrap(head: str, tokens: list[str]) -> list[str]:
    lines, cur = [], head
    for tok in tokens:
        if len(cur) + 1 + len(tok) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def emit_lp_file(model: LinearModel) -> str:
    """Render ``model`` in CPLEX LP format; output depends only on insertion order."""
    names = model.var_names()
    for n in names:
        if not NAME_RE.fullmatch(n):
            raise EmissionError(f"invalid variable name {n!r}")
    lines = [f"\\ {model.name}", "Minimize"]
    obj_pairs = [(v, c) for v, c in sorted(model.objective.terms.items()) if c != 0.0]
    obj_tokens = _terms(obj_pairs, names)
    const = model.objective.constant
    if const != 0.0 or not obj_tokens:
        obj_tokens.append(("- " if const < 0 else "+ ") + _num(abs(const)))
        if len(obj_tokens) == 1 and const >= 0:
            obj_tokens[0] = obj_tokens[0][2:]
    lines += _wrap(" obj:", obj_tokens)
    lines.append("Subject To")
    sense_tok = {LE: "<=", GE: ">=", EQ: "="}
    for con in model.constraints():
        if not NAME_RE.fullmatch(con.name):
            raise EmissionError(f"invalid constraint name {con.name!r}")
        toks = _terms(zip(con.vars, con.coefs), names)
        if not toks:
            toks = ["0 " + names[0]] if names else ["0"]
        toks += [sense_tok[con.sense], _num(con.rhs)]
        lines += _wrap(f" {con.name}:", toks)
    lines.append("Bounds")
    binaries = []
    for var in model.variables():
        if var.kind == BINARY:
            binaries.append(var.name)
            if var.lb == var.ub:
                lines.append(f" {var.name} = {_num(var.lb)}")
            continue
        if var.lb == var.ub:
            lines.append(f" {var.name} = {_num(var.lb)}")
        elif var.lb == -math.inf and var.ub == math.inf:
            lines.append(f" {var.name} free")
        else:
            lines.append(f" {_num(var.lb)} <= {var.name} <= {_num(var.ub)}")
    if binaries:
        lines.append("Binaries")
        lines += _wrap("", binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(model: LinearModel, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(emit_lp_file(model))


def write_solution(path, values: dict, header: dict | None = None) -> None:
    """Write ``# key value`` header lines then one ``name value`` line per variable."""
    with open(path, "w") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k} {v}\n")
        for name, val in values.items():
            fh.write(f"{name} {_num(val)}\n")


def read_solution(path) -> tuple[dict, dict]:
    """Parse a solution file; returns ``(header, values)``."""
    header, values = {}, {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split(None, 1)
                if parts:
                    header[parts[0]] = parts[1] if len(parts) > 1 else ""
                continue
            name, val = line.split()
            values[name] = float(val)
    return header, values
