"""Deterministic text reports for derived normal forms, with a parser that
reconstructs the series values bit-exactly (used by `verify`)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .analysis import expected_series, ssm_parametrisation, revert
from .render import render_series, parse_series
from .series import Series
from .systems import NormalForm, Policy, SystemSpec


def _new_names(spec: SystemSpec) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    taken = set(spec.slow_names) | set(spec.fast_names) | set(spec.param_names)
    def lift(name: str) -> str:
        up = name.upper()
        return up if up not in taken else name + "_new"
    return (tuple(lift(n) for n in spec.slow_names),
            tuple(lift(n) for n in spec.fast_names))


def emit_report(nf: NormalForm, include_analyses: bool = True) -> str:
    spec = nf.spec
    slow_new, fast_new = _new_names(spec)
    names_new = (slow_new, fast_new, spec.param_names)
    names_orig = (spec.slow_names, spec.fast_names, spec.param_names)
    caps = ", ".join(f"{p}<={c}" for p, c in zip(spec.param_names, spec.trunc.param_caps)
                     if c is not None) or "none"
    lines = [
        "normal-form report",
        f"system: {spec.label or 'unnamed'}",
        f"policy: {nf.policy.label()}",
        f"mu_min: {nf.policy.mu_min}",
        f"order: {spec.trunc.total}",
        f"param_caps: {caps}",
        f"grade_fast: {'on' if spec.trunc.count_fast else 'off'}",
        f"certified: {'yes' if nf.certified else f'NO (residual at grade {nf.residual_grade})'}",
    ]
    if nf.diagnostics:
        for d in sorted(set(nf.diagnostics)):
            lines.append(f"diagnostic: {d}")
    lines.append("transform:")
    for i, name in enumerate(spec.slow_names):
        lines.append(f"  {name} = {render_series(nf.transform_x()[i], names_new)}")
    for j, name in enumerate(spec.fast_names):
        lines.append(f"  {name} = {render_series(nf.transform_y()[j], names_new)}")
    lines.append("evolution:")
    for i, name in enumerate(slow_new):
        lines.append(f"  d{name}/dt = {render_series(nf.xdot()[i], names_new)}")
    for j, name in enumerate(fast_new):
        lines.append(f"  d{name}/dt = {render_series(nf.ydot()[j], names_new)}")
    if include_analyses:
        chart = ssm_parametrisation(nf)
        lines.append("ssm:")
        for i, name in enumerate(spec.slow_names):
            lines.append(f"  {name} = {render_series(chart.x_of_X[i], names_new)}")
        for j, name in enumerate(spec.fast_names):
            lines.append(f"  {name} = {render_series(chart.y_of_X[j], names_new)}")
        lines.append("expected_ssm:")
        for name, series in zip(spec.slow_names + spec.fast_names,
                                chart.x_of_X + chart.y_of_X):
            e = expected_series(series)
            tail = " (+ unevaluable terms)" if e.unevaluable else ""
            lines.append(f"  E[{name}] = {render_series(e.value, names_new)}{tail}")
            if e.unevaluable:
                rest = Series(series.dims, series.trunc, dict(e.unevaluable))
                lines.append(f"  # unevaluable in E[{name}]: "
                             f"E[{render_series(rest, names_new)}]")
        rv = revert(nf)
        lines.append("reversion:")
        for i, name in enumerate(slow_new):
            lines.append(f"  {name} = {render_series(rv.X_of_xy[i], names_orig)}")
        for j, name in enumerate(fast_new):
            lines.append(f"  {name} = {render_series(rv.Y_of_xy[j], names_orig)}")
    return "\n".join(lines) + "\n"


@dataclass
class ParsedReport:
    header: Dict[str, str]
    transform: Dict[str, Series]
    evolution: Dict[str, Series]
    sections: Dict[str, Dict[str, Series]]


def parse_report(text: str, spec: SystemSpec) -> ParsedReport:
    slow_new, fast_new = _new_names(spec)
    names_new = (slow_new, fast_new, spec.param_names)
    names_orig = (spec.slow_names, spec.fast_names, spec.param_names)
    header: Dict[str, str] = {}
    sections: Dict[str, Dict[str, Series]] = {}
    current: Optional[str] = None
    for raw in text.splitlines():
        if not raw.strip() or raw.strip() == "normal-form report" \
                or raw.lstrip().startswith("#"):
            continue
        if not raw.startswith("  "):
            key, _, val = raw.partition(":")
            if not val and raw.rstrip().endswith(":"):
                current = key.strip()
                sections[current] = {}
            else:
                header[key.strip()] = val.strip()
            if raw.rstrip().endswith(":") and not val.strip():
                current = key.strip()
                sections.setdefault(current, {})
            continue
        if current is None:
            raise ValueError(f"series line outside any section: {raw!r}")
        lhs, _, rhs = raw.strip().partition("=")
        rhs = rhs.split("(+ unevaluable")[0].strip()
        names = names_orig if current == "reversion" else names_new
        sections[current][lhs.strip()] = parse_series(
            rhs, spec.dims, spec.trunc, names)
    return ParsedReport(header, sections.get("transform", {}),
                        sections.get("evolution", {}), sections)


def rebuild_normal_form(rep: ParsedReport, spec: SystemSpec,
                        policy: Policy) -> NormalForm:
    """Reconstruct a NormalForm from a parsed report for re-certification."""
    slow_new, fast_new = _new_names(spec)
    dims, trunc = spec.dims, spec.trunc
    xi = [rep.transform[n] - Series.slow_var(dims, trunc, i)
          for i, n in enumerate(spec.slow_names)]
    eta = [rep.transform[n] - Series.fast_var(dims, trunc, j)
           for j, n in enumerate(spec.fast_names)]
    lin_x, lin_y = spec.linear_xdot(), spec.linear_ydot()
    F = [rep.evolution[f"d{n}/dt"] - lin_x[i] for i, n in enumerate(slow_new)]
    G = [rep.evolution[f"d{n}/dt"] - lin_y[j] for j, n in enumerate(fast_new)]
    return NormalForm(spec=spec, policy=policy, xi=xi, eta=eta, F=F, G=G)
