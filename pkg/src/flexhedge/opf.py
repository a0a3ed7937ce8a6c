"""Hourly DC optimal power flow with optional flexibility at capped buses.

The network is encoded through one angle variable per bus: line flow is the
angle difference divided by reactance, every bus gets a balance equality (with
the flexibility column added only at price-capped buses when enabled), the
slack angle is pinned by an explicit reference row, and each bounded line
contributes two one-sided limit rows so congestion shadow prices stay
readable per direction.

An hour whose firm load cannot be served under the line limits is infeasible
and is reported as such; the toolkit never sheds firm load, because a shedding
variable would change the prices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .economic_dispatch import price_paid_by_load
from .lp import INF, LinearProgram, dual_of, solve
from .model import (
    HourlyMarketData,
    Network,
    PriceCap,
    validate_market_data,
    validate_network,
    validate_price_cap,
)


class HourInfeasibleError(RuntimeError):
    """Raised when an hour's load bounds are unreachable under the line limits."""

    def __init__(self, hour: int, detail: str = ""):
        self.hour = hour
        msg = f"hour {hour} is infeasible"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class OpfHourInput:
    net: Network
    data: HourlyMarketData
    caps: tuple[PriceCap, ...] = ()
    flexibility_enabled: bool = False

    def validate(self) -> list[str]:
        problems = validate_network(self.net)
        problems += validate_market_data(self.net, self.data)
        for cap in self.caps:
            problems += validate_price_cap(self.net, cap)
        if self.caps and not self.flexibility_enabled:
            problems.append("price caps listed while flexibility is disabled")
        seen = set()
        for cap in self.caps:
            if cap.bus in seen:
                problems.append(f"more than one price cap at bus {cap.bus}")
            seen.add(cap.bus)
        return problems


@dataclass(frozen=True)
class DispatchResult:
    """One solved hour: dispatch, angles, prices, flows and congestion duals."""
    hour: int
    p_g_mw: dict[int, float]
    p_l_mw: dict[int, float]
    theta_rad: dict[int, float]
    lmp_eur_mwh: dict[int, float]
    flow_mw: dict[tuple[int, int], float]
    congestion_dual_eur_mwh: dict[tuple[int, int], float]
    p_flexreq_mw: dict[int, float]
    objective_eur: float
    degenerate: bool = False


def _column(prefix: str, bus: int) -> str:
    return f"{prefix}_{bus}"


def build_opf(inp: OpfHourInput) -> LinearProgram:
    """Assemble the hour's LP: balance rows, angle reference, line-limit pairs."""
    problems = inp.validate()
    if problems:
        raise ValueError("; ".join(problems))

    net, data = inp.net, inp.data
    prog = LinearProgram("maximize", name=f"opf_h{data.hour}")
    constant = 0.0

    for bus in net.buses:
        prog.add_column(_column("theta", bus.id), -INF, INF)

    for offer in data.offers:
        prog.add_column(_column("pg", offer.bus), 0.0, offer.capacity_mw,
                        objective=-offer.marginal_cost)
        constant -= offer.constant_cost
    for util in data.utilities:
        prog.add_column(_column("pl", util.bus), util.p_min_mw, util.p_max_mw,
                        objective=util.marginal_utility)
        constant += util.constant_utility
    if inp.flexibility_enabled:
        for cap in inp.caps:
            prog.add_column(_column("pflex", cap.bus), 0.0, INF,
                            objective=-cap.cap_for_hour(data.hour))

    susceptance = {}
    for line in net.lines:
        susceptance[line.key] = 1.0 / line.reactance_pu

    for bus in net.buses:
        coeffs: dict[str, float] = {}
        if data.offer_at(bus.id) is not None:
            coeffs[_column("pg", bus.id)] = 1.0
        if data.utility_at(bus.id) is not None:
            coeffs[_column("pl", bus.id)] = -1.0
        if inp.flexibility_enabled and any(c.bus == bus.id for c in inp.caps):
            coeffs[_column("pflex", bus.id)] = 1.0
        for line in net.lines:
            if bus.id == line.from_bus:
                other = line.to_bus
            elif bus.id == line.to_bus:
                other = line.from_bus
            else:
                continue
            b = susceptance[line.key]
            theta_i = _column("theta", bus.id)
            theta_j = _column("theta", other)
            coeffs[theta_i] = coeffs.get(theta_i, 0.0) - b
            coeffs[theta_j] = coeffs.get(theta_j, 0.0) + b
        prog.add_row(f"balance_{bus.id}", coeffs, "=", 0.0)

    prog.add_row("angle_ref", {_column("theta", net.slack_bus()): 1.0}, "=", 0.0)

    for line in net.lines:
        if line.flow_limit_mw == INF:
            continue
        b = susceptance[line.key]
        coeffs = {_column("theta", line.from_bus): b,
                  _column("theta", line.to_bus): -b}
        prog.add_row(f"flow_hi_{line.from_bus}_{line.to_bus}", coeffs, "<=",
                     line.flow_limit_mw)
        prog.add_row(f"flow_lo_{line.from_bus}_{line.to_bus}", coeffs, ">=",
                     -line.flow_limit_mw)

    prog.constant = constant
    return prog


def solve_opf_hour(inp: OpfHourInput) -> DispatchResult:
    prog = build_opf(inp)
    sol = solve(prog)
    if sol.status == "infeasible":
        raise HourInfeasibleError(inp.data.hour,
                                  "load bounds unreachable under line limits")
    if sol.status != "optimal":
        raise ValueError(f"hour {inp.data.hour}: solver returned {sol.status}")

    net, data = inp.net, inp.data
    theta = {b.id: sol.primal[_column("theta", b.id)] for b in net.buses}
    p_g = {o.bus: sol.primal[_column("pg", o.bus)] for o in data.offers}
    p_l = {u.bus: sol.primal[_column("pl", u.bus)] for u in data.utilities}
    lmp = {b.id: price_paid_by_load(sol, f"balance_{b.id}") for b in net.buses}

    flows = {}
    congestion = {}
    for line in net.lines:
        flow = (theta[line.from_bus] - theta[line.to_bus]) / line.reactance_pu
        flows[line.key] = flow
        if line.flow_limit_mw == INF:
            congestion[line.key] = 0.0
        else:
            mu_hi = dual_of(sol, f"flow_hi_{line.from_bus}_{line.to_bus}")
            mu_lo = dual_of(sol, f"flow_lo_{line.from_bus}_{line.to_bus}")
            congestion[line.key] = mu_hi - mu_lo

    flex = {}
    if inp.flexibility_enabled:
        flex = {c.bus: sol.primal[_column("pflex", c.bus)] for c in inp.caps}

    return DispatchResult(
        hour=data.hour,
        p_g_mw=p_g,
        p_l_mw=p_l,
        theta_rad=theta,
        lmp_eur_mwh=lmp,
        flow_mw=flows,
        congestion_dual_eur_mwh=congestion,
        p_flexreq_mw=flex,
        objective_eur=sol.objective_value,
        degenerate=sol.degenerate,
    )


def solve_opf_series(net: Network, series: list[HourlyMarketData],
                     caps: tuple[PriceCap, ...] = (),
                     flexibility_enabled: bool = False,
                     ) -> list[DispatchResult | None]:
    """Solve each hour independently; infeasible hours yield ``None``.

    Hours share no constraints, so results are identical whatever the
    evaluation order; the returned list is keyed by position in ``series``.
    """
    results: list[DispatchResult | None] = []
    for data in series:
        inp = OpfHourInput(net=net, data=data, caps=tuple(caps),
                           flexibility_enabled=flexibility_enabled)
        try:
            results.append(solve_opf_hour(inp))
        except HourInfeasibleError:
            results.append(None)
    return results


DISPATCH_CSV_COLUMNS = [
    "hour", "kind", "bus", "line_from", "line_to",
    "lmp_eur_mwh", "p_g_mw", "p_l_mw", "p_flexreq_mw",
    "flow_mw", "congestion_dual_eur_mwh",
]


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_dispatch_csv(results: list[DispatchResult | None], fobj) -> None:
    """One row per (hour, bus) then one per (hour, line); skips infeasible hours."""
    writer = csv.writer(fobj, lineterminator="\n")
    writer.writerow(DISPATCH_CSV_COLUMNS)
    for res in results:
        if res is None:
            continue
        for bus in sorted(res.lmp_eur_mwh):
            writer.writerow([
                res.hour, "bus", bus, "", "",
                _fmt(res.lmp_eur_mwh[bus]),
                _fmt(res.p_g_mw.get(bus, 0.0)),
                _fmt(res.p_l_mw.get(bus, 0.0)),
                _fmt(res.p_flexreq_mw.get(bus, 0.0)),
                "", "",
            ])
        for key in res.flow_mw:
            writer.writerow([
                res.hour, "line", "", key[0], key[1],
                "", "", "", "",
                _fmt(res.flow_mw[key]),
                _fmt(res.congestion_dual_eur_mwh[key]),
            ])


def read_dispatch_csv(fobj) -> dict[str, list[dict]]:
    """Parse a dispatch CSV back into bus and line records (floats restored)."""
    reader = csv.DictReader(fobj)
    if reader.fieldnames != DISPATCH_CSV_COLUMNS:
        raise ValueError(f"unexpected dispatch CSV header: {reader.fieldnames}")
    buses, lines = [], []
    for row in reader:
        hour = int(row["hour"])
        if row["kind"] == "bus":
            buses.append({
                "hour": hour,
                "bus": int(row["bus"]),
                "lmp_eur_mwh": float(row["lmp_eur_mwh"]),
                "p_g_mw": float(row["p_g_mw"]),
                "p_l_mw": float(row["p_l_mw"]),
                "p_flexreq_mw": float(row["p_flexreq_mw"]),
            })
        elif row["kind"] == "line":
            lines.append({
                "hour": hour,
                "line_from": int(row["line_from"]),
                "line_to": int(row["line_to"]),
                "flow_mw": float(row["flow_mw"]),
                "congestion_dual_eur_mwh": float(row["congestion_dual_eur_mwh"]),
            })
        else:
            raise ValueError(f"unknown row kind {row['kind']!r}")
    return {"buses": buses, "lines": lines}
