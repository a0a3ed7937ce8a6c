"""Domain types for networks, offers, utilities and price caps.

Types are frozen dataclasses and deliberately dumb: constructors accept any
values, and ``validate_network`` / ``validate_market_data`` report every
violated invariant as a human-readable string.  Violations are data, not
faults, so callers (the CLI ``validate`` command in particular) can list all
of them at once instead of dying on the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

UNLIMITED = math.inf

HOURS = range(1, 25)


class UnknownBusError(KeyError):
    """A query referenced a bus id that is not part of the network."""


@dataclass(frozen=True)
class Bus:
    id: int
    is_slack: bool = False
    price_constrained: bool = False


@dataclass(frozen=True)
class Line:
    """A branch with per-unit reactance and an optional MW flow limit.

    ``flow_limit_mw`` is ``math.inf`` for an unbounded line.
    """
    from_bus: int
    to_bus: int
    reactance_pu: float
    flow_limit_mw: float = UNLIMITED

    @property
    def key(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]

    def __init__(self, buses, lines=()):
        object.__setattr__(self, "buses", tuple(buses))
        object.__setattr__(self, "lines", tuple(lines))

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def slack_bus(self) -> int:
        for b in self.buses:
            if b.is_slack:
                return b.id
        raise UnknownBusError("network has no slack bus")

    def price_constrained_buses(self) -> set[int]:
        return {b.id for b in self.buses if b.price_constrained}


@dataclass(frozen=True)
class GenOffer:
    """A generation source: marginal cost a (EUR/MWh), constant cost c (EUR/h).

    The constant cost shifts the objective value only; it can never change
    the dispatch.
    """
    bus: int
    marginal_cost: float
    constant_cost: float = 0.0
    capacity_mw: float = UNLIMITED


@dataclass(frozen=True)
class LoadUtility:
    """A load with linear utility b (EUR/MWh) and consumption bounds in MW."""
    bus: int
    marginal_utility: float
    constant_utility: float = 0.0
    p_min_mw: float = 0.0
    p_max_mw: float = 0.0


@dataclass(frozen=True)
class PriceCap:
    """Maximum willingness to pay at a price-constrained bus.

    ``cap_eur_per_mwh`` is either a scalar (broadcast to all 24 hours) or a
    24-tuple of hourly values.
    """
    bus: int
    cap_eur_per_mwh: float | tuple[float, ...]

    def cap_for_hour(self, hour: int) -> float:
        if isinstance(self.cap_eur_per_mwh, tuple):
            return self.cap_eur_per_mwh[hour - 1]
        return self.cap_eur_per_mwh

    def caps(self) -> tuple[float, ...]:
        if isinstance(self.cap_eur_per_mwh, tuple):
            return self.cap_eur_per_mwh
        return (self.cap_eur_per_mwh,) * 24


@dataclass(frozen=True)
class HourlyMarketData:
    hour: int
    offers: tuple[GenOffer, ...] = ()
    utilities: tuple[LoadUtility, ...] = ()

    def __init__(self, hour, offers=(), utilities=()):
        object.__setattr__(self, "hour", hour)
        object.__setattr__(self, "offers", tuple(offers))
        object.__setattr__(self, "utilities", tuple(utilities))

    def offer_at(self, bus: int) -> GenOffer | None:
        for o in self.offers:
            if o.bus == bus:
                return o
        return None

    def utility_at(self, bus: int) -> LoadUtility | None:
        for u in self.utilities:
            if u.bus == bus:
                return u
        return None


def neighbors(net: Network, bus_id: int) -> set[int]:
    """Buses adjacent to ``bus_id``; symmetric by construction."""
    known = set(net.bus_ids())
    if bus_id not in known:
        raise UnknownBusError(f"bus {bus_id} not in network")
    adjacent = set()
    for line in net.lines:
        if line.from_bus == bus_id:
            adjacent.add(line.to_bus)
        elif line.to_bus == bus_id:
            adjacent.add(line.from_bus)
    return adjacent


def validate_network(net: Network) -> list[str]:
    """Every violated network invariant, with the offending element named."""
    problems: list[str] = []
    if not net.buses:
        problems.append("empty network")

    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        problems.append("duplicate bus ids")
    if net.buses and sorted(set(ids)) != list(range(1, len(set(ids)) + 1)):
        problems.append("bus ids are not dense 1-based indices")

    slack = [b.id for b in net.buses if b.is_slack]
    if not slack:
        problems.append("no slack bus")
    elif len(slack) > 1:
        problems.append(f"multiple slack buses: {slack}")

    known = set(ids)
    seen_pairs: set[tuple[int, int]] = set()
    for line in net.lines:
        tag = f"line {line.from_bus}-{line.to_bus}"
        if line.from_bus == line.to_bus:
            problems.append(f"{tag}: self loop")
        for end in (line.from_bus, line.to_bus):
            if end not in known:
                problems.append(f"{tag}: unknown bus {end}")
        pair = (min(line.from_bus, line.to_bus), max(line.from_bus, line.to_bus))
        if pair in seen_pairs:
            problems.append(f"{tag}: duplicate line between buses {pair[0]} and {pair[1]}")
        seen_pairs.add(pair)
        if not line.reactance_pu > 0:
            problems.append(f"{tag}: reactance_pu must be > 0, got {line.reactance_pu}")
        if not line.flow_limit_mw > 0:
            problems.append(f"{tag}: flow_limit_mw must be > 0, got {line.flow_limit_mw}")

    if len(slack) == 1 and not _blocks_reachability(problems):
        unreachable = _unreachable_from(net, slack[0])
        for b in sorted(unreachable):
            problems.append(f"bus {b} unreachable from slack")

    return problems


def _blocks_reachability(problems: list[str]) -> bool:
    return any("unknown bus" in p or "duplicate bus ids" in p for p in problems)


def _unreachable_from(net: Network, start: int) -> set[int]:
    todo = [start]
    seen = {start}
    while todo:
        here = todo.pop()
        for nxt in neighbors(net, here):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return set(net.bus_ids()) - seen


def validate_market_data(net: Network, data: HourlyMarketData) -> list[str]:
    """Invariants of one hour of market data against a network."""
    problems: list[str] = []
    known = set(net.bus_ids())
    tag = f"hour {data.hour}"
    if data.hour not in HOURS:
        problems.append(f"{tag}: hour must be in 1..24")

    offer_buses: list[int] = []
    for o in data.offers:
        if o.bus not in known:
            problems.append(f"{tag}: offer references unknown bus {o.bus}")
        if o.bus in offer_buses:
            problems.append(f"{tag}: more than one offer at bus {o.bus}")
        offer_buses.append(o.bus)
        if o.marginal_cost < 0:
            problems.append(f"{tag}: offer at bus {o.bus} has negative marginal cost")
        if o.capacity_mw < 0:
            problems.append(f"{tag}: offer at bus {o.bus} has negative capacity")

    utility_buses: list[int] = []
    for u in data.utilities:
        if u.bus not in known:
            problems.append(f"{tag}: utility references unknown bus {u.bus}")
        if u.bus in utility_buses:
            problems.append(f"{tag}: more than one utility at bus {u.bus}")
        utility_buses.append(u.bus)
        if not 0 <= u.p_min_mw <= u.p_max_mw:
            problems.append(
                f"{tag}: load bounds at bus {u.bus} must satisfy 0 <= min <= max, "
                f"got [{u.p_min_mw}, {u.p_max_mw}]")

    return problems


def validate_price_cap(net: Network, cap: PriceCap) -> list[str]:
    problems: list[str] = []
    if cap.bus not in set(net.bus_ids()):
        problems.append(f"price cap references unknown bus {cap.bus}")
    elif cap.bus not in net.price_constrained_buses():
        problems.append(f"price cap at bus {cap.bus} which is not price constrained")
    values = cap.cap_eur_per_mwh
    if isinstance(values, tuple):
        if len(values) != 24:
            problems.append(f"price cap at bus {cap.bus}: need 24 hourly values, got {len(values)}")
        if any(v < 0 for v in values):
            problems.append(f"price cap at bus {cap.bus}: negative cap value")
    elif values < 0:
        problems.append(f"price cap at bus {cap.bus}: negative cap value")
    return problems
