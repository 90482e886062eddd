"""Traffic state, the three-case insertion protocol, and congestion prediction.

Occupancy is tracked per (subsector, time bucket) as the set of distinct
flights whose segments overlap the bucket.  A new flight's segments are
classified before insertion:

* Case 1 - every touched bucket has headroom: the flight adds itself.
* Case 2 - some bucket would exceed its capacity: the involved flights
  negotiate the cheapest set of plan changes.
* Case 3 - a segment crosses a closed or zero-capacity bucket: treated
  like Case 2, but the violation is hard.

Negotiation searches assignments where each involved flight keeps its
plan, switches to an alternate, or takes an extra departure delay from a
fixed menu, with a bound on how many flights may deviate.  The objective
is the least global set of changes: total changed segments, then number
of changed flights, then deviating the least important flights first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

from .airspace import GridSpec, StormCell, Subsector, bucket_capacity
from .errors import ConflictError, NotFoundError, PreconditionError, ValidationError
from .nearness import TimeInterval
from .trajectory import FlightPlan, TrajectorySegment, plan_segments

DELAY_MENU: tuple[float, ...] = (300.0, 600.0, 900.0)
MAX_CHANGED_FLIGHTS = 3

#: A (subsector index, bucket start) pair naming one congestion slot.
Spot = tuple[tuple[int, int], float]


class CaseKind(Enum):
    Case1 = 1
    Case2 = 2
    Case3 = 3


@dataclass(frozen=True)
class Classification:
    kind: CaseKind
    spots: tuple[Spot, ...] = ()


class InsertStatus(Enum):
    Accepted = "accepted"
    Rerouted = "rerouted"
    Rejected = "rejected"


@dataclass(frozen=True)
class RouteChoice:
    """One flight's deviation: chosen route (-1 = filed) plus extra delay."""

    flight_id: str
    route_index: int = -1
    added_delay: float = 0.0


@dataclass(frozen=True)
class InsertOutcome:
    status: InsertStatus
    changed_flights: tuple[str, ...] = ()
    new_plans: tuple[RouteChoice, ...] = ()
    reason: str = ""
    violated: Spot | None = None


@dataclass(frozen=True)
class CongestionRecord:
    subsector: tuple[int, int]
    bucket_start: float
    occupancy: int
    capacity: int
    flight_ids: tuple[str, ...]

    @property
    def congested(self) -> bool:
        return self.occupancy > self.capacity


@dataclass(frozen=True)
class Resolution:
    """Feasible negotiation result: the deviations plus their cost."""

    choices: tuple[RouteChoice, ...]
    objective: tuple


@dataclass(frozen=True)
class WeatherEvent:
    kind: str  # capacity-drop | reroute | bumped | excess
    subsector: tuple[int, int]
    bucket_start: float
    flight_ids: tuple[str, ...] = ()
    detail: str = ""


@dataclass
class FlightAccount:
    plan: FlightPlan
    route_index: int = -1
    added_delay: float = 0.0
    version: int = 1
    segments: tuple[TrajectorySegment, ...] = ()


def _objective(assignment: dict, deviators: tuple[str, ...],
               ranks: dict[str, int]) -> tuple:
    """Total order over negotiation assignments, smaller is better.

    Compares total changed segments, then the number of changed flights,
    then prefers deviating the lowest-priority flights, then breaks the
    remaining ties on flight ids and chosen options so the optimum is
    unique and deterministic.
    """
    total_changed = sum(choice[2] for choice in assignment.values())
    rank_key = tuple(sorted((ranks[fid] for fid in deviators), reverse=True))
    ids = tuple(sorted(deviators))
    option_tags = tuple((assignment[fid][0].route_index, assignment[fid][0].added_delay)
                        for fid in ids)
    return (total_changed, len(deviators), rank_key, ids, option_tags)


class AirspaceState:
    """Mutable traffic picture over one grid.

    All mutation happens through :meth:`try_insert`, :meth:`advance_weather`
    and the helpers they call; reads are pure.
    """

    def __init__(self, grid: GridSpec, bucket_seconds: float = 60.0,
                 calm_capacity: int = 6, severe_capacity: int = 3,
                 storms: tuple[StormCell, ...] = (),
                 closures: dict[tuple[int, int], tuple[TimeInterval, ...]] | None = None,
                 horizon_seconds: float = 14400.0, now: float = 0.0):
        if bucket_seconds <= 0:
            raise ValidationError("bucket_seconds must be positive", "bucket_seconds")
        if horizon_seconds <= 0:
            raise ValidationError("horizon_seconds must be positive", "horizon_seconds")
        self.grid = grid
        self.bucket_seconds = bucket_seconds
        self.calm_capacity = calm_capacity
        self.severe_capacity = severe_capacity
        self.storms: tuple[StormCell, ...] = tuple(storms)
        self.closures = dict(closures or {})
        self.horizon_seconds = horizon_seconds
        self.now = now
        self.flights: dict[str, FlightAccount] = {}
        self._occ: dict[Spot, set[str]] = {}

    # -- geometry and bookkeeping -----------------------------------------

    def subsector(self, col: int, row: int) -> Subsector:
        return Subsector(
            index=(col, row),
            bounds=self.grid.cell_bounds(col, row),
            calm_capacity=self.calm_capacity,
            severe_capacity=self.severe_capacity,
            closed_intervals=self.closures.get((col, row), ()),
        )

    def bucket_interval(self, bucket_start: float) -> TimeInterval:
        return TimeInterval(bucket_start, bucket_start + self.bucket_seconds)

    def buckets_over(self, entry: float, exit: float) -> list[float]:
        """Starts of the buckets a half-open [entry, exit) interval overlaps."""
        dt = self.bucket_seconds
        first = math.floor(entry / dt)
        last = math.ceil(exit / dt)
        return [i * dt for i in range(first, last)]

    def segment_spots(self, segments) -> list[Spot]:
        spots: set[Spot] = set()
        for seg in segments:
            for b in self.buckets_over(seg.entry, seg.exit):
                spots.add((seg.subsector, b))
        return sorted(spots)

    def occupancy(self, subsector: tuple[int, int], bucket_start: float) -> int:
        return len(self._occ.get((subsector, bucket_start), ()))

    def flights_in(self, subsector: tuple[int, int], bucket_start: float) -> tuple[str, ...]:
        return tuple(sorted(self._occ.get((subsector, bucket_start), ())))

    def capacity(self, subsector: tuple[int, int], bucket_start: float) -> int:
        return bucket_capacity(self.subsector(*subsector),
                               self.bucket_interval(bucket_start), self.storms)

    def _add_segments(self, flight_id: str, segments) -> None:
        for spot in self.segment_spots(segments):
            self._occ.setdefault(spot, set()).add(flight_id)

    def _remove_segments(self, flight_id: str, segments) -> None:
        for spot in self.segment_spots(segments):
            members = self._occ.get(spot)
            if members is not None:
                members.discard(flight_id)
                if not members:
                    del self._occ[spot]

    def effective_segments(self, plan: FlightPlan, route_index: int = -1,
                           added_delay: float = 0.0, version: int = 1,
                           ) -> tuple[TrajectorySegment, ...]:
        return tuple(plan_segments(plan, self.grid, route_index, added_delay, version))

    def is_en_route(self, flight_id: str) -> bool:
        account = self.flights[flight_id]
        return bool(account.segments) and account.segments[0].entry < self.now

    # -- classification ----------------------------------------------------

    def classify_insert(self, segments) -> Classification:
        """Sort a proposed segment list into one of the three insert cases."""
        hard: list[Spot] = []
        soft: list[Spot] = []
        for spot in self.segment_spots(segments):
            cap = self.capacity(*spot)
            if cap == 0:
                hard.append(spot)
            elif self.occupancy(*spot) + 1 > cap:
                soft.append(spot)
        if hard:
            return Classification(CaseKind.Case3, tuple(hard))
        if soft:
            return Classification(CaseKind.Case2, tuple(soft))
        return Classification(CaseKind.Case1)

    # -- insertion ----------------------------------------------------------

    def try_insert(self, plan: FlightPlan) -> InsertOutcome:
        """Add a flight, negotiating plan changes when it would congest."""
        if plan.flight_id in self.flights:
            raise ConflictError(f"flight already present: {plan.flight_id}")
        proposed = self.effective_segments(plan)
        verdict = self.classify_insert(proposed)
        if verdict.kind is CaseKind.Case1:
            self.flights[plan.flight_id] = FlightAccount(plan=plan, segments=proposed)
            self._add_segments(plan.flight_id, proposed)
            return InsertOutcome(InsertStatus.Accepted)
        resolution = self.negotiate(verdict.spots, plan)
        if resolution is None:
            spot = verdict.spots[0]
            return InsertOutcome(
                InsertStatus.Rejected,
                reason=f"no feasible plan: subsector={spot[0]} bucket={spot[1]:g} "
                       f"occupancy={self.occupancy(*spot)} capacity={self.capacity(*spot)}",
                violated=spot)
        changed = self.apply_resolution(resolution, arriving=plan)
        return InsertOutcome(InsertStatus.Rerouted, changed_flights=changed,
                             new_plans=resolution.choices)

    def remove_flight(self, flight_id: str) -> None:
        account = self.flights.pop(flight_id, None)
        if account is None:
            raise NotFoundError(flight_id)
        self._remove_segments(flight_id, account.segments)

    # -- negotiation ---------------------------------------------------------

    def _options_for(self, plan: FlightPlan,
                     current_route: int, current_delay: float,
                     current_segments: tuple[TrajectorySegment, ...],
                     mutable: bool,
                     delay_menu: tuple[float, ...]) -> list[tuple[RouteChoice, tuple, int]]:
        """(choice, segments, changed-count) triples, keep-option first.

        Changed count is the number of proposed segments absent from the
        flight's current placement, compared by (cell, entry, exit).
        """
        current_set = {(s.subsector, s.entry, s.exit) for s in current_segments}

        def cost(segments) -> int:
            return sum(1 for s in segments
                       if (s.subsector, s.entry, s.exit) not in current_set)

        keep = RouteChoice(plan.flight_id, current_route, current_delay)
        options = [(keep, current_segments, 0)]
        if not mutable:
            return options
        for alt_index in range(len(plan.alternates)):
            segments = self.effective_segments(plan, alt_index, current_delay)
            options.append((RouteChoice(plan.flight_id, alt_index, current_delay),
                            segments, cost(segments)))
        for extra in delay_menu:
            delay = current_delay + extra
            segments = self.effective_segments(plan, current_route, delay)
            options.append((RouteChoice(plan.flight_id, current_route, delay),
                            segments, cost(segments)))
        return options

    def negotiate(self, conflicts: tuple[Spot, ...] | list[Spot],
                  arriving: FlightPlan | None,
                  max_changed: int = MAX_CHANGED_FLIGHTS,
                  delay_menu: tuple[float, ...] = DELAY_MENU) -> Resolution | None:
        """Search for the least global set of changes resolving the conflicts.

        Involved flights are the arriving one plus every current occupant of
        a conflicted spot.  Returns the optimal feasible assignment, or None
        when no assignment within the deviation bound restores headroom.
        """
        if not conflicts:
            raise PreconditionError("negotiate requires at least one conflict")
        conflict_spots = tuple(sorted(set(conflicts)))

        occupants: set[str] = set()
        for spot in conflict_spots:
            occupants |= self._occ.get(spot, set())
        involved: list[str] = sorted(occupants)
        options: dict[str, list[tuple[RouteChoice, tuple, int]]] = {}
        current: dict[str, tuple[TrajectorySegment, ...]] = {}
        ranks: dict[str, int] = {}
        for fid in involved:
            account = self.flights[fid]
            current[fid] = account.segments
            ranks[fid] = account.plan.priority_rank
            options[fid] = self._options_for(
                account.plan, account.route_index, account.added_delay,
                account.segments, mutable=not self.is_en_route(fid),
                delay_menu=delay_menu)
        arriving_id = None
        if arriving is not None:
            arriving_id = arriving.flight_id
            proposed = self.effective_segments(arriving)
            current[arriving_id] = proposed
            ranks[arriving_id] = arriving.priority_rank
            options[arriving_id] = self._options_for(
                arriving, -1, 0.0, proposed, mutable=True, delay_menu=delay_menu)
            involved = sorted(involved + [arriving_id])

        best: tuple | None = None
        best_choices: tuple[RouteChoice, ...] | None = None
        max_devs = min(max_changed, len(involved))
        for k in range(0, max_devs + 1):
            for deviators in itertools.combinations(involved, k):
                non_keep = [options[fid][1:] for fid in deviators]
                if any(not opts for opts in non_keep):
                    continue
                for picks in itertools.product(*non_keep):
                    assignment = dict(zip(deviators, picks))
                    if not self._feasible(assignment, current, arriving_id,
                                          conflict_spots):
                        continue
                    objective = _objective(assignment, deviators, ranks)
                    if best is None or objective < best:
                        best = objective
                        best_choices = tuple(assignment[fid][0]
                                             for fid in sorted(assignment))
        if best is None:
            return None
        return Resolution(choices=best_choices, objective=best)

    def _rank_of(self, flight_id: str) -> int:
        account = self.flights.get(flight_id)
        return account.plan.priority_rank if account is not None else 0

    def _feasible(self, assignment, current, arriving_id, conflict_spots) -> bool:
        """Check every touched or already-conflicted spot against capacity."""
        removed: dict[Spot, set[str]] = {}
        added: dict[Spot, set[str]] = {}
        touched: set[Spot] = set(conflict_spots)
        for fid, (choice, segments, _cost) in assignment.items():
            for spot in self.segment_spots(current[fid]):
                removed.setdefault(spot, set()).add(fid)
                touched.add(spot)
            for spot in self.segment_spots(segments):
                added.setdefault(spot, set()).add(fid)
                touched.add(spot)
        if arriving_id is not None and arriving_id not in assignment:
            for spot in self.segment_spots(current[arriving_id]):
                added.setdefault(spot, set()).add(arriving_id)
                touched.add(spot)
        for spot in touched:
            occupants = set(self._occ.get(spot, set()))
            occupants -= removed.get(spot, set())
            # The arriving flight is not in the base occupancy map.
            occupants -= {arriving_id}
            occupants |= added.get(spot, set())
            if len(occupants) > self.capacity(*spot):
                return False
        return True

    def apply_resolution(self, resolution: Resolution,
                         arriving: FlightPlan | None) -> tuple[str, ...]:
        """Apply all deviations atomically; returns the changed flight ids."""
        changed: list[str] = []
        arrived = False
        for choice in resolution.choices:
            fid = choice.flight_id
            if arriving is not None and fid == arriving.flight_id:
                segments = self.effective_segments(
                    arriving, choice.route_index, choice.added_delay)
                self.flights[fid] = FlightAccount(
                    plan=arriving, route_index=choice.route_index,
                    added_delay=choice.added_delay, segments=segments)
                self._add_segments(fid, segments)
                arrived = True
            else:
                account = self.flights[fid]
                self._remove_segments(fid, account.segments)
                account.route_index = choice.route_index
                account.added_delay = choice.added_delay
                account.version += 1
                account.segments = self.effective_segments(
                    account.plan, choice.route_index, choice.added_delay,
                    version=account.version)
                self._add_segments(fid, account.segments)
            changed.append(fid)
        if arriving is not None and not arrived:
            segments = self.effective_segments(arriving)
            self.flights[arriving.flight_id] = FlightAccount(
                plan=arriving, segments=segments)
            self._add_segments(arriving.flight_id, segments)
        return tuple(sorted(changed))

    # -- weather reaction ----------------------------------------------------

    def set_storms(self, storms: tuple[StormCell, ...]) -> None:
        self.storms = tuple(storms)

    def advance_weather(self, to_time: float) -> list[WeatherEvent]:
        """Re-check capacity under the current storm picture.

        Each future bucket whose occupancy now exceeds its capacity triggers
        a negotiation among the residents; when none succeeds, the least
        important resident flights are bumped (their outcome becomes a
        rejection) until the remaining traffic fits, leaving any excess by
        immovable en-route flights reported rather than resolved.
        """
        if to_time < self.now:
            raise PreconditionError(f"cannot rewind weather from {self.now} to {to_time}")
        self.now = to_time
        events: list[WeatherEvent] = []
        violations = self._capacity_violations()
        if not violations:
            return events
        for spot in violations:
            events.append(WeatherEvent(
                "capacity-drop", spot[0], spot[1],
                flight_ids=self.flights_in(*spot),
                detail=f"occupancy={self.occupancy(*spot)} capacity={self.capacity(*spot)}"))
        resolution = self.negotiate(violations, arriving=None)
        if resolution is not None:
            changed = self.apply_resolution(resolution, arriving=None)
            for fid in changed:
                account = self.flights[fid]
                events.append(WeatherEvent(
                    "reroute", violations[0][0], violations[0][1], (fid,),
                    detail=f"route={account.route_index} delay={account.added_delay:g}"))
            return events
        events.extend(self._bump_excess(violations))
        return events

    def _capacity_violations(self) -> tuple[Spot, ...]:
        window_end = self.now + self.horizon_seconds
        out = []
        for spot in sorted(self._occ):
            start = spot[1]
            if start + self.bucket_seconds <= self.now or start >= window_end:
                continue
            if self.occupancy(*spot) > self.capacity(*spot):
                out.append(spot)
        return tuple(out)

    def _bump_excess(self, violations: tuple[Spot, ...]) -> list[WeatherEvent]:
        events: list[WeatherEvent] = []
        for spot in violations:
            while self.occupancy(*spot) > self.capacity(*spot):
                movable = [f for f in self.flights_in(*spot) if not self.is_en_route(f)]
                if not movable:
                    events.append(WeatherEvent(
                        "excess", spot[0], spot[1], self.flights_in(*spot),
                        detail=f"en-route occupancy {self.occupancy(*spot)} exceeds "
                               f"capacity {self.capacity(*spot)}"))
                    break
                bumped = min(movable, key=lambda f: (self._rank_of(f), f))
                self.remove_flight(bumped)
                events.append(WeatherEvent(
                    "bumped", spot[0], spot[1], (bumped,),
                    detail="capacity lost to severe weather"))
        return events

    # -- prediction ------------------------------------------------------------

    def predict_congestion(self, now: float | None = None,
                           horizon: float | None = None,
                           include_empty: bool = False) -> list[CongestionRecord]:
        """Occupancy/capacity records for every bucket in the look-ahead window."""
        if now is None:
            now = self.now
        if horizon is None:
            horizon = self.horizon_seconds
        if horizon <= 0:
            raise PreconditionError("horizon must be positive")
        dt = self.bucket_seconds
        first = math.floor(now / dt)
        window_end = now + horizon
        records: list[CongestionRecord] = []
        if include_empty:
            spots = []
            i = first
            while i * dt < window_end:
                for cell in self.grid.all_cells():
                    spots.append((cell, i * dt))
                i += 1
        else:
            spots = [s for s in self._occ
                     if s[1] >= first * dt and s[1] < window_end]
        for spot in spots:
            flights = self.flights_in(*spot)
            records.append(CongestionRecord(
                subsector=spot[0], bucket_start=spot[1],
                occupancy=len(flights), capacity=self.capacity(*spot),
                flight_ids=flights))
        records.sort(key=lambda r: (r.bucket_start, r.subsector[0], r.subsector[1]))
        return records
