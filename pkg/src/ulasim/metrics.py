"""Run accounting: counters, time series, summaries, report files.

Everything here is integer bookkeeping during the run; ratios only appear
at summarize time. Reports are rendered with fixed formatting (ratios at
six decimals, half-even) so reruns of the same scenario+seed produce
byte-identical files.

Time-series bucketing: row `s` (1-based) covers the interval
(s-1, s] seconds. An outcome at exactly t=0 lands in row 1; outcomes
after the horizon (in-flight drain) clamp into the final row.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .kernel import US_PER_S
from .scenario import IoFailure

# Column order is part of the file contract; do not reorder.
TIMESERIES_COLUMNS = (
    "second",
    "infected",
    "registered",
    "generated_total",
    "delivered_total",
    "drop_IsolatedSegment",
    "drop_UlaUnreachable",
    "drop_SpoofedSource",
    "drop_AclDeny",
    "drop_ThresholdConn",
    "drop_ThresholdPps",
    "drop_ThresholdBw",
    "drop_RateLimit",
    "drop_ShapeDrop",
    "victim_served_legit",
    "victim_offered_legit",
)

# Shaping-delay histogram bucket lower edges, us.
DELAY_BUCKET_EDGES = (
    0,
    1_000,
    2_000,
    5_000,
    10_000,
    20_000,
    50_000,
    100_000,
    200_000,
    500_000,
    1_000_000,
)


def _ratio6(numer: int, denom: int, zero_default: float) -> float:
    """Ratio rounded to six decimals (half-even via fixed formatting);
    `zero_default` covers the 0/0 case."""
    if denom == 0:
        return zero_default
    return float(f"{numer / denom:.6f}")


@dataclass(frozen=True, slots=True)
class RunSummary:
    victim_availability: float
    legit_drop_rate: float
    attack_delivery_rate: float
    peak_infected: int
    isolation_events: int
    total_isolated_time_s: float
    mean_shaping_delay_us: float
    max_shaping_delay_us: int


class MetricsLog:
    """All counters and series for one run.

    Counter groups are keyed by packet-class name and drop-reason name
    (plain strings, supplied by the caller) to keep this module free of
    imports from the traffic/defense layers.
    """

    def __init__(self, horizon_s: int, class_names: tuple[str, ...], drop_reasons: tuple[str, ...]):
        self.horizon_s = horizon_s
        self.class_names = class_names
        self.drop_reasons = drop_reasons
        n = horizon_s

        # per-second series (0-based cell i = row i+1)
        self.infected_inc = [0] * n
        self.registered_inc = [0] * n
        self.generated_series = [0] * n
        self.delivered_series = [0] * n
        self.drop_series = {r: [0] * n for r in drop_reasons}
        self.served_legit_series = [0] * n
        self.offered_legit_series = [0] * n  # legit arrivals at the victim

        # run totals
        self.generated = {c: 0 for c in class_names}
        self.delivered = {c: 0 for c in class_names}
        self.never_routed = {c: 0 for c in class_names}
        self.gw_drops = {c: {r: 0 for r in drop_reasons} for c in class_names}
        self.victim_drops = {c: {"link": 0, "queue": 0, "slots": 0} for c in class_names}
        self.victim_served = {c: 0 for c in class_names}
        self.victim_delivered = {c: 0 for c in class_names}

        self.infected_total = 0
        self.registered_total = 0

        # deliveries that crossed the gateway inbound (external origin to
        # an internal destination); must stay 0 under ingress filtering
        self.ingress_delivered = 0

        # per-segment gateway deliveries per second (isolation soundness checks)
        self.gw_delivered_by_segment: dict[int, list[int]] = {}

        # isolation bookkeeping
        self.isolation_events = 0
        self.isolation_intervals: dict[int, list[list[int]]] = {}  # seg -> [[start,until], ...]

        # shaping delay
        self.shape_count = 0
        self.shape_sum_us = 0
        self.shape_max_us = 0
        self.shape_hist = {edge: 0 for edge in DELAY_BUCKET_EDGES}

    # ---- bucketing ----

    def cell(self, t_us: int) -> int:
        """0-based series cell for an event at time t (row covers (s-1, s])."""
        bucket = (t_us + US_PER_S - 1) // US_PER_S  # ceil to the closing boundary
        if bucket < 1:
            bucket = 1
        if bucket > self.horizon_s:
            bucket = self.horizon_s
        return bucket - 1

    # ---- recording ----

    def record_generated(self, t_us: int, klass: str, count: int = 1) -> None:
        self.generated[klass] += count
        self.generated_series[self.cell(t_us)] += count

    def record_delivered(self, t_us: int, klass: str, count: int = 1) -> None:
        self.delivered[klass] += count
        self.delivered_series[self.cell(t_us)] += count

    def record_gw_delivered(self, t_us: int, segment_id: int, count: int = 1) -> None:
        """Delivery of a gateway-traversing packet attributed to a segment."""
        series = self.gw_delivered_by_segment.get(segment_id)
        if series is None:
            series = self.gw_delivered_by_segment[segment_id] = [0] * self.horizon_s
        series[self.cell(t_us)] += count

    def record_gw_drop(self, t_us: int, klass: str, reason: str, count: int = 1) -> None:
        self.gw_drops[klass][reason] += count
        self.drop_series[reason][self.cell(t_us)] += count

    def record_victim_drop(self, klass: str, cause: str, count: int = 1) -> None:
        self.victim_drops[klass][cause] += count

    def record_victim_delivered(self, klass: str, count: int = 1) -> None:
        self.victim_delivered[klass] += count

    def record_victim_served(self, t_us: int, klass: str, count: int = 1) -> None:
        self.victim_served[klass] += count
        if klass == "legit_request":
            self.served_legit_series[self.cell(t_us)] += count

    def record_legit_arrival(self, t_us: int, count: int = 1) -> None:
        self.offered_legit_series[self.cell(t_us)] += count

    def record_never_routed(self, klass: str, count: int = 1) -> None:
        self.never_routed[klass] += count

    def record_infection(self, t_us: int) -> None:
        self.infected_total += 1
        self.infected_inc[self.cell(t_us)] += 1

    def record_registration(self, t_us: int) -> None:
        self.registered_total += 1
        self.registered_inc[self.cell(t_us)] += 1

    def record_isolation(self, segment_id: int, start_us: int, until_us: int) -> None:
        """One detector trigger. Overlapping or touching intervals for a
        segment merge into a single reported span."""
        self.isolation_events += 1
        spans = self.isolation_intervals.setdefault(segment_id, [])
        if spans and start_us <= spans[-1][1]:
            if until_us > spans[-1][1]:
                spans[-1][1] = until_us
        else:
            spans.append([start_us, until_us])

    def record_shape_delay(self, delay_us: int, count: int = 1) -> None:
        self.shape_count += count
        self.shape_sum_us += delay_us * count
        if delay_us > self.shape_max_us:
            self.shape_max_us = delay_us
        edge = DELAY_BUCKET_EDGES[0]
        for e in DELAY_BUCKET_EDGES:
            if delay_us >= e:
                edge = e
            else:
                break
        self.shape_hist[edge] += count

    # ---- derived ----

    def total_gw_drops(self, klass: str) -> int:
        return sum(self.gw_drops[klass].values())

    def total_victim_drops(self, klass: str) -> int:
        return sum(self.victim_drops[klass].values())

    def isolated_time_us(self) -> int:
        """Total isolated time within the run, summed over segments."""
        horizon_us = self.horizon_s * US_PER_S
        total = 0
        for spans in self.isolation_intervals.values():
            for start, until in spans:
                total += max(0, min(until, horizon_us) - start)
        return total


def check_conservation(log: MetricsLog) -> None:
    """Per-class identity: generated = delivered + gateway drops +
    victim drops + never_routed. Raises AssertionError on violation."""
    problems = []
    for c in log.class_names:
        lhs = log.generated[c]
        rhs = (
            log.delivered[c]
            + log.total_gw_drops(c)
            + log.total_victim_drops(c)
            + log.never_routed[c]
        )
        if lhs != rhs:
            problems.append(f"{c}: generated={lhs} != accounted={rhs}")
    if problems:
        raise AssertionError("conservation violated: " + "; ".join(problems))


def summarize(log: MetricsLog) -> RunSummary:
    offered = log.generated.get("legit_request", 0)
    served = log.victim_served.get("legit_request", 0)
    legit_dropped = log.total_gw_drops("legit_request") + log.total_victim_drops("legit_request")

    attack_classes = ("attack_volumetric", "attack_syn", "attack_http")
    attack_generated = sum(log.generated[c] for c in attack_classes)
    attack_at_victim = sum(log.victim_delivered[c] for c in attack_classes)

    mean_delay = log.shape_sum_us / log.shape_count if log.shape_count else 0.0
    return RunSummary(
        victim_availability=_ratio6(served, offered, 1.0),
        legit_drop_rate=_ratio6(legit_dropped, offered, 0.0),
        attack_delivery_rate=_ratio6(attack_at_victim, attack_generated, 0.0),
        peak_infected=log.infected_total,
        isolation_events=log.isolation_events,
        total_isolated_time_s=float(f"{log.isolated_time_us() / US_PER_S:.6f}"),
        mean_shaping_delay_us=float(f"{mean_delay:.3f}"),
        max_shaping_delay_us=log.shape_max_us,
    )


# ---- report files ----


def _render_summary_json(summary: RunSummary) -> str:
    # Fixed key order and fixed float formatting keep the bytes stable.
    lines = [
        "{",
        f'  "victim_availability": {summary.victim_availability:.6f},',
        f'  "legit_drop_rate": {summary.legit_drop_rate:.6f},',
        f'  "attack_delivery_rate": {summary.attack_delivery_rate:.6f},',
        f'  "peak_infected": {summary.peak_infected},',
        f'  "isolation_events": {summary.isolation_events},',
        f'  "total_isolated_time_s": {summary.total_isolated_time_s:.6f},',
        f'  "mean_shaping_delay_us": {summary.mean_shaping_delay_us:.3f},',
        f'  "max_shaping_delay_us": {summary.max_shaping_delay_us}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def _render_timeseries_csv(log: MetricsLog) -> str:
    rows = [",".join(TIMESERIES_COLUMNS)]
    infected = 0
    registered = 0
    for i in range(log.horizon_s):
        infected += log.infected_inc[i]
        registered += log.registered_inc[i]
        cells = [
            str(i + 1),
            str(infected),
            str(registered),
            str(log.generated_series[i]),
            str(log.delivered_series[i]),
        ]
        for reason in (
            "IsolatedSegment",
            "UlaUnreachable",
            "SpoofedSource",
            "AclDeny",
            "ThresholdConn",
            "ThresholdPps",
            "ThresholdBw",
            "RateLimit",
            "ShapeDrop",
        ):
            cells.append(str(log.drop_series[reason][i]))
        cells.append(str(log.served_legit_series[i]))
        cells.append(str(log.offered_legit_series[i]))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def _render_isolation_csv(log: MetricsLog) -> str:
    rows = ["segment_id,start_s,end_s"]
    for seg_id in sorted(log.isolation_intervals):
        for start, until in log.isolation_intervals[seg_id]:
            rows.append(f"{seg_id},{start / US_PER_S:.6f},{until / US_PER_S:.6f}")
    return "\n".join(rows) + "\n"


def emit(summary: RunSummary, log: MetricsLog, out_dir: str | Path) -> dict[str, Path]:
    """Write summary.json, timeseries.csv, isolation.csv into out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "summary": out / "summary.json",
            "timeseries": out / "timeseries.csv",
            "isolation": out / "isolation.csv",
        }
        paths["summary"].write_bytes(_render_summary_json(summary).encode("utf-8"))
        paths["timeseries"].write_bytes(_render_timeseries_csv(log).encode("utf-8"))
        paths["isolation"].write_bytes(_render_isolation_csv(log).encode("utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot write reports under {out}: {exc}") from exc
    return paths
