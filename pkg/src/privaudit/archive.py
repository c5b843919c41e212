"""Policy snapshot acquisition and release-to-policy binding.

Snapshots arrive either from a datetime-negotiating archive endpoint
(online) or from a directory of pre-downloaded captures (offline, used by
tests and the pipeline). Either source exposes nearest-capture lookup;
`fetch_snapshots` walks three-month window boundaries over it.
"""

from __future__ import annotations

import calendar
import json
import threading
import time
from dataclasses import dataclass
from datetime import date, datetime, timezone
from email.utils import format_datetime, parsedate_to_datetime
from pathlib import Path
from typing import Callable

import requests

from .errors import ArchiveUnavailable, NoCaptures, NoPolicy

SNAPSHOT_DATE_FLOOR = date(1996, 1, 1)
# Data horizon for release dates; adjust for datasets that predate it.
RELEASE_DATE_FLOOR = date(2008, 1, 1)
WINDOW_MONTHS = 3


@dataclass
class PolicySnapshot:
    """A single archived capture of a policy page."""

    app_id: str
    source_url: str
    capture_date: date
    raw_html: bytes
    extracted_text: str = ""

    def __post_init__(self):
        if self.capture_date < SNAPSHOT_DATE_FLOOR:
            raise ValueError(
                f"capture_date {self.capture_date} precedes {SNAPSHOT_DATE_FLOOR}"
            )

    @property
    def policy_id(self) -> str:
        return f"{self.app_id}@{self.capture_date.isoformat()}"


@dataclass
class AppRelease:
    """One released version of an app, later bound to a policy snapshot."""

    app_id: str
    version_code: int
    release_date: date
    assigned_policy: PolicySnapshot | None = None
    policy_gap_days: int | None = None

    def __post_init__(self):
        if self.release_date < RELEASE_DATE_FLOOR:
            raise ValueError(
                f"release_date {self.release_date} precedes {RELEASE_DATE_FLOOR}"
            )


def add_months(d: date, months: int) -> date:
    """Calendar-safe month addition (day clamped to month length)."""
    month_index = d.month - 1 + months
    year = d.year + month_index // 12
    month = month_index % 12 + 1
    day = min(d.day, calendar.monthrange(year, month)[1])
    return date(year, month, day)


def window_boundaries(from_date: date, to_date: date) -> list[date]:
    """Three-month boundaries covering [from_date, to_date]."""
    out = []
    k = 0
    while True:
        boundary = add_months(from_date, WINDOW_MONTHS * k)
        if boundary > to_date:
            break
        out.append(boundary)
        k += 1
    return out


def fetch_snapshots(
    nearest: Callable[[date], PolicySnapshot | None],
    from_date: date,
    to_date: date,
) -> list[PolicySnapshot]:
    """Request the capture nearest to every window boundary.

    `nearest(day)` returns the closest capture to that day or None when the
    window has no capture (that window is simply skipped). Captures are
    deduplicated by capture day and returned sorted ascending.
    """
    if from_date > to_date:
        raise ValueError("from_date must not exceed to_date")
    seen: dict[date, PolicySnapshot] = {}
    for boundary in window_boundaries(from_date, to_date):
        snap = nearest(boundary)
        if snap is None:
            continue
        seen.setdefault(snap.capture_date, snap)
    if not seen:
        raise NoCaptures(f"no captures anywhere in {from_date}..{to_date}")
    return [seen[d] for d in sorted(seen)]


def load_captures(capture_dir: str | Path, app_id: str) -> list[PolicySnapshot]:
    """Read every capture in a fixture directory, sorted by capture date.

    Layout: <dir>/<YYYYMMDD>.html plus an optional <YYYYMMDD>.json sidecar
    carrying {"app_id", "url", "capture_date"}.
    """
    capture_dir = Path(capture_dir)
    snaps = []
    for html_path in sorted(capture_dir.glob("*.html")):
        source_url = ""
        capture = datetime.strptime(html_path.stem, "%Y%m%d").date()
        sidecar = html_path.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            source_url = meta.get("url", "")
            if meta.get("capture_date"):
                capture = date.fromisoformat(meta["capture_date"])
        snaps.append(PolicySnapshot(app_id, source_url, capture, html_path.read_bytes()))
    return sorted(snaps, key=lambda s: s.capture_date)


class FixtureStore:
    """Offline capture store rooted at <root>/<app_id>/<YYYYMMDD>.html."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cache: dict[str, list[PolicySnapshot]] = {}

    def captures(self, app_id: str) -> list[PolicySnapshot]:
        if app_id not in self._cache:
            self._cache[app_id] = load_captures(self.root / app_id, app_id)
        return self._cache[app_id]

    def nearest(self, app_id: str, when: date) -> PolicySnapshot | None:
        snaps = self.captures(app_id)
        if not snaps:
            return None
        return min(snaps, key=lambda s: (abs((s.capture_date - when).days), s.capture_date))

    def fetch(self, app_id: str, from_date: date, to_date: date) -> list[PolicySnapshot]:
        return fetch_snapshots(lambda d: self.nearest(app_id, d), from_date, to_date)


class TimeGateClient:
    """Datetime-negotiating client for a Memento-style archive endpoint.

    Requests are serialized per host and retried a bounded number of times;
    persistent transport failure raises ArchiveUnavailable.
    """

    def __init__(
        self,
        base_url: str,
        retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = session or requests.Session()
        self._lock = threading.Lock()

    def nearest(self, url: str, when: date, app_id: str = "") -> PolicySnapshot | None:
        accept = format_datetime(
            datetime(when.year, when.month, when.day, 12, tzinfo=timezone.utc),
            usegmt=True,
        )
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            try:
                with self._lock:
                    resp = self._session.get(
                        f"{self.base_url}/{url}",
                        headers={"Accept-Datetime": accept},
                        timeout=self.timeout,
                        allow_redirects=True,
                    )
            except requests.RequestException as exc:
                last_exc = exc
                time.sleep(self.backoff * (2 ** attempt))
                continue
            if resp.status_code == 404:
                return None
            if resp.status_code >= 500:
                last_exc = ArchiveUnavailable(f"HTTP {resp.status_code} from archive")
                time.sleep(self.backoff * (2 ** attempt))
                continue
            if resp.status_code != 200:
                return None
            memento = resp.headers.get("Memento-Datetime")
            capture = parsedate_to_datetime(memento).date() if memento else when
            return PolicySnapshot(app_id, url, capture, resp.content)
        raise ArchiveUnavailable(f"archive unreachable for {url}: {last_exc}")

    def fetch(
        self, url: str, from_date: date, to_date: date, app_id: str = ""
    ) -> list[PolicySnapshot]:
        return fetch_snapshots(lambda d: self.nearest(url, d, app_id), from_date, to_date)


def assign_policy_to_release(
    release: AppRelease, snapshots: list[PolicySnapshot]
) -> PolicySnapshot:
    """Bind a release to the earliest capture on or after its release date.

    When no later capture exists the latest one is used (current policy
    mapped backwards). The signed day gap (capture - release) is recorded
    on the release; it is negative under the fallback.
    """
    if not snapshots:
        raise NoPolicy(f"no snapshots available for {release.app_id}")
    chosen = next(
        (s for s in snapshots if s.capture_date >= release.release_date),
        snapshots[-1],
    )
    release.assigned_policy = chosen
    release.policy_gap_days = (chosen.capture_date - release.release_date).days
    return chosen
