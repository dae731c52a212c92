"""
TrainStepReport records and the report stream.

The trainer is the single producer. Each subscriber owns a `queue.Queue` that
receives every report in order, followed by `None` once the stream closes.
"""

import json
import logging
import queue
import threading
from pathlib import Path
from typing import Iterator, Optional, Union

from pydantic import BaseModel

logger = logging.getLogger(__name__)


class TrainStepReport(BaseModel):
    iteration: int
    loss_d: float
    loss_g: float
    d_real_match: float
    d_real_mismatch: float
    d_fake_match: float
    swap_applied: bool
    collapse_warning: bool = False
    control: bool = False


class ReportStream:
    def __init__(self):
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()
        self._closed = False

    def subscribe(self) -> queue.Queue:
        q: queue.Queue[Optional[TrainStepReport]] = queue.Queue()
        with self._lock:
            if self._closed:
                q.put(None)
            else:
                self._subscribers.append(q)
        return q

    def publish(self, report: TrainStepReport) -> None:
        with self._lock:
            if self._closed:
                raise RuntimeError("report stream already closed")
            for q in self._subscribers:
                q.put(report)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for q in self._subscribers:
                q.put(None)
        logger.debug(f"Report stream closed ({len(self._subscribers)} subscribers)")

    @property
    def closed(self) -> bool:
        return self._closed


def drain(q: queue.Queue, timeout: Optional[float] = None) -> Iterator[TrainStepReport]:
    """Yield reports from a subscription until the closing sentinel."""
    while True:
        item = q.get(timeout=timeout)
        if item is None:
            return
        yield item


class JsonlReportWriter:
    """Appends one JSON line per report; flushes per line."""

    def __init__(self, path: Union[str, Path], append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a" if append else "w", encoding="utf-8", newline="\n")

    def write(self, report: TrainStepReport) -> None:
        self._fh.write(report.model_dump_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "JsonlReportWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_reports(path: Union[str, Path]) -> list[TrainStepReport]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [TrainStepReport.model_validate(json.loads(line)) for line in lines if line.strip()]
