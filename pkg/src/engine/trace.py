"""
Line-delimited JSON trace of a fit, one record per iteration.
"""

import json
import logging
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


class JsonlTraceWriter:
    """Streams iteration records to a file as they are produced"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None
        self.records_written = 0

    def __enter__(self) -> "JsonlTraceWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("w", encoding="utf-8")
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def write(
        self,
        iteration: int,
        error: float,
        best_error: float,
        collapsed: Optional[List[int]] = None,
        event: Optional[str] = None,
        **extra: Any,
    ) -> None:
        if self._handle is None:
            raise RuntimeError("Trace writer is not open")
        record: Dict[str, Any] = {
            "iteration": iteration,
            "error": float(error),
            "best_error": float(best_error),
            "collapsed": list(collapsed or []),
            "event": event,
        }
        record.update(extra)
        self._handle.write(json.dumps(record) + "\n")
        self.records_written += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            logger.debug(f"Wrote {self.records_written} trace records to {self.path}")


def read_trace(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Load every record of a trace file."""
    with Path(path).open(encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]
